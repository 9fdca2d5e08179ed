//! Stationary matching at the step for left- and right-incident beams.
//!
//! A solution is stored as the four plane-wave amplitudes
//!
//! ```text
//! x <  0:  a+ e^{+i k1 x} + a- e^{-i k1 x}
//! x >= 0:  b+ e^{+i k2 x} + b- e^{-i k2 x}
//! ```
//!
//! A left-incident beam has `a+ = 1`, `a- = A` and a single region-II wave of
//! amplitude `B`. Inside the Klein zone that wave is `B e^{-i k2 x}` (region-II
//! charge is negative, so this is the branch carrying positive charge away from
//! the step); above the barrier it is the ordinary `B e^{+i k2 x}`; in the
//! evanescent window `k2 = i kappa` and `e^{+i k2 x} = e^{-kappa x}` decays.
//!
//! The right-incident (virtual) beam has `b+ = 1`, `b- = C`, `a- = D`.

use num::complex::Complex64;
use serde::Serialize;

use crate::compensated::DoubleDouble;
use crate::error::{Error, Result};
use crate::kinematics::{
    classify_regime, effective_momenta, k1_squared, k2_squared, momenta_coincide, BeamEnergy,
    MomentumPair, PhysicalSetup, Regime,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Incidence {
    LeftIncident,
    RightIncident,
}

/// Reflection and transmission coefficients, `R = |j_r / j_i|`, `T = j_t / j_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoeffPair {
    #[serde(rename = "R")]
    pub reflection: f64,
    #[serde(rename = "T")]
    pub transmission: f64,
}

/// Probability currents of the three beams, in units of momentum / mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurrentTriple {
    pub incident: f64,
    pub reflected: f64,
    pub transmitted: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Origin {
    /// Produced by a solver; carries the closed-form coefficients.
    Solver(CoeffPair),
    /// Hand-assembled amplitudes.
    Manual,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringSolution {
    setup: PhysicalSetup,
    energy: BeamEnergy,
    momenta: MomentumPair,
    direction: Incidence,
    regime: Regime,
    incident_amp: Complex64,
    reflected_amp: Complex64,
    transmitted_amp: Complex64,
    origin: Origin,
}

/// `-1` when the region-II transmitted wave is `e^{-i k2 x}`, `+1` otherwise.
fn region_two_sign(setup: &PhysicalSetup, beam: BeamEnergy) -> f64 {
    if setup.barrier_height() - beam.value() > setup.mass() {
        -1.0
    } else {
        1.0
    }
}

impl ScatteringSolution {
    /// Assembles a solution from explicit amplitudes, bypassing the matching
    /// conditions. Useful for diagnostics and for scaled or zero beams.
    ///
    /// Right-incident beams are only defined inside the Klein zone.
    pub fn with_amplitudes(
        setup: PhysicalSetup,
        energy: BeamEnergy,
        direction: Incidence,
        incident: Complex64,
        reflected: Complex64,
        transmitted: Complex64,
    ) -> Result<Self> {
        let regime = classify_regime(&setup, energy);
        let momenta = effective_momenta(&setup, energy)?;
        if direction == Incidence::RightIncident && regime != Regime::KleinZone {
            return Err(Error::UnsupportedRegime {
                regime,
                reason: "a right-incident beam needs a propagating region-II mode (Klein zone)",
            });
        }
        Ok(Self {
            setup,
            energy,
            momenta,
            direction,
            regime,
            incident_amp: incident,
            reflected_amp: reflected,
            transmitted_amp: transmitted,
            origin: Origin::Manual,
        })
    }

    pub fn setup(&self) -> &PhysicalSetup {
        &self.setup
    }

    pub fn energy(&self) -> BeamEnergy {
        self.energy
    }

    pub fn momenta(&self) -> &MomentumPair {
        &self.momenta
    }

    pub fn direction(&self) -> Incidence {
        self.direction
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn incident_amp(&self) -> Complex64 {
        self.incident_amp
    }

    /// `A` for a left-incident beam, `C` for a right-incident one.
    pub fn reflected_amp(&self) -> Complex64 {
        self.reflected_amp
    }

    /// `B` for a left-incident beam, `D` for a right-incident one.
    pub fn transmitted_amp(&self) -> Complex64 {
        self.transmitted_amp
    }

    /// The right-incident beam is the unobservable virtual beam.
    pub fn is_virtual(&self) -> bool {
        self.direction == Incidence::RightIncident
    }

    /// `(a+, a-, b+, b-)` in the module-level notation.
    fn pieces(&self) -> [Complex64; 4] {
        let zero = Complex64::new(0.0, 0.0);
        match self.direction {
            Incidence::LeftIncident => {
                if region_two_sign(&self.setup, self.energy) < 0.0 {
                    [self.incident_amp, self.reflected_amp, zero, self.transmitted_amp]
                } else {
                    [self.incident_amp, self.reflected_amp, self.transmitted_amp, zero]
                }
            }
            Incidence::RightIncident => {
                [zero, self.transmitted_amp, self.incident_amp, self.reflected_amp]
            }
        }
    }

    fn region_one(&self, x: f64) -> (Complex64, Complex64) {
        let [ap, am, _, _] = self.pieces();
        let ik = Complex64::new(0.0, self.momenta.k1);
        let plus = ap * (ik * x).exp();
        let minus = am * (-ik * x).exp();
        (plus + minus, ik * (plus - minus))
    }

    fn region_two(&self, x: f64) -> (Complex64, Complex64) {
        let [_, _, bp, bm] = self.pieces();
        let ik = Complex64::i() * self.momenta.k2;
        let plus = bp * (ik * x).exp();
        let minus = bm * (-ik * x).exp();
        (plus + minus, ik * (plus - minus))
    }

    /// Stationary wavefunction at `x` (region II includes `x = 0`).
    pub fn value_at(&self, x: f64) -> Complex64 {
        if x < 0.0 {
            self.region_one(x).0
        } else {
            self.region_two(x).0
        }
    }

    /// Spatial derivative of the stationary wavefunction at `x`.
    pub fn derivative_at(&self, x: f64) -> Complex64 {
        if x < 0.0 {
            self.region_one(x).1
        } else {
            self.region_two(x).1
        }
    }
}

fn check_solvable(setup: &PhysicalSetup, beam: BeamEnergy) -> Result<Regime> {
    let regime = classify_regime(setup, beam);
    if regime == Regime::NoIncident {
        return Err(Error::UnsupportedRegime { regime, reason: "no propagating incident beam (E < m)" });
    }
    if momenta_coincide(setup, beam) {
        let k = effective_momenta(setup, beam)?.k1;
        return Err(Error::DegenerateMomenta { k });
    }
    if regime == Regime::DegenerateBoundary {
        return Err(Error::UnsupportedRegime {
            regime,
            reason: "boundary energies (E = m or |V - E| = m) have vanishing momenta",
        });
    }
    Ok(regime)
}

fn dd_momenta(setup: &PhysicalSetup, beam: BeamEnergy) -> (DoubleDouble, DoubleDouble) {
    (k1_squared(setup, beam).sqrt(), k2_squared(setup, beam).abs().sqrt())
}

fn real(x: DoubleDouble) -> Complex64 {
    Complex64::new(x.to_f64(), 0.0)
}

/// Matches a unit beam incident from `x < 0`.
pub fn solve_left_incident(setup: &PhysicalSetup, beam: BeamEnergy) -> Result<ScatteringSolution> {
    let regime = check_solvable(setup, beam)?;
    let momenta = effective_momenta(setup, beam)?;
    let (k1, k2) = dd_momenta(setup, beam);
    let two = DoubleDouble::new(2.0);
    let (a, b, coeffs) = match regime {
        Regime::KleinZone => {
            let den = k1 - k2;
            let ratio = (k1 + k2) / den;
            let trans = two * k1 / den;
            let coeffs = CoeffPair {
                reflection: ratio.square().to_f64(),
                transmission: (-(k2 / k1) * trans.square()).to_f64(),
            };
            (real(ratio), real(trans), coeffs)
        }
        Regime::Transmitting => {
            let den = k1 + k2;
            let ratio = (k1 - k2) / den;
            let trans = two * k1 / den;
            let coeffs = CoeffPair {
                reflection: ratio.square().to_f64(),
                transmission: ((k2 / k1) * trans.square()).to_f64(),
            };
            (real(ratio), real(trans), coeffs)
        }
        Regime::Evanescent => {
            let kappa = momenta.k2.im;
            let ik1 = Complex64::new(0.0, momenta.k1);
            let a = (kappa + ik1) / (ik1 - kappa);
            (a, 1.0 + a, CoeffPair { reflection: 1.0, transmission: 0.0 })
        }
        Regime::NoIncident | Regime::DegenerateBoundary => unreachable!("rejected by check_solvable"),
    };
    Ok(ScatteringSolution {
        setup: *setup,
        energy: beam,
        momenta,
        direction: Incidence::LeftIncident,
        regime,
        incident_amp: Complex64::new(1.0, 0.0),
        reflected_amp: a,
        transmitted_amp: b,
        origin: Origin::Solver(coeffs),
    })
}

/// Matches the virtual unit beam incident from `x >= 0`; Klein zone only.
pub fn solve_right_incident(setup: &PhysicalSetup, beam: BeamEnergy) -> Result<ScatteringSolution> {
    let regime = check_solvable(setup, beam)?;
    if regime != Regime::KleinZone {
        return Err(Error::UnsupportedRegime {
            regime,
            reason: "the virtual beam requires a propagating region-II mode (Klein zone)",
        });
    }
    let momenta = effective_momenta(setup, beam)?;
    let (k1, k2) = dd_momenta(setup, beam);
    let den = k2 - k1;
    let c = (k1 + k2) / den;
    let d = DoubleDouble::new(2.0) * k2 / den;
    let coeffs = CoeffPair {
        reflection: c.square().to_f64(),
        transmission: (-(k1 / k2) * d.square()).to_f64(),
    };
    Ok(ScatteringSolution {
        setup: *setup,
        energy: beam,
        momenta,
        direction: Incidence::RightIncident,
        regime,
        incident_amp: Complex64::new(1.0, 0.0),
        reflected_amp: real(c),
        transmitted_amp: real(d),
        origin: Origin::Solver(coeffs),
    })
}

/// Reference solution of the two matching conditions by Gaussian elimination,
/// kept independent of the closed-form amplitudes.
///
/// Returns `(reflected, transmitted)` amplitudes for a unit incident wave in
/// the branch convention of the solvers.
pub fn matching_system_amplitudes(
    setup: &PhysicalSetup,
    beam: BeamEnergy,
    direction: Incidence,
) -> Result<(Complex64, Complex64)> {
    check_solvable(setup, beam)?;
    let p = effective_momenta(setup, beam)?;
    let i = Complex64::i();
    let (ik_in, ik_out) = match direction {
        Incidence::LeftIncident => {
            let s = region_two_sign(setup, beam);
            (i * p.k1, i * p.k2 * s)
        }
        Incidence::RightIncident => {
            if classify_regime(setup, beam) != Regime::KleinZone {
                return Err(Error::UnsupportedRegime {
                    regime: classify_regime(setup, beam),
                    reason: "the virtual beam requires the Klein zone",
                });
            }
            (i * p.k2, -i * p.k1)
        }
    };
    // Unknowns (r, t), incident wave e^{ik_in x}, reflected e^{-ik_in x},
    // transmitted e^{ik_out x}:
    //   1 + r = t
    //   ik_in (1 - r) = ik_out t
    let mut m = [
        [Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0), Complex64::new(-1.0, 0.0)],
        [-ik_in, -ik_out, -ik_in],
    ];
    if m[1][0].norm() > m[0][0].norm() {
        m.swap(0, 1);
    }
    let f = m[1][0] / m[0][0];
    for col in 0..3 {
        let v = m[0][col];
        m[1][col] -= f * v;
    }
    let t = m[1][2] / m[1][1];
    let r = (m[0][2] - m[0][1] * t) / m[0][0];
    Ok((r, t))
}

/// Current `|c|^2 Re(kappa) / m` of a single wave `c e^{i kappa x}`.
fn wave_current(amp: Complex64, wavenumber: Complex64, mass: f64) -> f64 {
    amp.norm_sqr() * wavenumber.re / mass
}

pub fn beam_currents(sol: &ScatteringSolution) -> CurrentTriple {
    let m = sol.setup.mass();
    let k1 = Complex64::new(sol.momenta.k1, 0.0);
    let k2 = sol.momenta.k2;
    match sol.direction {
        Incidence::LeftIncident => {
            let s = region_two_sign(&sol.setup, sol.energy);
            CurrentTriple {
                incident: wave_current(sol.incident_amp, k1, m),
                reflected: wave_current(sol.reflected_amp, -k1, m),
                transmitted: wave_current(sol.transmitted_amp, k2 * s, m),
            }
        }
        Incidence::RightIncident => CurrentTriple {
            incident: wave_current(sol.incident_amp, k2, m),
            reflected: wave_current(sol.reflected_amp, -k2, m),
            transmitted: wave_current(sol.transmitted_amp, -k1, m),
        },
    }
}

/// Solver output returns the closed-form coefficients (rounded from
/// double-double evaluation); hand-assembled solutions use current ratios,
/// which are NaN for a zero incident beam.
pub fn reflection_transmission(sol: &ScatteringSolution) -> CoeffPair {
    match sol.origin {
        Origin::Solver(coeffs) => coeffs,
        Origin::Manual => {
            let j = beam_currents(sol);
            CoeffPair {
                reflection: (j.reflected / j.incident).abs(),
                transmission: j.transmitted / j.incident,
            }
        }
    }
}

/// `(|u_I(0) - u_II(0)|, |u_I'(0) - u_II'(0)|)` from the stored amplitudes.
pub fn matching_residual(sol: &ScatteringSolution) -> (f64, f64) {
    let (v1, d1) = sol.region_one(0.0);
    let (v2, d2) = sol.region_two(0.0);
    ((v1 - v2).norm(), (d1 - d2).norm())
}

/// Charge density `|amp|^2 (E - V) / m` of a plane wave in a region of
/// constant potential `V`.
pub fn plane_wave_density(mass: f64, energy: f64, local_potential: f64, amplitude: Complex64) -> f64 {
    amplitude.norm_sqr() * (energy - local_potential) / mass
}
