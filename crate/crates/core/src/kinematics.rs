//! Physical parameters, regime classification and effective momenta.
//!
//! A unit positive charge of mass `m` with total energy `E` approaches the step
//! `V(x) = V` for `x >= 0`, `0` for `x < 0`. On each side the stationary waves
//! carry the on-shell momenta
//!
//! ```text
//! k1 = +sqrt(E^2 - m^2)          (x < 0)
//! k2 = +sqrt((V - E)^2 - m^2)    (x >= 0)
//! ```
//!
//! with `k2 = +i sqrt(m^2 - (V - E)^2)` when the region-II wave is evanescent.

use std::fmt;

use num::complex::Complex64;
use num::{BigRational, Signed};
use serde::Serialize;

use crate::compensated::DoubleDouble;
use crate::error::{Error, Result};

/// Mass and barrier height of the step problem, in natural units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalSetup {
    mass: f64,
    barrier_height: f64,
}

impl PhysicalSetup {
    pub fn new(mass: f64, barrier_height: f64) -> Result<Self> {
        if !mass.is_finite() || !barrier_height.is_finite() {
            return Err(Error::InvalidInput(format!(
                "mass ({mass}) and barrier height ({barrier_height}) must be finite"
            )));
        }
        if mass <= 0.0 {
            return Err(Error::InvalidInput(format!("mass must be > 0, got {mass}")));
        }
        if barrier_height < 0.0 {
            return Err(Error::InvalidInput(format!(
                "barrier height must be >= 0, got {barrier_height}"
            )));
        }
        Ok(Self { mass, barrier_height })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn barrier_height(&self) -> f64 {
        self.barrier_height
    }

    /// The step potential; the barrier includes `x = 0`.
    pub fn potential_at(&self, x: f64) -> f64 {
        if x >= 0.0 {
            self.barrier_height
        } else {
            0.0
        }
    }
}

/// Total relativistic energy of the incident beam.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct BeamEnergy(f64);

impl BeamEnergy {
    pub fn new(energy: f64) -> Result<Self> {
        if !energy.is_finite() {
            return Err(Error::InvalidInput(format!("energy must be finite, got {energy}")));
        }
        Ok(Self(energy))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Regime {
    /// `E < m`: no propagating incident wave.
    NoIncident,
    /// `m < E < V - m`: real `k2` although `E < V`.
    KleinZone,
    /// `|V - E| < m`: region-II wave decays.
    Evanescent,
    /// `E > V + m`: ordinary over-barrier transmission.
    Transmitting,
    /// `E = m`, `|V - E| = m` or `k1 = k2`, all exactly.
    DegenerateBoundary,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::NoIncident => "NoIncident",
            Regime::KleinZone => "KleinZone",
            Regime::Evanescent => "Evanescent",
            Regime::Transmitting => "Transmitting",
            Regime::DegenerateBoundary => "DegenerateBoundary",
        }
    }

    /// Short statement of the defining rule, used in diagnostics.
    pub fn rule(self) -> &'static str {
        match self {
            Regime::NoIncident => "E < m",
            Regime::KleinZone => "m < E < V - m",
            Regime::Evanescent => "|V - E| < m",
            Regime::Transmitting => "E > V + m",
            Regime::DegenerateBoundary => "E = m, |V - E| = m or k1 = k2",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentumPair {
    pub k1: f64,
    pub k2: Complex64,
}

impl MomentumPair {
    /// `k2` is evanescent (purely imaginary, positive imaginary part).
    pub fn is_evanescent(&self) -> bool {
        self.k2.re == 0.0 && self.k2.im > 0.0
    }
}

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("validated inputs are finite")
}

/// Classifies `(m, V, E)` using exact rational comparisons of the defining
/// equalities; no tolerance bands are applied.
pub fn classify_regime(setup: &PhysicalSetup, beam: BeamEnergy) -> Regime {
    let m = exact(setup.mass);
    let e = exact(beam.0);
    if e < m {
        return Regime::NoIncident;
    }
    if e == m {
        return Regime::DegenerateBoundary;
    }
    let detuning = exact(setup.barrier_height) - &e;
    let abs_detuning = detuning.abs();
    // E > m > 0, so k1 = k2 reduces to E = |V - E|.
    if abs_detuning == m || abs_detuning == e {
        return Regime::DegenerateBoundary;
    }
    if detuning > m {
        Regime::KleinZone
    } else if abs_detuning < m {
        Regime::Evanescent
    } else {
        Regime::Transmitting
    }
}

/// Exact test for `k1 == k2`, i.e. `E > m` and `E == |V - E|`.
pub fn momenta_coincide(setup: &PhysicalSetup, beam: BeamEnergy) -> bool {
    let e = exact(beam.0);
    e > exact(setup.mass) && (exact(setup.barrier_height) - &e).abs() == e
}

/// `k1^2 = (E - m)(E + m)` in double-double precision.
pub(crate) fn k1_squared(setup: &PhysicalSetup, beam: BeamEnergy) -> DoubleDouble {
    let m = setup.mass;
    DoubleDouble::sum(beam.0, -m) * DoubleDouble::sum(beam.0, m)
}

/// `(V - E)^2 - m^2` in double-double precision.
pub(crate) fn k2_squared(setup: &PhysicalSetup, beam: BeamEnergy) -> DoubleDouble {
    let m = DoubleDouble::new(setup.mass);
    let detuning = DoubleDouble::sum(setup.barrier_height, -beam.0);
    (detuning - m) * (detuning + m)
}

pub fn effective_momenta(setup: &PhysicalSetup, beam: BeamEnergy) -> Result<MomentumPair> {
    if classify_regime(setup, beam) == Regime::NoIncident {
        return Err(Error::NoPropagatingBeam { mass: setup.mass, energy: beam.0 });
    }
    let k1 = k1_squared(setup, beam).sqrt().to_f64();
    let q = k2_squared(setup, beam);
    let k2 = if q.is_sign_negative() {
        Complex64::new(0.0, (-q).sqrt().to_f64())
    } else {
        Complex64::new(q.sqrt().to_f64(), 0.0)
    };
    Ok(MomentumPair { k1, k2 })
}

/// Klein-Gordon operator residuals `(m^2 - E^2 + k1^2, m^2 - (V - E)^2 + k2^2)`.
pub fn onshell_residuals(
    setup: &PhysicalSetup,
    beam: BeamEnergy,
    momenta: &MomentumPair,
) -> (f64, f64) {
    let m2 = setup.mass * setup.mass;
    let e = beam.0;
    let detuning = setup.barrier_height - e;
    let r1 = m2 - e * e + momenta.k1 * momenta.k1;
    let r2 = m2 - detuning * detuning + (momenta.k2 * momenta.k2).re;
    (r1, r2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn setup(m: f64, v: f64) -> PhysicalSetup {
        PhysicalSetup::new(m, v).unwrap()
    }

    fn beam(e: f64) -> BeamEnergy {
        BeamEnergy::new(e).unwrap()
    }

    #[test]
    fn regime_examples() {
        assert_eq!(classify_regime(&setup(1.0, 4.0), beam(1.5)), Regime::KleinZone);
        assert_eq!(classify_regime(&setup(1.0, 4.0), beam(3.5)), Regime::Evanescent);
        assert_eq!(classify_regime(&setup(1.0, 1.0), beam(3.0)), Regime::Transmitting);
        assert_eq!(classify_regime(&setup(1.0, 4.0), beam(0.5)), Regime::NoIncident);
    }

    #[test]
    fn boundaries_are_degenerate() {
        let s = setup(1.0, 4.0);
        assert_eq!(classify_regime(&s, beam(1.0)), Regime::DegenerateBoundary);
        assert_eq!(classify_regime(&s, beam(3.0)), Regime::DegenerateBoundary);
        assert_eq!(classify_regime(&s, beam(5.0)), Regime::DegenerateBoundary);
        // V = 2E gives k1 = k2 inside the Klein window.
        assert_eq!(classify_regime(&s, beam(2.0)), Regime::DegenerateBoundary);
        assert!(momenta_coincide(&s, beam(2.0)));
        // V = 0: both regions identical.
        assert_eq!(classify_regime(&setup(1.0, 0.0), beam(2.0)), Regime::DegenerateBoundary);
    }

    #[test]
    fn boundary_comparison_is_exact() {
        // fl(E - V) rounds to exactly m here, but E - V > m in exact arithmetic.
        let s = setup(1.0, 0.75 * f64::EPSILON);
        let e = 1.0 + f64::EPSILON;
        assert_eq!(e - s.barrier_height(), 1.0);
        assert_eq!(classify_regime(&s, beam(e)), Regime::Transmitting);
        let p = effective_momenta(&s, beam(e)).unwrap();
        assert!(p.k2.re > 0.0 && p.k2.im == 0.0);
    }

    #[test]
    fn invalid_inputs_rejected() {
        assert!(matches!(PhysicalSetup::new(0.0, 1.0), Err(Error::InvalidInput(_))));
        assert!(matches!(PhysicalSetup::new(1.0, -1.0), Err(Error::InvalidInput(_))));
        assert!(matches!(PhysicalSetup::new(f64::NAN, 1.0), Err(Error::InvalidInput(_))));
        assert!(matches!(PhysicalSetup::new(1.0, f64::INFINITY), Err(Error::InvalidInput(_))));
        assert!(matches!(BeamEnergy::new(f64::NAN), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn momenta_examples() {
        // 40-digit references: sqrt(1.25), sqrt(5.25), sqrt(11.25), sqrt(0.75).
        let p = effective_momenta(&setup(1.0, 4.0), beam(1.5)).unwrap();
        assert!((p.k1 - 1.118_033_988_749_894_8).abs() < 1e-15);
        assert!((p.k2.re - 2.291_287_847_477_920_0).abs() < 1e-15);
        assert_eq!(p.k2.im, 0.0);

        let p = effective_momenta(&setup(1.0, 0.0), beam(2f64.sqrt())).unwrap();
        assert!((p.k1 - 1.0).abs() < 1e-15);
        assert!((p.k2.re - 1.0).abs() < 1e-15);

        let p = effective_momenta(&setup(1.0, 4.0), beam(3.5)).unwrap();
        assert!((p.k1 - 3.354_101_966_249_684_5).abs() < 1e-15);
        assert_eq!(p.k2.re, 0.0);
        assert!((p.k2.im - 0.866_025_403_784_438_6).abs() < 1e-15);
        assert!(p.is_evanescent());
    }

    #[test]
    fn no_incident_beam_has_no_momenta() {
        let err = effective_momenta(&setup(1.0, 4.0), beam(0.5)).unwrap_err();
        assert!(matches!(err, Error::NoPropagatingBeam { .. }));
    }

    #[test]
    fn residual_examples() {
        let s = setup(1.0, 4.0);
        let p = effective_momenta(&s, beam(1.5)).unwrap();
        let (r1, r2) = onshell_residuals(&s, beam(1.5), &p);
        assert!(r1.abs() < 1e-14 && r2.abs() < 1e-14);

        let p = effective_momenta(&s, beam(3.5)).unwrap();
        let (r1, r2) = onshell_residuals(&s, beam(3.5), &p);
        assert!(r1.abs() < 1e-14 && r2.abs() < 1e-14);

        // (sqrt(1.25) + 0.1)^2 - 1.25 = 0.2*sqrt(1.25) + 0.01
        let mut p = effective_momenta(&s, beam(1.5)).unwrap();
        p.k1 += 0.1;
        let (r1, _) = onshell_residuals(&s, beam(1.5), &p);
        assert!((r1 - 0.233_606_797_749_979).abs() < 1e-12);
    }

    fn any_valid() -> impl Strategy<Value = (f64, f64, f64)> {
        (0.1f64..10.0, 0.0f64..1000.0, -50.0f64..1100.0)
    }

    proptest! {
        #[test]
        fn momenta_are_on_shell((m, v, e) in any_valid()) {
            let s = setup(m, v);
            let b = beam(e);
            let regime = classify_regime(&s, b);
            prop_assume!(regime != Regime::NoIncident);
            let p = effective_momenta(&s, b).unwrap();
            let (r1, r2) = onshell_residuals(&s, b, &p);
            let scale = 1e-12 * 1f64.max(e * e).max(v * v);
            prop_assert!(r1.abs() < scale && r2.abs() < scale, "{r1} {r2}");
            match regime {
                Regime::KleinZone | Regime::Transmitting => {
                    prop_assert!(p.k1 > 0.0 && p.k2.re > 0.0 && p.k2.im == 0.0);
                }
                Regime::Evanescent => prop_assert!(p.is_evanescent()),
                _ => {}
            }
        }

        #[test]
        fn regimes_partition_parameter_space((m, v, e) in any_valid()) {
            let regime = classify_regime(&setup(m, v), beam(e));
            let d = v - e;
            let expected = if e < m {
                Regime::NoIncident
            } else if d > m {
                Regime::KleinZone
            } else if d.abs() < m {
                Regime::Evanescent
            } else {
                Regime::Transmitting
            };
            // Random doubles essentially never land on the exact boundaries,
            // so the float predicate and the exact one agree.
            if regime != Regime::DegenerateBoundary {
                prop_assert_eq!(regime, expected);
            }
        }
    }
}
