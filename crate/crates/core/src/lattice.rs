//! Time-domain lattice evolution of charged Klein-Gordon wavepackets.
//!
//! The field obeys the minimally coupled equation
//!
//! ```text
//! (d/dt + i V(x))^2 Phi = d^2/dx^2 Phi - m^2 Phi
//! ```
//!
//! on a uniform grid over `[-L, L]` with `Phi = 0` at both ends. Time is
//! advanced with a three-level scheme whose coupling to the static potential
//! is a site-local phase link:
//!
//! ```text
//! e^{+iV dt} Phi[n+1] - 2 Phi[n] + e^{-iV dt} Phi[n-1] = dt^2 (D2 - m^2) Phi[n]
//! ```
//!
//! Expanding the links recovers the centred second-order discretisation of
//! `Phi_tt + 2iV Phi_t - V^2 Phi`. The link form is gauge covariant, so it keeps
//! the stability limit of the free leapfrog (`dt <= dx` up to mass terms) for
//! any barrier height, and it conserves the discrete charge
//!
//! ```text
//! Q = -dx/(m dt) * sum_i Im( conj(Phi[n-1]_i) e^{iV_i dt} Phi[n]_i )
//! ```
//!
//! exactly, up to rounding.

use std::io::{self, Write};

use num::complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::kinematics::{classify_regime, BeamEnergy, PhysicalSetup, Regime};
use crate::planewave::{reflection_transmission, solve_left_incident};

/// Steps between separation and boundary checks.
const CHECK_INTERVAL: usize = 16;
/// Minimum chunk handed to a rayon worker in the field update.
#[cfg(feature = "parallel")]
const PAR_MIN_LEN: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatticeConfig {
    pub domain_half_width: f64,
    pub num_points: usize,
    pub time_step_factor: f64,
    pub total_time: f64,
    /// End the run as soon as the scattered packets have cleared the step.
    pub stop_when_separated: bool,
    #[serde(skip)]
    pub execution: Execution,
}

impl LatticeConfig {
    pub const DEFAULT_TIME_STEP_FACTOR: f64 = 0.25;

    pub fn new(domain_half_width: f64, num_points: usize, total_time: f64) -> Self {
        Self {
            domain_half_width,
            num_points,
            time_step_factor: Self::DEFAULT_TIME_STEP_FACTOR,
            total_time,
            stop_when_separated: true,
            execution: Execution::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_points < 3 {
            return Err(Error::InvalidConfig(format!("need at least 3 grid points, got {}", self.num_points)));
        }
        if !(self.domain_half_width.is_finite() && self.domain_half_width > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "domain half-width must be > 0, got {}",
                self.domain_half_width
            )));
        }
        if !(self.time_step_factor > 0.0 && self.time_step_factor <= 0.5) {
            return Err(Error::InvalidConfig(format!(
                "time-step factor must lie in (0, 0.5], got {}",
                self.time_step_factor
            )));
        }
        if !(self.total_time.is_finite() && self.total_time >= 0.0) {
            return Err(Error::InvalidConfig(format!("total time must be >= 0, got {}", self.total_time)));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.domain_half_width / (self.num_points - 1) as f64
    }

    /// `factor * min(dx, 1 / max(V, m, E))`.
    pub fn time_step(&self, setup: &PhysicalSetup, energy: f64) -> f64 {
        let scale = setup.barrier_height().max(setup.mass()).max(energy.abs());
        self.time_step_factor * self.dx().min(1.0 / scale)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PacketDirection {
    RightMoving,
}

/// Gaussian positive-energy packet launched from the field-free side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PacketSpec {
    pub carrier_energy: f64,
    pub center: f64,
    /// Spatial standard deviation of the charge envelope.
    pub width: f64,
    pub direction: PacketDirection,
}

impl PacketSpec {
    pub fn new(carrier_energy: f64, center: f64, width: f64) -> Self {
        Self { carrier_energy, center, width, direction: PacketDirection::RightMoving }
    }

    pub fn carrier_momentum(&self, mass: f64) -> f64 {
        ((self.carrier_energy - mass) * (self.carrier_energy + mass)).sqrt()
    }

    pub fn group_velocity(&self, mass: f64) -> f64 {
        self.carrier_momentum(mass) / self.carrier_energy
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub grid: Vec<f64>,
    pub phi_current: Vec<Complex64>,
    pub phi_previous: Vec<Complex64>,
    pub time: f64,
    pub potential_profile: Vec<f64>,
    dx: f64,
    dt: f64,
    carrier_energy: Option<f64>,
    /// `e^{-i V_i dt}` per site.
    link: Vec<Complex64>,
    execution: Execution,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NumericCoefficients {
    pub r_num: f64,
    pub t_num: f64,
    /// `max_t |Q_total(t) - 1|`.
    pub charge_drift: f64,
    pub final_time: f64,
    pub steps: usize,
    /// Largest field modulus in the outer 2% of the grid relative to the peak.
    pub boundary_amplitude_ratio: f64,
}

pub fn build_lattice(config: &LatticeConfig, setup: &PhysicalSetup) -> Result<FieldState> {
    config.validate()?;
    let n = config.num_points;
    let l = config.domain_half_width;
    let grid: Vec<f64> = (0..n)
        .map(|i| l * (2.0 * i as f64 - (n - 1) as f64) / (n - 1) as f64)
        .collect();
    let potential_profile: Vec<f64> = grid.iter().map(|&x| setup.potential_at(x)).collect();
    let mut state = FieldState {
        phi_current: vec![Complex64::new(0.0, 0.0); n],
        phi_previous: vec![Complex64::new(0.0, 0.0); n],
        time: 0.0,
        dx: config.dx(),
        dt: 0.0,
        carrier_energy: None,
        link: Vec::new(),
        execution: config.execution,
        grid,
        potential_profile,
    };
    state.set_time_step(config.time_step(setup, 0.0));
    Ok(state)
}

impl FieldState {
    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn carrier_energy(&self) -> Option<f64> {
        self.carrier_energy
    }

    pub fn set_execution(&mut self, execution: Execution) {
        self.execution = execution;
    }

    fn set_time_step(&mut self, dt: f64) {
        self.dt = dt;
        self.link = self
            .potential_profile
            .iter()
            .map(|&v| Complex64::from_polar(1.0, -v * dt))
            .collect();
    }

    /// Replaces both time levels by `Phi[0] = f(x)`, `Phi[-1] = g(x)` with the
    /// time step `dt`. Boundary values are forced to zero.
    pub fn set_levels(&mut self, dt: f64, current: Vec<Complex64>, previous: Vec<Complex64>) {
        assert_eq!(current.len(), self.len());
        assert_eq!(previous.len(), self.len());
        self.set_time_step(dt);
        self.phi_current = current;
        self.phi_previous = previous;
        let last = self.len() - 1;
        for phi in [&mut self.phi_current, &mut self.phi_previous] {
            phi[0] = Complex64::new(0.0, 0.0);
            phi[last] = Complex64::new(0.0, 0.0);
        }
    }
}

fn laplacian(phi: &[Complex64], dx: f64) -> Vec<Complex64> {
    let n = phi.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for i in 1..n - 1 {
        out[i] = (phi[i + 1] - 2.0 * phi[i] + phi[i - 1]) / (dx * dx);
    }
    out
}

pub fn init_packet(state: &mut FieldState, spec: &PacketSpec, setup: &PhysicalSetup, config: &LatticeConfig) -> Result<()> {
    let m = setup.mass();
    let e = spec.carrier_energy;
    if !(e.is_finite() && e > m) {
        return Err(Error::NoPropagatingBeam { mass: m, energy: e });
    }
    if !(spec.width.is_finite() && spec.width > 0.0 && spec.center.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "packet width must be > 0 and center finite, got width {} center {}",
            spec.width, spec.center
        )));
    }
    let edge = spec.center + 4.0 * spec.width;
    if edge >= 0.0 {
        return Err(Error::PacketTooClose { edge });
    }
    if spec.width < 5.0 * state.dx {
        return Err(Error::InvalidConfig(format!(
            "packet width {} is under-resolved (needs >= 5 dx = {})",
            spec.width,
            5.0 * state.dx
        )));
    }
    let left_end = state.grid[0];
    if spec.center - 4.0 * spec.width <= left_end {
        return Err(Error::InvalidConfig(format!(
            "packet tail center - 4*width = {} leaves the domain [{left_end}, ..]",
            spec.center - 4.0 * spec.width
        )));
    }

    let dt = config.time_step(setup, e);
    let k0 = spec.carrier_momentum(m);
    let current: Vec<Complex64> = state
        .grid
        .iter()
        .map(|&x| {
            let envelope = -(x - spec.center).powi(2) / (4.0 * spec.width * spec.width);
            Complex64::new(envelope, k0 * x).exp()
        })
        .collect();
    // Phi(-dt) = Phi + dt iE Phi + dt^2/2 (D2 - m^2) Phi
    let lap = laplacian(&current, state.dx);
    let previous: Vec<Complex64> = current
        .iter()
        .zip(&lap)
        .map(|(&phi, &d2)| phi + Complex64::new(0.0, e * dt) * phi + 0.5 * dt * dt * (d2 - m * m * phi))
        .collect();
    state.set_levels(dt, current, previous);
    state.time = 0.0;
    state.carrier_energy = Some(e);

    let q = total_charge(state, setup);
    if !(q > 0.0) {
        return Err(Error::InvalidConfig(format!("initial packet charge {q} is not positive")));
    }
    let scale = 1.0 / q.sqrt();
    for z in state.phi_current.iter_mut().chain(state.phi_previous.iter_mut()) {
        *z *= scale;
    }
    Ok(())
}

/// Advances the field by one time step.
pub fn step(state: &mut FieldState, setup: &PhysicalSetup) -> Result<()> {
    let n = state.len();
    let c = (state.dt / state.dx).powi(2);
    let diag = 2.0 - 2.0 * c - (setup.mass() * state.dt).powi(2);
    let cur = &state.phi_current;
    let link = &state.link;
    let update = |i: usize, prev: &mut Complex64| {
        let spatial = diag * cur[i] + c * (cur[i + 1] + cur[i - 1]);
        let l = link[i];
        *prev = l * spatial - l * l * *prev;
    };
    // The newest level overwrites the oldest one in place.
    let interior = &mut state.phi_previous[1..n - 1];
    #[cfg(feature = "parallel")]
    if state.execution.is_parallel() {
        use rayon::prelude::*;
        interior
            .par_iter_mut()
            .with_min_len(PAR_MIN_LEN)
            .enumerate()
            .for_each(|(j, p)| update(j + 1, p));
    } else {
        interior.iter_mut().enumerate().for_each(|(j, p)| update(j + 1, p));
    }
    #[cfg(not(feature = "parallel"))]
    interior.iter_mut().enumerate().for_each(|(j, p)| update(j + 1, p));

    std::mem::swap(&mut state.phi_current, &mut state.phi_previous);
    state.time += state.dt;
    if state.phi_current.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::NumericalBlowup { time: state.time });
    }
    Ok(())
}

/// Charge density at the half step between the two stored levels.
pub fn charge_density(state: &FieldState, setup: &PhysicalSetup) -> Vec<f64> {
    let scale = -1.0 / (setup.mass() * state.dt);
    state
        .phi_previous
        .iter()
        .zip(&state.phi_current)
        .zip(&state.link)
        .map(|((prev, cur), link)| scale * (prev.conj() * link.conj() * cur).im)
        .collect()
}

fn total_charge(state: &FieldState, setup: &PhysicalSetup) -> f64 {
    charge_density(state, setup).iter().sum::<f64>() * state.dx
}

/// `(Q_left, Q_right)`, split at `x = 0` with the step site counted on the
/// right. With the field pinned to zero at both ends this is the trapezoidal
/// rule.
pub fn partition_charge(state: &FieldState, setup: &PhysicalSetup) -> (f64, f64) {
    let rho = charge_density(state, setup);
    let (mut left, mut right) = (0.0, 0.0);
    for (x, r) in state.grid.iter().zip(&rho) {
        if *x < 0.0 {
            left += r;
        } else {
            right += r;
        }
    }
    (left * state.dx, right * state.dx)
}

/// Charge-weighted centroid of the field.
pub fn centroid(state: &FieldState, setup: &PhysicalSetup) -> f64 {
    let rho = charge_density(state, setup);
    let q: f64 = rho.iter().sum();
    state.grid.iter().zip(&rho).map(|(x, r)| x * r).sum::<f64>() / q
}

fn boundary_amplitude_ratio(state: &FieldState) -> f64 {
    let n = state.len();
    let band = (n / 50).max(1);
    let peak = state.phi_current.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return 0.0;
    }
    let edge = state.phi_current[..band]
        .iter()
        .chain(&state.phi_current[n - band..])
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    edge / peak
}

/// The packet has reached the step in free flight, and the `|rho|`-weighted
/// centroid of every side holding at least 0.1% of the `|rho|` mass lies more
/// than six widths away from it.
fn has_separated(state: &FieldState, setup: &PhysicalSetup, spec: &PacketSpec) -> bool {
    let arrival = -spec.center / spec.group_velocity(setup.mass());
    if state.time < arrival {
        return false;
    }
    let rho = charge_density(state, setup);
    let (mut mass, mut moment) = ([0.0; 2], [0.0; 2]);
    for (x, r) in state.grid.iter().zip(&rho) {
        let side = usize::from(*x >= 0.0);
        mass[side] += r.abs();
        moment[side] += x * r.abs();
    }
    let total = mass[0] + mass[1];
    (0..2).all(|side| mass[side] <= 1e-3 * total || (moment[side] / mass[side]).abs() > 6.0 * spec.width)
}

pub fn run_scattering_experiment(
    config: &LatticeConfig,
    setup: &PhysicalSetup,
    spec: &PacketSpec,
) -> Result<NumericCoefficients> {
    run_observed(config, setup, spec, 0, |_| Ok(()))
}

/// Runs the experiment, calling `observer` on the initial state and then every
/// `every` steps (never when `every == 0`).
pub fn run_observed<F>(
    config: &LatticeConfig,
    setup: &PhysicalSetup,
    spec: &PacketSpec,
    every: usize,
    mut observer: F,
) -> Result<NumericCoefficients>
where
    F: FnMut(&FieldState) -> Result<()>,
{
    let mut state = build_lattice(config, setup)?;
    init_packet(&mut state, spec, setup, config)?;
    if every > 0 {
        observer(&state)?;
    }
    let ratio = config.total_time / state.dt;
    let max_steps = if (ratio - ratio.round()).abs() <= 1e-9 * ratio.max(1.0) {
        ratio.round() as usize
    } else {
        ratio.ceil() as usize
    };

    let mut drift: f64 = 0.0;
    let mut boundary: f64 = boundary_amplitude_ratio(&state);
    let mut separated = false;
    let mut steps = 0;
    while steps < max_steps {
        step(&mut state, setup)?;
        steps += 1;
        let q = total_charge(&state, setup);
        if !q.is_finite() {
            return Err(Error::NumericalBlowup { time: state.time });
        }
        drift = drift.max((q - 1.0).abs());
        if every > 0 && steps % every == 0 {
            observer(&state)?;
        }
        if steps % CHECK_INTERVAL == 0 || steps == max_steps {
            boundary = boundary.max(boundary_amplitude_ratio(&state));
            if config.stop_when_separated || steps == max_steps {
                separated = has_separated(&state, setup, spec);
                if separated && config.stop_when_separated {
                    break;
                }
            }
        }
    }
    if !separated && !has_separated(&state, setup, spec) {
        return Err(Error::PacketNeverSeparated { time: state.time });
    }
    let (r_num, t_num) = partition_charge(&state, setup);
    Ok(NumericCoefficients {
        r_num,
        t_num,
        charge_drift: drift,
        final_time: state.time,
        steps,
        boundary_amplitude_ratio: boundary,
    })
}

/// Analytic reflection coefficient averaged over the Gaussian momentum
/// distribution of the packet (standard deviation `1 / (2 width)`), by
/// Simpson quadrature over eight standard deviations. Momenta landing on a
/// regime boundary are skipped.
pub fn momentum_averaged_reflection(setup: &PhysicalSetup, spec: &PacketSpec) -> Result<f64> {
    let m = setup.mass();
    let k0 = spec.carrier_momentum(m);
    if !(k0 > 0.0) {
        return Err(Error::NoPropagatingBeam { mass: m, energy: spec.carrier_energy });
    }
    let sd = 1.0 / (2.0 * spec.width);
    let intervals = 400;
    let lo = (k0 - 8.0 * sd).max(0.0);
    let hi = k0 + 8.0 * sd;
    let h = (hi - lo) / intervals as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..=intervals {
        let k = lo + i as f64 * h;
        let weight = if i == 0 || i == intervals {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let beam = BeamEnergy::new((k * k + m * m).sqrt())?;
        if k == 0.0 || classify_regime(setup, beam) == Regime::DegenerateBoundary {
            continue;
        }
        let Ok(sol) = solve_left_incident(setup, beam) else { continue };
        let w = weight * (-(k - k0).powi(2) / (2.0 * sd * sd)).exp();
        num += w * reflection_transmission(&sol).reflection;
        den += w;
    }
    Ok(num / den)
}

/// Writes one snapshot: a `#` header line with the time stamp and run
/// parameters, then one row `x re_phi im_phi rho potential` per grid point.
pub fn write_snapshot<W: Write>(
    state: &FieldState,
    setup: &PhysicalSetup,
    out: &mut W,
) -> io::Result<()> {
    let rho = charge_density(state, setup);
    writeln!(
        out,
        "# time={:.16e} mass={:.16e} barrier_height={:.16e} energy={} half_width={:.16e} points={} dx={:.16e} dt={:.16e} columns=x,re_phi,im_phi,rho,potential",
        state.time,
        setup.mass(),
        setup.barrier_height(),
        state.carrier_energy.map_or("none".to_string(), |e| format!("{e:.16e}")),
        -state.grid[0],
        state.len(),
        state.dx,
        state.dt,
    )?;
    for i in 0..state.len() {
        let phi = state.phi_current[i];
        writeln!(
            out,
            "{:.16e} {:.16e} {:.16e} {:.16e} {:.16e}",
            state.grid[i], phi.re, phi.im, rho[i], state.potential_profile[i]
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(m: f64, v: f64) -> PhysicalSetup {
        PhysicalSetup::new(m, v).unwrap()
    }

    #[test]
    fn lattice_construction() {
        let s = setup(1.0, 4.0);
        let st = build_lattice(&LatticeConfig::new(100.0, 2001, 1.0), &s).unwrap();
        assert!((st.dx() - 0.1).abs() < 1e-15);
        assert_eq!(st.grid[1000], 0.0);
        assert_eq!(st.potential_profile[999], 0.0);
        assert_eq!(st.potential_profile[1000], 4.0);
        assert!(st.phi_current.iter().all(|z| z.norm() == 0.0));

        let st = build_lattice(&LatticeConfig::new(1.0, 3, 1.0), &s).unwrap();
        assert_eq!(st.grid, vec![-1.0, 0.0, 1.0]);
        assert_eq!(st.potential_profile, vec![0.0, 4.0, 4.0]);
    }

    #[test]
    fn invalid_configs() {
        let s = setup(1.0, 4.0);
        for cfg in [
            LatticeConfig::new(-1.0, 11, 1.0),
            LatticeConfig::new(1.0, 2, 1.0),
            LatticeConfig { time_step_factor: 0.6, ..LatticeConfig::new(1.0, 11, 1.0) },
        ] {
            assert!(matches!(build_lattice(&cfg, &s), Err(Error::InvalidConfig(_))));
        }
    }

    #[test]
    fn zero_field_stays_zero() {
        let s = setup(1.0, 4.0);
        let mut st = build_lattice(&LatticeConfig::new(10.0, 201, 1.0), &s).unwrap();
        step(&mut st, &s).unwrap();
        assert!(st.phi_current.iter().all(|z| z.norm() == 0.0));
        assert!(charge_density(&st, &s).iter().all(|r| *r == 0.0));
        assert_eq!(partition_charge(&st, &s), (0.0, 0.0));
    }

    #[test]
    fn packet_initialization() {
        let s = setup(1.0, 4.0);
        let cfg = LatticeConfig::new(200.0, 4001, 100.0);
        let mut st = build_lattice(&cfg, &s).unwrap();
        let spec = PacketSpec::new(1.5, -80.0, 10.0);
        init_packet(&mut st, &spec, &s, &cfg).unwrap();
        let (ql, qr) = partition_charge(&st, &s);
        assert!((ql - 1.0).abs() < 1e-10 && qr.abs() < 1e-10, "{ql} {qr}");
        let rho = charge_density(&st, &s);
        let peak = rho.iter().cloned().fold(0.0, f64::max);
        for (x, r) in st.grid.iter().zip(&rho) {
            if *x < 0.0 && r.abs() > 1e-12 * peak {
                assert!(*r > 0.0, "negative density {r} at {x}");
            }
        }
        assert!((spec.carrier_momentum(1.0) - 1.118_033_988_749_894_8).abs() < 1e-15);
    }

    #[test]
    fn packet_errors() {
        let s = setup(1.0, 4.0);
        let cfg = LatticeConfig::new(200.0, 4001, 100.0);
        let mut st = build_lattice(&cfg, &s).unwrap();
        let err = init_packet(&mut st, &PacketSpec::new(1.5, -30.0, 10.0), &s, &cfg).unwrap_err();
        assert!(matches!(err, Error::PacketTooClose { .. }));
        let err = init_packet(&mut st, &PacketSpec::new(1.5, -80.0, 0.2), &s, &cfg).unwrap_err();
        assert!(matches!(err, Error::InvalidConfig(_)));
        let err = init_packet(&mut st, &PacketSpec::new(0.9, -80.0, 10.0), &s, &cfg).unwrap_err();
        assert!(matches!(err, Error::NoPropagatingBeam { .. }));
    }

    /// Exact eigenvalue of the free two-level recurrence
    /// `z + 1/z = 2 - dt^2 (4/dx^2 sin^2(k dx/2) + m^2)`, root with negative phase.
    fn recurrence_eigenvalue(k: f64, m: f64, dx: f64, dt: f64) -> Complex64 {
        let w2 = 4.0 / (dx * dx) * (k * dx / 2.0).sin().powi(2) + m * m;
        let b = 2.0 - dt * dt * w2;
        let disc = Complex64::new(b * b - 4.0, 0.0).sqrt();
        let roots = [(b + disc) / 2.0, (b - disc) / 2.0];
        *roots.iter().find(|z| z.im < 0.0).unwrap()
    }

    /// One update on a periodic ring, reusing the production kernel for the
    /// interior of an extended copy.
    fn periodic_step(k: f64, m: f64, n: usize, dt_factor: f64) -> (Complex64, f64, f64) {
        let dx = 2.0 * std::f64::consts::PI / k / n as f64;
        let s = setup(m, 0.0);
        let cfg = LatticeConfig::new(dx * (n + 1) as f64 / 2.0, n + 2, 1.0);
        let mut st = build_lattice(&cfg, &s).unwrap();
        let dt = dt_factor * dx;
        let z = recurrence_eigenvalue(k, m, dx, dt);
        let mode = |j: usize| Complex64::from_polar(1.0, k * dx * (j as f64));
        // ghost cells j = 0 and j = n + 1 hold the periodic images
        let cur: Vec<Complex64> = (0..n + 2).map(|j| mode(j)).collect();
        let prev: Vec<Complex64> = cur.iter().map(|c| c / z).collect();
        st.set_levels(dt, cur.clone(), prev);
        st.phi_current[0] = cur[0];
        st.phi_current[n + 1] = cur[n + 1];
        step(&mut st, &s).unwrap();
        let ratio = st.phi_current[n / 2] / cur[n / 2];
        (ratio, dt, (k * k + m * m).sqrt())
    }

    #[test]
    fn free_mode_phase_matches_dispersion() {
        let (k, m) = (1.3, 1.0);
        let mut errors = Vec::new();
        for (n, f) in [(64, 0.5), (128, 0.5)] {
            let (ratio, dt, omega) = periodic_step(k, m, n, f);
            let dx = 2.0 * std::f64::consts::PI / k / n as f64;
            assert!((ratio - recurrence_eigenvalue(k, m, dx, dt)).norm() < 1e-12);
            assert!((ratio.norm() - 1.0).abs() < 1e-12);
            errors.push((ratio.arg() + omega * dt).abs());
        }
        // phase error per step is O(dt^3)
        let order = (errors[0] / errors[1]).log2();
        assert!((2.7..3.3).contains(&order), "order {order}, errors {errors:?}");
    }

    #[test]
    fn charge_is_conserved_through_the_step() {
        let s = setup(1.0, 10.0);
        let cfg = LatticeConfig::new(100.0, 2001, 60.0);
        let mut st = build_lattice(&cfg, &s).unwrap();
        init_packet(&mut st, &PacketSpec::new(3.0, -30.0, 5.0), &s, &cfg).unwrap();
        for _ in 0..2400 {
            step(&mut st, &s).unwrap();
        }
        let (ql, qr) = partition_charge(&st, &s);
        assert!((ql + qr - 1.0).abs() < 1e-10);
        // the packet has hit the step: paradoxical charge split
        assert!(ql > 1.0 && qr < 0.0, "{ql} {qr}");
    }

    #[test]
    fn plane_wave_density_is_energy_over_mass() {
        // periodic single mode with exact discrete frequency
        let (k, m, n) = (0.7, 1.0, 256);
        let dx = 2.0 * std::f64::consts::PI / k / n as f64;
        let s = setup(m, 0.0);
        let cfg = LatticeConfig::new(dx * (n - 1) as f64 / 2.0, n, 1.0);
        let mut st = build_lattice(&cfg, &s).unwrap();
        let dt = 0.25 * dx;
        let omega = (k * k + m * m).sqrt();
        let cur: Vec<Complex64> = (0..n).map(|j| Complex64::from_polar(1.0, k * dx * j as f64)).collect();
        let prev: Vec<Complex64> = cur.iter().map(|c| c * Complex64::from_polar(1.0, omega * dt)).collect();
        st.set_levels(dt, cur, prev);
        let rho = charge_density(&st, &s);
        for r in &rho[1..n - 1] {
            assert!((r - omega / m).abs() < 1e-3 * omega);
        }
    }

    #[test]
    fn averaged_reflection_tracks_analytic_value() {
        let s = setup(1.0, 10.0);
        let r = momentum_averaged_reflection(&s, &PacketSpec::new(3.0, -80.0, 10.0)).unwrap();
        assert!((r - 5.663_428_511_917_159).abs() < 0.02 * 5.66, "{r}");
    }

    #[test]
    fn snapshot_format() {
        let s = setup(1.0, 4.0);
        let st = build_lattice(&LatticeConfig::new(1.0, 3, 1.0), &s).unwrap();
        let mut buf = Vec::new();
        write_snapshot(&st, &s, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("# time=0.0000000000000000e0"));
        assert!(lines[0].contains("columns=x,re_phi,im_phi,rho,potential"));
        let cols: Vec<f64> = lines[3].split_whitespace().map(|t| t.parse().unwrap()).collect();
        assert_eq!(cols, vec![1.0, 0.0, 0.0, 0.0, 4.0]);
    }
}
