//! Virtual-beam resolution of the paradox.
//!
//! The physical left-incident beam `u` is superposed with an unobservable beam
//! `w` incident from the barrier side. Everything found to the left of the step
//! after scattering is the reflected part of `u` plus the transmitted part of
//! `w`, so the global reflection coefficient is `R_G = R_u + T_w`, which is
//! exactly one in the Klein zone. `T_G = T_u + R_w` is the mirrored sum; it is
//! reported as an extension and also equals one.

use num::complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{map_ordered, Execution};
use crate::kinematics::{BeamEnergy, PhysicalSetup, Regime};
use crate::planewave::{
    reflection_transmission, solve_left_incident, solve_right_incident, Incidence,
    ScatteringSolution,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GlobalCoefficients {
    #[serde(rename = "R_u")]
    pub r_u: f64,
    #[serde(rename = "T_u")]
    pub t_u: f64,
    #[serde(rename = "R_w")]
    pub r_w: f64,
    #[serde(rename = "T_w")]
    pub t_w: f64,
    #[serde(rename = "R_G")]
    pub r_g: f64,
    #[serde(rename = "T_G")]
    pub t_g: f64,
}

fn klein_pair(
    setup: &PhysicalSetup,
    beam: BeamEnergy,
) -> Result<(ScatteringSolution, ScatteringSolution)> {
    let left = solve_left_incident(setup, beam)?;
    if left.regime() != Regime::KleinZone {
        return Err(Error::UnsupportedRegime {
            regime: left.regime(),
            reason: "the virtual-beam resolution applies only inside the Klein zone",
        });
    }
    let right = solve_right_incident(setup, beam)?;
    Ok((left, right))
}

pub fn resolve(setup: &PhysicalSetup, beam: BeamEnergy) -> Result<GlobalCoefficients> {
    let (left, right) = klein_pair(setup, beam)?;
    let u = reflection_transmission(&left);
    let w = reflection_transmission(&right);
    Ok(GlobalCoefficients {
        r_u: u.reflection,
        t_u: u.transmission,
        r_w: w.reflection,
        t_w: w.transmission,
        r_g: u.reflection + w.transmission,
        t_g: u.transmission + w.reflection,
    })
}

/// `(R_u + T_u, R_w + T_w)`: each sums to one although `R > 1` and `T < 0`.
pub fn fake_conservation_check(setup: &PhysicalSetup, beam: BeamEnergy) -> Result<(f64, f64)> {
    let (left, right) = klein_pair(setup, beam)?;
    let u = reflection_transmission(&left);
    let w = reflection_transmission(&right);
    Ok((u.reflection + u.transmission, w.reflection + w.transmission))
}

/// Samples of `u(x) + w(x)` with both components retained.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryField {
    pub sample_points: Vec<f64>,
    pub values: Vec<Complex64>,
    pub real_beam: Vec<Complex64>,
    /// Always flagged virtual in exports; not an observable.
    pub virtual_beam: Vec<Complex64>,
}

pub fn superpose(
    left: &ScatteringSolution,
    right: &ScatteringSolution,
    sample_points: &[f64],
) -> Result<StationaryField> {
    superpose_with(left, right, sample_points, Execution::default())
}

pub fn superpose_with(
    left: &ScatteringSolution,
    right: &ScatteringSolution,
    sample_points: &[f64],
    execution: Execution,
) -> Result<StationaryField> {
    if left.direction() != Incidence::LeftIncident || right.direction() != Incidence::RightIncident {
        return Err(Error::InconsistentSolutions(
            "expected a left-incident real beam and a right-incident virtual beam",
        ));
    }
    if left.setup() != right.setup() || left.energy() != right.energy() {
        return Err(Error::InconsistentSolutions("beams must share mass, barrier and energy"));
    }
    if left.regime() != Regime::KleinZone {
        return Err(Error::UnsupportedRegime {
            regime: left.regime(),
            reason: "superposition with the virtual beam is defined in the Klein zone",
        });
    }
    let pairs = map_ordered(execution, sample_points, |&x| (left.value_at(x), right.value_at(x)));
    let (real_beam, virtual_beam): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    let values = real_beam.iter().zip(&virtual_beam).map(|(u, w)| u + w).collect();
    Ok(StationaryField {
        sample_points: sample_points.to_vec(),
        values,
        real_beam,
        virtual_beam,
    })
}
