//! Scattering workbench for the Klein-Gordon equation with a step potential.
//!
//! The crate reproduces the Klein paradox for a charged scalar beam hitting a
//! strong electrostatic step (reflection coefficient above one, negative
//! transmission), resolves it by superposing a virtual beam incident from the
//! other side, and cross-checks the stationary analysis with two independent
//! numerical verifiers:
//!
//! * [`lattice`] evolves charged wavepackets in the time domain with minimal
//!   coupling and measures the reflected and transmitted charge;
//! * [`images`] evaluates the grounded-plane image-charge construction that the
//!   virtual-beam argument is modelled on.
//!
//! Natural units are used throughout (ħ = c = 1, unit positive charge).

pub mod cli;
pub mod compensated;
mod error;
pub mod exec;
pub mod images;
pub mod kinematics;
pub mod lattice;
pub mod planewave;
pub mod resolution;

pub use error::{Error, Result};
pub use exec::Execution;
pub use kinematics::{
    classify_regime, effective_momenta, onshell_residuals, BeamEnergy, MomentumPair,
    PhysicalSetup, Regime,
};
pub use planewave::{
    beam_currents, matching_residual, plane_wave_density, reflection_transmission,
    solve_left_incident, solve_right_incident, CoeffPair, CurrentTriple, Incidence,
    ScatteringSolution,
};
pub use resolution::{fake_conservation_check, resolve, superpose, GlobalCoefficients, StationaryField};
