use thiserror::Error;

use crate::kinematics::Regime;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("no propagating incident beam: energy {energy} must exceed mass {mass} (E <= m)")]
    NoPropagatingBeam { mass: f64, energy: f64 },

    #[error("regime {regime} is not supported here: {reason}")]
    UnsupportedRegime { regime: Regime, reason: &'static str },

    #[error("degenerate momenta: k1 == k2 == {k} makes the matching denominator vanish")]
    DegenerateMomenta { k: f64 },

    #[error("inconsistent solutions: {0}")]
    InconsistentSolutions(&'static str),

    #[error("invalid lattice configuration: {0}")]
    InvalidConfig(String),

    #[error("packet too close to the barrier: center + 4*width = {edge} must be < 0")]
    PacketTooClose { edge: f64 },

    #[error("numerical blowup at t = {time} (non-finite field; check the time-step factor)")]
    NumericalBlowup { time: f64 },

    #[error("packet never separated from the barrier by t = {time}")]
    PacketNeverSeparated { time: f64 },

    #[error("evaluation point coincides with the source")]
    SingularPoint,

    #[error("point outside the upper half-space: {0}")]
    OutOfDomain(String),

    #[error("i/o failure: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
