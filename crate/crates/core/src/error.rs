use thiserror::Error;

use crate::dynamics::Trajectory;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("fields live on different grids")]
    GridMismatch,

    /// The hydrodynamic pair left the non-vanishing set `|u| < 1`.
    #[error("domain violation at node {node}: |u| = {value} (limit {limit})")]
    DomainViolation { node: usize, value: f64, limit: f64 },

    #[error("phase lift failed at node {node}: |m3| = {value} exceeds 1 - tol")]
    LiftFailure { node: usize, value: f64 },

    #[error("domain too short for soliton tails: mu * (L - |center|) = {decay} < {required}")]
    TailLeak { decay: f64, required: f64 },

    #[error("speed {speed} lies outside the soliton branches (c* = {cstar})")]
    OutOfBranch { speed: f64, cstar: f64 },

    #[error("no closed-form phase lift for the upper soliton branch")]
    UnsupportedLift,

    #[error("kink speed {0} is not subluminal")]
    Superluminal(f64),

    #[error("non-finite value in Runge-Kutta stage at t = {time}")]
    StepFailure { time: f64 },

    #[error("trajectory aborted at t = {time}: {reason}")]
    Aborted {
        time: f64,
        reason: String,
        partial: Box<Trajectory>,
    },

    #[error("study stopped after {completed:?}: {source}")]
    PartialStudy {
        completed: Vec<f64>,
        #[source]
        source: Box<Error>,
    },

    #[error("{0}")]
    Usage(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
