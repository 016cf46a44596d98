use thiserror::Error;

use crate::engine::Trajectory;

/// Errors raised by model construction, simulation and estimation.
#[derive(Debug, Error)]
pub enum CrnError {
    #[error("invalid model: {0}")]
    Model(String),

    #[error("dimension mismatch: {what} has length {got}, expected {expected}")]
    Dimension {
        what: &'static str,
        got: usize,
        expected: usize,
    },

    #[error("index {index} out of range for {what} (len {len})")]
    Index {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("ratio undefined: every intensity vanishes at the given state and time")]
    UndefinedRatio,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("event budget of {max_events} exhausted at t = {time}; the model may be explosive")]
    Truncated {
        max_events: u64,
        time: f64,
        partial: Box<Trajectory<f64>>,
    },

    #[error("coupled event budget of {max_events} exhausted at t = {time}; the model may be explosive")]
    CoupledTruncated {
        max_events: u64,
        time: f64,
        perturbed_state: Vec<u64>,
        nominal_state: Vec<u64>,
    },

    #[error("numerically degenerate: {0}")]
    Degenerate(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = CrnError> = std::result::Result<T, E>;
