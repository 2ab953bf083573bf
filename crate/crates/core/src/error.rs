use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("probability vector is invalid: {0}")]
    InvalidDistribution(String),

    #[error("utility entry {value} at ({action}, {state}) is outside [-1, 1]")]
    UtilityOutOfRange { action: usize, state: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("state {state} is outside an alphabet of size {size}")]
    StateOutOfRange { state: usize, size: usize },

    #[error("prefix of length {len} is beyond the model horizon {horizon}")]
    Horizon { len: usize, horizon: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("target mixed action is unattainable: {0}")]
    Unattainable(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("enumeration of {leaves} sequences exceeds the budget of {budget}")]
    Budget { leaves: f64, budget: f64 },

    #[error("empty sequence")]
    Empty,

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
