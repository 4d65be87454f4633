use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("mask has no interior cells")]
    EmptyInterior,

    #[error("time step {dt} violates stability limit {limit}")]
    StabilityViolation { dt: f64, limit: f64 },

    #[error("point {point:?} is not strictly interior")]
    NotInterior { point: Vec<f64> },

    #[error("constraint violated at cell ({ix}, {iy}): {detail}")]
    ConstraintViolated { ix: usize, iy: usize, detail: String },

    #[error("removed component {index} has boundary length {length}, below the required {required}")]
    HypothesisViolated { index: usize, length: f64, required: f64 },

    #[error("bubble placement failed: placed {placed} of {requested}")]
    PlacementFailed { placed: usize, requested: usize },

    #[error("{path}:{line}: {message}")]
    Config { path: String, line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
