use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid kernel for dimension {dim}: {reason}")]
    InvalidKernel { dim: usize, reason: String },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("singular step matrix at t = {t}: pivot {pivot:e} (dt * |A| = {scaled_norm:.3})")]
    SingularStep { t: f64, pivot: f64, scaled_norm: f64 },

    #[error("rank-deficient matrix: column {column} has norm {norm:e}")]
    RankDeficient { column: usize, norm: f64 },

    #[error("estimate rejected: {0}")]
    EstimateRejected(String),

    #[error("point {point:?} lies outside the tabulated domain")]
    OutOfDomain { point: Vec<f64> },

    #[error("finite-difference stencil point {point:?} missing from the grid")]
    MissingStencil { point: Vec<f64> },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
