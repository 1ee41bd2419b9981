use thiserror::Error;

/// Errors produced by the library. Structural-assumption violations of an
/// instance are *not* errors; they are reported by [`crate::model::Instance::validate`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("index out of range: {0}")]
    Index(String),

    #[error("enumeration guard exceeded: search space {need} exceeds limit {limit}")]
    GuardExceeded { need: u128, limit: u128 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("instance fails strict validation: {0}")]
    InvalidInstance(String),

    #[error("arithmetic range exceeded: {0}")]
    Arithmetic(String),

    #[error("unknown preset: {0}")]
    UnknownPreset(String),

    #[error("invalid ratio: {0}")]
    InvalidRatio(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
