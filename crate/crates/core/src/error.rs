use thiserror::Error;

/// Errors produced anywhere in the reconstruction pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },
    #[error("root bracketing failed: {0}")]
    Bracketing(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("eigensolver failed: {0}")]
    Eigensolver(String),
    #[error("degenerate boundary frame: {0}")]
    DegenerateFrame(String),
    #[error("shape is not starlike: {0}")]
    NotStarlike(String),
    #[error("linear solve failed: {0}")]
    SolveFailed(String),
    #[error("unsupported shape: {0}")]
    UnsupportedShape(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("unsupported dataset version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("operation not available: {0}")]
    Capability(String),
    #[error("point is not on the boundary (distance {0:e})")]
    NotOnBoundary(f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
