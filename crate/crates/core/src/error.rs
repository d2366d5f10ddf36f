use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("Kraus set is not trace preserving (max deviation {0:.3e})")]
    NotTracePreserving(f64),

    #[error("phase-space grid too small: {0}")]
    GridTooSmall(String),

    #[error("phase-space grids do not match")]
    GridMismatch,

    #[error("discretization check failed: {0}")]
    Discretization(String),

    #[error("unattainable: {0}")]
    Unattainable(String),

    #[error("likelihood: {0}")]
    Likelihood(String),

    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },

    #[error("no records")]
    NoRecords,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
