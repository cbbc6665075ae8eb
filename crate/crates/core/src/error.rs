use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("point outside the group domain: {0}")]
    Domain(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("quadrature box does not meet the group domain: {0}")]
    EmptyBox(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("inconsistent section: {0}")]
    InconsistentSection(String),
    #[error("outside the grid-safe range: {0}")]
    Unsafe(String),
    #[error("divergent integral: {0}")]
    Divergent(String),
    #[error("missing metadata: {0}")]
    MissingMetadata(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
