//! Library-wide error type.

use thiserror::Error;

/// Errors surfaced by simulation, estimation, and evolution routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or parameter combination is out of range.
    #[error("configuration error: {0}")]
    Config(String),
    /// Input data violates a documented precondition.
    #[error("data error: {0}")]
    Data(String),
    /// An estimator was asked for a quantity it cannot produce.
    #[error("estimator error: {0}")]
    Estimator(String),
    /// A fitness evaluation failed; the enclosing generation is aborted.
    #[error("evaluation failed: {0}")]
    Eval(String),
    /// A file could not be parsed in the expected format.
    #[error("parse error in {path}: {reason}")]
    Parse { path: String, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
