//! Error type shared across the pipeline.

use thiserror::Error;

/// Errors produced by corpus ingestion, model training, and evaluation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed input file; reports the offending line.
    #[error("parse error in {path} at line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    /// Input violated a documented contract (bad score, duplicate id, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// An input that must be non-empty was empty.
    #[error("empty input: {0}")]
    EmptyInput(String),

    /// Input too small or too uniform for the requested operation.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Feature vector does not match the schema a model was trained with.
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    /// A bug: an internal invariant did not hold.
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn validation(message: impl Into<String>) -> Self {
        Error::Validation(message.into())
    }

    pub fn parse(path: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
