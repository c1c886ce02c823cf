use thiserror::Error;

/// Errors raised by the estimator, detectors, generators and file readers.
#[derive(Debug, Error)]
pub enum Error {
    /// A hyperparameter or scenario violates its documented invariant.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Malformed input data; `line` is 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("unsorted input: {0}")]
    Unsorted(String),

    #[error("unknown scenario `{name}` (known: {known})")]
    UnknownScenario { name: String, known: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
