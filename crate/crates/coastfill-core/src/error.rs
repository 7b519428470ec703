//! Error type shared by every module in the crate.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Dimensions of an input do not match what the operation requires.
    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: String, actual: String },

    /// A stack file could not be parsed.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A value lies outside the domain an operation accepts.
    #[error("domain error: {0}")]
    Domain(String),

    /// Threshold calibration could not reach the requested target.
    #[error("calibration failed: {0}")]
    Calibration(String),

    /// Cloud-mask synthesis could not reach the target rate.
    #[error("cloud synthesis failed: {0}")]
    Synthesis(String),

    /// The SGD fit produced a non-finite or runaway value.
    #[error("divergence at learning rate {learning_rate}: {msg}")]
    Divergence { learning_rate: f64, msg: String },

    /// A linear-algebra kernel failed.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// The caller asked for something the inputs cannot provide.
    #[error("usage error: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn shape(expected: impl Into<String>, actual: impl Into<String>) -> Self {
        Error::Shape {
            expected: expected.into(),
            actual: actual.into(),
        }
    }
}
