//! Crate-wide error type.
//!
//! Every fallible operation returns [`CmgError`]. Errors fall into two
//! categories that callers (notably the CLI) treat differently:
//! [`ErrorCategory::Data`] for malformed input or violated preconditions, and
//! [`ErrorCategory::Numerical`] for estimates that cannot be produced from
//! otherwise well-formed data (degenerate series, divergence, no matches).

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CmgError {
    /// Malformed input text. `line` is 1-based and counts the header line.
    #[error("{msg} at line {line}")]
    Parse { line: usize, msg: String },

    /// A precondition on arguments or input shape was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The data is well-formed but statistically degenerate for the request.
    #[error("degenerate: {0}")]
    Degenerate(String),

    /// An iterative or floating-point computation failed to produce a result.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A serialized artifact does not match the expected layout.
    #[error("format error: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Data,
    Numerical,
}

impl CmgError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        CmgError::InvalidInput(msg.into())
    }

    pub fn degenerate(msg: impl Into<String>) -> Self {
        CmgError::Degenerate(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        CmgError::Numerical(msg.into())
    }

    pub fn category(&self) -> ErrorCategory {
        match self {
            CmgError::Degenerate(_) | CmgError::Numerical(_) => ErrorCategory::Numerical,
            _ => ErrorCategory::Data,
        }
    }
}

pub type Result<T> = std::result::Result<T, CmgError>;
