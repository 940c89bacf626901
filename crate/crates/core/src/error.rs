use std::io;

use thiserror::Error;

/// Errors produced by the GM-MRF library.
#[derive(Debug, Error)]
pub enum Error {
    /// Input rejected before any numerics ran (bad parameter, bad shape, bad file).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Two operands disagree on a dimension.
    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    /// A covariance could not be factorized even after flooring.
    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    /// Arithmetic produced something we cannot continue from.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn dims(what: &'static str, expected: usize, got: usize) -> Self {
        Error::DimensionMismatch { what, expected, got }
    }

    /// True for failures caused by numerics rather than by the caller's input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical(_) | Error::NotPositiveDefinite(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
