//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the toolkit.
///
/// The variants map onto the CLI exit codes: parameter errors exit with 2,
/// data errors with 3, numerical failures with 4.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied parameter violates a precondition.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Input data is malformed or inconsistent.
    #[error("data error: {0}")]
    Data(String),

    /// A numerical routine failed to converge or produced garbage.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
