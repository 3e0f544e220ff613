//! Error type shared by all modules.

use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A constructor or operation received an out-of-range parameter.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Vector / matrix dimensions do not agree.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A time argument lies outside its admissible interval.
    #[error("time out of domain: {0}")]
    Domain(String),

    /// An operation was evaluated at a point where it is singular.
    #[error("singular evaluation: {0}")]
    Singular(String),

    /// Non-finite values were found where finite input is required.
    #[error("non-finite input: {0}")]
    NonFinite(String),

    /// Input data is unusable (empty dataset, unsorted times, ...).
    #[error("invalid input: {0}")]
    Input(String),

    /// Configuration is inconsistent (dimension mismatch between parts).
    #[error("invalid configuration: {0}")]
    Config(String),

    /// File I/O or parsing failed.
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
