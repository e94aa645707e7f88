use thiserror::Error;

/// Errors raised by the library. Every variant corresponds to a distinct
/// failure class that the CLI maps to its own exit code.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{what} is not unitary (max deviation {defect:.3e})")]
    NotUnitary { what: String, defect: f64 },

    #[error("{what} is not a valid quantum channel: {reason}")]
    NotCptp { what: String, reason: String },

    #[error("{what} violates the completeness relation (defect {defect:.3e})")]
    Incomplete { what: String, defect: f64 },

    #[error("undefined conditional: {0}")]
    UndefinedConditional(String),

    #[error("no active time-reversal exists: {0}")]
    NoActiveReverse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
