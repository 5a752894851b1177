//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors produced by tensor-train construction, algebra, decomposition,
/// oracles, and persistence.
#[derive(Debug, Error)]
pub enum TtError {
    /// Array shapes are inconsistent (bond mismatch, wrong arity, ...).
    #[error("shape error: {0}")]
    Shape(String),

    /// A site value lies outside its site's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numeric routine failed or produced non-finite values.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// A black-box oracle failed to produce values.
    #[error("oracle error: {0}")]
    Oracle(String),

    /// A file could not be read, written, parsed, or validated.
    #[error("io error: {0}")]
    Io(String),

    /// The requested operation is not defined for this input.
    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl From<std::io::Error> for TtError {
    fn from(e: std::io::Error) -> Self {
        TtError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for TtError {
    fn from(e: serde_json::Error) -> Self {
        TtError::Io(format!("json: {e}"))
    }
}

pub type TtResult<T> = Result<T, TtError>;

pub(crate) fn shape_err<T>(msg: impl Into<String>) -> TtResult<T> {
    Err(TtError::Shape(msg.into()))
}

pub(crate) fn domain_err<T>(msg: impl Into<String>) -> TtResult<T> {
    Err(TtError::Domain(msg.into()))
}

pub(crate) fn numeric_err<T>(msg: impl Into<String>) -> TtResult<T> {
    Err(TtError::Numeric(msg.into()))
}

/// Bare error value, for use inside `map_err` and `ok_or_else` chains.
pub(crate) fn oracle_err(msg: impl Into<String>) -> TtError {
    TtError::Oracle(msg.into())
}
