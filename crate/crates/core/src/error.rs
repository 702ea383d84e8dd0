use thiserror::Error;

/// Errors raised when an input violates an operation's preconditions.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{name} must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },

    #[error("{name} = {value} violates the constraint {constraint}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    #[error("state is not normalized: sum of |c_jk|^2 = {norm} (tolerance 1e-12)")]
    NotNormalized { norm: f64 },

    #[error("invalid hidden-variable model: {0}")]
    InvalidModel(String),

    #[error("invalid scan: {0}")]
    InvalidScan(String),

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite { name, value })
    }
}
