use thiserror::Error;

/// Errors raised by the analytic and simulation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("pole of {function} at z = {z}")]
    Pole { function: &'static str, z: f64 },

    #[error("smoothness parameter must exceed 2 (got nu = {0})")]
    Smoothness(f64),

    #[error("unsupported parameters: {0}")]
    Unsupported(String),

    #[error("index {index} out of range 0..={dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("covariance factorization failed with jitter {jitter:e}")]
    Factorization { jitter: f64 },

    #[error("degenerate denominator: {0}")]
    Degenerate(String),

    #[error("mismatch: {0}")]
    Mismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
