//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or option failed its validity checks.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Vector lengths did not match the network size.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// An input contained NaN or infinity where a finite value is required.
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    /// A time query fell outside the range covered by a trajectory or history.
    #[error("time {t} outside the defined range [{lo}, {hi}]")]
    TimeOutOfRange { t: f64, lo: f64, hi: f64 },

    /// An inverse mode transform of a spectrum claimed to be conjugate
    /// symmetric left an imaginary residue above tolerance.
    #[error("imaginary residue {residue:e} exceeds tolerance {tol:e}")]
    ImaginaryResidue { residue: f64, tol: f64 },

    /// A root scan or other numerical procedure produced no usable result.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// Not enough samples to perform a requested fit.
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}
