//! Error type shared by every module of the laboratory.

use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    /// A scalar parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// A vector or array has the wrong length.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    /// Two objects refer to different delay-Doppler grids.
    #[error("frame parameter mismatch between operands")]
    ParameterMismatch,
    /// A numerical procedure failed to reach its accuracy target.
    #[error("numerical accuracy error: {0}")]
    Numerical(String),
    /// The detector could not produce an estimate.
    #[error("detection error: {0}")]
    Detection(String),
    /// The true response used as the reference of a prediction error has zero energy.
    #[error("relative prediction error undefined: reference response has zero energy")]
    UndefinedRpe,
    /// The time series is too short to absorb the requested delay.
    #[error("time series guard exceeded: {0}")]
    GuardOverflow(String),
    /// A configuration file or option is invalid.
    #[error("configuration error: {0}")]
    Config(String),
    /// I/O failure while writing results.
    #[error(transparent)]
    Io(#[from] std::io::Error),
    /// CSV serialisation failure.
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Convenience alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;
