//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by validation and numeric routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A scalar parameter failed validation (wrong sign, non-finite, …).
    #[error("parameter `{name}` invalid: {reason}")]
    InvalidParameter {
        /// Name of the offending field or argument.
        name: &'static str,
        /// Human-readable description of the violation.
        reason: String,
    },

    /// A coordinate fell outside the region where a profile is defined.
    #[error("coordinate {value} outside [{min}, {max}]")]
    OutOfDomain { value: f64, min: f64, max: f64 },

    /// A named source profile is not registered.
    #[error("unknown source profile `{0}`")]
    UnknownProfile(String),

    /// A time profile does not vanish to high enough order at t = 0.
    #[error("source profile not admissible: {0}")]
    InadmissibleSource(String),

    /// Grid construction or grid compatibility failure.
    #[error("grid error: {0}")]
    Grid(String),

    /// The interface profile is sampled but not constant; solver paths only
    /// support a flat interface.
    #[error("interface samples are not constant; solvers require a flat interface")]
    CurvedInterface,

    /// A linear solve hit a (near-)zero pivot or produced non-finite values.
    #[error("linear solve failed: {0}")]
    Singular(String),

    /// Fewer data points than an algorithm needs.
    #[error("not enough data: {0}")]
    NotEnoughData(&'static str),

    /// Configuration file parse or schema failure.
    #[error("config error: {0}")]
    Config(String),

    /// Filesystem failure while emitting artifacts.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Convenience alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Helper for `InvalidParameter` with formatted reason.
    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
