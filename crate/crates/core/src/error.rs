//! Crate-wide error type and exit-code mapping.

use thiserror::Error;

/// Errors shared by every module in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed user input: spec strings, config files, CLI flags.
    #[error("input error: {0}")]
    Input(String),

    /// Structurally valid input that violates a mathematical precondition,
    /// e.g. a chart point outside its box or a non-coprime Euler class where
    /// coprimality is required.
    #[error("domain error: {0}")]
    Domain(String),

    /// Numerical breakdown: ill-conditioned metric inversion, eigensolver
    /// stagnation, finite-difference steps leaving the chart.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// A verification pass ran to completion and a checked quantity exceeded
    /// its tolerance.
    #[error("verification failure: {0}")]
    Verification(String),
}

impl Error {
    /// Process exit code for the CLI: 0 is reserved for success, 2 signals a
    /// failed verification or numerical breakdown, 3 signals bad input.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Input(_) | Error::Domain(_) => 3,
            Error::Numeric(_) | Error::Verification(_) => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
