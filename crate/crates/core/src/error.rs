//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A level index or register dimension is out of range.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// An argument violates a precondition (duplicate targets, empty keep
    /// list, negative duration, ...).
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Numerical validation of an input failed (non-unitary matrix,
    /// non-physical density matrix, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// The truncated Fock space is too small for the requested state.
    #[error("Fock cutoff {cutoff} too small: thermal tail mass {tail:.3e} > {max_tail:.1e}; use a cutoff of at least {required}")]
    FockCutoff {
        cutoff: usize,
        tail: f64,
        max_tail: f64,
        required: usize,
    },

    /// A fit did not converge and the caller required convergence.
    #[error("fit did not converge: {0}")]
    NotConverged(String),

    /// An internal consistency check failed (e.g. transpiler verification).
    #[error("internal error: {0}")]
    Internal(String),
}
