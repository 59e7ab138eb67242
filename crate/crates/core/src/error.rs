//! Crate-wide error type.

use thiserror::Error;

/// Errors reported by basis construction, operator assembly, evolution and
/// the CLI layer.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violated a documented precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Two objects that must share a basis (same d, n0, α) do not.
    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    /// Array shapes are inconsistent.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A matrix required to be Hermitian is not.
    #[error("matrix is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    /// A matrix required to be unitary is not.
    #[error("matrix is not unitary (residual {residual:.3e})")]
    NotUnitary { residual: f64 },

    /// An iterative numerical routine failed to converge.
    #[error("numerical routine did not converge: {0}")]
    NoConvergence(String),

    /// I/O failure in the CLI layer.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed JSON input or output.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Shorthand used by argument validation.
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
