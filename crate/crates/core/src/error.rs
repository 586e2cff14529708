use thiserror::Error;

use crate::optimizer::SweepOutcome;

/// Errors raised by the solver stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite value at node {index}")]
    NonFinite { index: usize },

    #[error("length mismatch: expected {expected} values, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("grid mismatch between fields")]
    GridMismatch,

    #[error("point {x} lies outside the open domain ({x_min}, {x_max})")]
    OutOfDomain { x: f64, x_min: f64, x_max: f64 },

    #[error("utility undefined at x = {x}")]
    DomainError { x: f64 },

    #[error("bad utility: {0}")]
    BadUtility(String),

    #[error("singular tridiagonal system: pivot {pivot:e} at row {row}")]
    SingularSystem { row: usize, pivot: f64 },

    #[error("forward-backward sweep did not converge after {} iterations", .0.report.iterations)]
    NoConvergence(Box<SweepOutcome>),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
