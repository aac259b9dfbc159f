use thiserror::Error;

use crate::vector::Vector;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WcError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// Grid enumeration is only offered up to this many dimensions.
    #[error("grid oracles support dimension at most {cap}, got {dim}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("inconclusive: {0}")]
    Inconclusive(String),

    /// A verified invariant failed after construction. Always a bug.
    #[error("inconsistency: {0}")]
    Inconsistency(String),

    #[error("gap bound {gap_bound:e} exceeds budget {eps:e}")]
    BudgetNotMet {
        best: Vector,
        gap_bound: f64,
        eps: f64,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, WcError>;

pub(crate) fn ensure_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(WcError::DimensionMismatch { expected, found })
    }
}

pub(crate) fn ensure_nonneg(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(WcError::InvalidArgument(format!("{name} must be a finite nonnegative number, got {value}")))
    }
}

pub(crate) fn ensure_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(WcError::InvalidArgument(format!("{name} must be a finite positive number, got {value}")))
    }
}
