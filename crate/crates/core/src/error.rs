use thiserror::Error;

/// Errors raised by the solvers and closed-form evaluators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter is outside the domain where the operation is defined.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The requested quantity does not exist for these parameters
    /// (no finite limit, no interior maximum, wrong approach regime, ...).
    #[error("no solution: {0}")]
    NoSolution(String),

    /// Result not representable in f64.
    #[error("overflow: {0}")]
    Overflow(String),

    /// A time step larger than the explicit stability bound was requested.
    #[error("time step {dt} exceeds stability bound {bound}")]
    Unstable { dt: f64, bound: f64 },

    /// The integration produced non-finite, negative or runaway values.
    #[error("solver aborted at t = {t}: {reason}")]
    Aborted { t: f64, reason: String },

    /// Two computations that must agree do not.
    #[error("consistency check failed: {0}")]
    Inconsistent(String),

    #[error("csv: {0}")]
    Csv(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn require_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite, got {value}")))
    }
}

pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must be positive, got {value}")))
    }
}
