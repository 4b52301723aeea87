use thiserror::Error;

/// Errors raised by the calculation and fitting routines.
#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the domain where the formula is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// Qubit and resonator are degenerate; the dispersive formula does not apply.
    #[error("resonance: {0}")]
    Resonance(String),

    /// A dataset or record failed validation.
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("parse error: {0}")]
    Parse(String),

    /// Iterative solver did not converge.
    #[error("no convergence: {0}")]
    NonConvergence(String),

    /// The trace has no resolvable resonance.
    #[error("degenerate trace: {0}")]
    Degenerate(String),

    /// A sweep minimum sits on the grid boundary.
    #[error("inconclusive: {0}")]
    Inconclusive(String),

    #[error("hilbert space dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of a numerical procedure, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonConvergence(_) | Error::Degenerate(_) | Error::Inconclusive(_))
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Fails with a domain error unless `value` is finite and strictly positive.
pub(crate) fn require_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be positive and finite, got {value}")))
    }
}
