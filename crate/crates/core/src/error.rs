//! Crate-wide error type.

/// Result alias used by every fallible operation in the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes of the simulator and analysis pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A mode, state, or configuration violates a documented invariant.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The projection quadrature changed by more than the tolerance when the
    /// node counts were doubled.
    #[error("quadrature did not converge: |a|^2 moved by {delta:.3e} (tolerance {tolerance:.1e}) when node counts doubled")]
    QuadratureNotConverged { delta: f64, tolerance: f64 },

    /// A linear system was singular or an iteration failed numerically.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A serialized artifact (CSV or JSON) could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub(crate) fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }
}
