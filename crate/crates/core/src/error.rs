use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input is outside the domain an operation accepts.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },

    /// A grid or basis cannot resolve the requested states.
    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("quadrature did not converge: estimated error {estimate:.3e} exceeds tolerance {tolerance:.3e}")]
    Convergence { estimate: f64, tolerance: f64 },

    /// The target multiplet is not separated from neighbouring levels.
    #[error("isolation error: {0}")]
    Isolation(String),

    /// Internal cross-checks disagree (non-invariant subspace, ambiguous clustering, label mismatch).
    #[error("consistency error: {0}")]
    Consistency(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn consistency(msg: impl Into<String>) -> Self {
        Error::Consistency(msg.into())
    }
}
