use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter fell outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The caller-declared integer-dimension flag contradicts the requested
    /// operation or the dimension value.
    #[error("integer-dimension flag mismatch: {0}")]
    FlagMismatch(String),

    /// A skeleton does not extend far enough in time for the requested map.
    #[error("horizon too short: {0}")]
    Horizon(String),

    /// A transform was asked for monotone bounds but is not monotone in the
    /// space variable.
    #[error("transform is not monotone in the space variable")]
    Monotonicity,

    /// An iterative numerical routine (quadrature, series, continued
    /// fraction, root bracketing) did not reach its tolerance.
    #[error("numerical routine failed to converge: {0}")]
    Convergence(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn flag_mismatch(msg: impl Into<String>) -> Self {
        Error::FlagMismatch(msg.into())
    }

    pub(crate) fn horizon(msg: impl Into<String>) -> Self {
        Error::Horizon(msg.into())
    }

    pub(crate) fn convergence(msg: impl Into<String>) -> Self {
        Error::Convergence(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
