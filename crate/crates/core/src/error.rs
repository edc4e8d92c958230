use thiserror::Error;

/// Errors raised while constructing or running estimators and operators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("grid mismatch: {0}")]
    Grid(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unstable channel: eigenvalue {eigenvalue} violates the {domain} stability bound")]
    UnstableChannel { eigenvalue: String, domain: &'static str },

    #[error("signal kind mismatch: {0}")]
    SignalKind(String),

    /// A numerical contract was violated at run time (e.g. the clip bound of
    /// the finite-time estimator).
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
