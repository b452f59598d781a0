use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Input outside the domain of an operation (bad parameters, zero
    /// off-diagonal, singular block, malformed family string, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A computation ran but could not reach the requested accuracy.
    #[error("accuracy error: {what} (estimate {estimate:.3e})")]
    Accuracy { what: String, estimate: f64 },

    /// Input data that parsed but violates a structural requirement
    /// (indefinite weight, non-PD moment, inconsistent sizes).
    #[error("data error: {0}")]
    Data(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn accuracy(what: impl Into<String>, estimate: f64) -> Self {
        Error::Accuracy {
            what: what.into(),
            estimate,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Data(_) => 2,
            Error::Accuracy { .. } => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
