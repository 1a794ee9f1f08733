use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("usage error: {0}")]
    Usage(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported channel: {0}")]
    UnsupportedChannel(String),

    #[error("rate too low: {0}")]
    RateTooLow(String),

    #[error("numerical failure: {message} (estimate {estimate}, error bound {error_bound})")]
    Numerical { message: String, estimate: f64, error_bound: f64 },

    #[error("infeasible: {0}")]
    Infeasible(String),
}

impl Error {
    pub fn numerical(message: impl Into<String>) -> Self {
        Error::Numerical { message: message.into(), estimate: f64::NAN, error_bound: f64::NAN }
    }

    /// Short machine-readable code used in CSV status columns.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Usage(_) => "usage",
            Error::Domain(_) => "domain",
            Error::UnsupportedChannel(_) => "unsupported",
            Error::RateTooLow(_) => "rate-too-low",
            Error::Numerical { .. } => "numerical",
            Error::Infeasible(_) => "infeasible",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
