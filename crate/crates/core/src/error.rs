use thiserror::Error;

/// Errors raised by the estimation toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// An inversion was asked for a value the function never attains.
    #[error("no solution: {0}")]
    NoSolution(String),

    /// A matrix could not be factorized, or is too badly conditioned to trust.
    #[error("factorization error: {0}")]
    Factorization(String),

    /// The prior cannot be sampled, so prior-predictive quantities are undefined.
    #[error("prior is not samplable: {0}")]
    ImproperPrior(String),

    /// A Monte Carlo or optimization routine failed; carries its diagnostics.
    #[error("estimation error: {message}")]
    Estimation {
        message: String,
        diagnostics: Option<String>,
    },

    /// An analysis was named or parameterized incorrectly.
    #[error("configuration error: {0}")]
    Config(String),

    /// Input data violate the model's invariants.
    #[error("data error: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn estimation(msg: impl Into<String>, diagnostics: Option<String>) -> Self {
        Error::Estimation {
            message: msg.into(),
            diagnostics,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
