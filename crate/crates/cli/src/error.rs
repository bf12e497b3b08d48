use thiserror::Error;

/// Failures grouped by the exit code they map to.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Estimation(String),
    #[error("{0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Output(_) => 1,
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Estimation(_) => 4,
        }
    }
}

impl From<cppp_core::Error> for CliError {
    fn from(e: cppp_core::Error) -> Self {
        use cppp_core::Error as E;
        let msg = e.to_string();
        match e {
            E::Config(_) | E::Domain(_) | E::ImproperPrior(_) | E::Json(_) => CliError::Config(msg),
            E::Data(_) | E::Csv(_) | E::Io(_) => CliError::Data(msg),
            E::NoSolution(_) | E::Factorization(_) | E::Estimation { .. } => CliError::Estimation(msg),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
