use causal_bma::dataset::DataError;
use causal_bma::Error;
use thiserror::Error as ThisError;

pub type CliResult<T> = Result<T, CliError>;

/// Failure classes, one per exit code.
#[derive(Debug, ThisError)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Internal(_) => 4,
        }
    }

    /// Errors raised while loading the data file. Schema problems are
    /// configuration errors.
    pub fn from_data(e: Error) -> Self {
        match e {
            Error::Data(DataError::Schema(m)) => CliError::Config(format!("`schema`: {m}")),
            e @ Error::Data(_) => CliError::Data(e.to_string()),
            e => e.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidInput(_) | Error::Json(_) => CliError::Config(e.to_string()),
            Error::Data(DataError::Schema(_)) => CliError::Config(e.to_string()),
            Error::Data(_) | Error::EmptySupport(_) => CliError::Data(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(format!("writing output: {e}"))
    }
}
