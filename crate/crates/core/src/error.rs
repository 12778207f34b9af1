use thiserror::Error;

use crate::dataset::DataError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed argument: wrong shape, out-of-range index, bad probability.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A documented precondition was violated by the caller.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error(transparent)]
    Data(#[from] DataError),

    /// Configuration is well-formed but inconsistent (unknown column, bad pin set, ...).
    #[error("configuration error: {0}")]
    Config(String),

    #[error("singular posterior scale matrix for family {family}")]
    Singular { family: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("summation needs {terms} configuration terms, budget is {budget}")]
    BudgetExceeded { terms: f64, budget: f64 },

    #[error("posterior is empty")]
    EmptyPosterior,

    #[error("empty conditioning support: {0}")]
    EmptySupport(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
