use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A problem constraint (rate bounds, integrality, parameter ordering) is violated.
    #[error("constraint violated: {0}")]
    Constraint(String),

    /// A numerical routine failed to produce a trustworthy value.
    #[error("numerical failure: {0}")]
    Numeric(String),

    /// Invalid run configuration. `key` names the offending entry.
    #[error("config `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn constraint(msg: impl Into<String>) -> Self {
        Error::Constraint(msg.into())
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}
