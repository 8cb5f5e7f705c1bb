use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),

    #[error("`{key}` = `{value}`: expected {expected}")]
    TypeMismatch {
        key: String,
        value: String,
        expected: &'static str,
    },

    #[error("no command given\n\n{0}")]
    MissingCommand(String),

    #[error(transparent)]
    Args(Box<clap::Error>),

    #[error("invalid configuration: {0}")]
    Invalid(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Model(#[from] kswave_core::Error),

    #[error("failed checks: {}", .0.join(", "))]
    ChecksFailed(Vec<String>),
}

pub type CliResult<T> = std::result::Result<T, CliError>;
