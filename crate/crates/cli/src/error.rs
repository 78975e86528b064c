use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config key `{key}`: {msg}")]
    Config { key: String, msg: String },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Sim(#[from] lo_chain::Error),
}

impl CliError {
    /// Attaches a config section to a validation error from the library.
    pub fn from_core(section: &str, e: lo_chain::Error) -> Self {
        match e {
            lo_chain::Error::Config(msg) | lo_chain::Error::Argument(msg) => CliError::Config {
                key: section.into(),
                msg,
            },
            other => CliError::Sim(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
