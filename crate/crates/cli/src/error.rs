use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, settings or parameter values.
    #[error("{0}")]
    Invalid(String),
    /// A computation or an output failed.
    #[error("{0}")]
    Runtime(String),
    /// The stability probe could not decide.
    #[error("probe inconclusive")]
    Inconclusive,
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Runtime(_) => 3,
            CliError::Inconclusive => 4,
        }
    }
}

impl From<fdaloha::Error> for CliError {
    fn from(e: fdaloha::Error) -> Self {
        match e {
            fdaloha::Error::NoConvergence { .. } => CliError::Runtime(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}
