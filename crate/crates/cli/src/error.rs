use qudit_rsp::RspError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("target is not preparable: {0}")]
    NotPreparable(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("could not serialize report: {0}")]
    Serialize(String),
}

impl CliError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::NotPreparable(_) => 3,
            Self::Invariant(_) => 4,
            Self::Io(_) | Self::Serialize(_) => 1,
        }
    }
}

impl From<RspError> for CliError {
    fn from(e: RspError) -> Self {
        match e {
            RspError::NotPreparable(msg) => Self::NotPreparable(msg),
            RspError::InvariantViolation(msg) => Self::Invariant(msg),
            other => Self::Config(other.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::Serialize(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Serialize(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
