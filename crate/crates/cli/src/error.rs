use thiserror::Error;

/// Failures of a CLI command, each tied to an exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("verification failed: {0}")]
    VerifyFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::VerifyFailed(_) => 1,
            CliError::Config(_) => 2,
            CliError::Contract(_) => 3,
        }
    }
}

impl From<mts_core::Error> for CliError {
    fn from(e: mts_core::Error) -> Self {
        use mts_core::Error as E;
        match e {
            E::Contract(_) | E::InfeasibleTrajectory { .. } => CliError::Contract(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
