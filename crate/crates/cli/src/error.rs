use std::path::Path;

use thiserror::Error;

/// Failure of a subcommand, carrying its process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flag value or configuration document. Exit 2, the same code clap
    /// uses for usage errors.
    #[error("configuration error: {0}")]
    Config(String),
    /// Unreadable, missing or malformed input data. Exit 3.
    #[error("data error: {0}")]
    Data(String),
    /// A model could not be fitted or produced no usable forecast. Exit 4.
    #[error("fit failure: {0}")]
    Fit(String),
    /// Too many simulation trials aborted. Exit 5.
    #[error("trial budget exceeded: {0}")]
    Budget(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Fit(_) => 4,
            CliError::Budget(_) => 5,
        }
    }

    pub fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Data(format!("{}: {err}", path.display()))
    }
}

impl From<cmcm_core::ingest::IngestError> for CliError {
    fn from(e: cmcm_core::ingest::IngestError) -> Self {
        use cmcm_core::ingest::IngestError;
        match e {
            IngestError::InvalidThreshold(_) => CliError::Config(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}
