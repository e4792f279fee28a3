use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid {field}: {reason}")]
    Validation { field: String, reason: String },
    #[error("{0}")]
    Property(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Core(qkd_core::Error),
}

impl CliError {
    /// 0 ok, 1 usage or I/O, 2 validation, 3 property failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Validation { .. } => 2,
            CliError::Property(_) => 3,
            _ => 1,
        }
    }
}

impl From<qkd_core::Error> for CliError {
    fn from(e: qkd_core::Error) -> Self {
        match e {
            qkd_core::Error::InvalidParameter { field, reason } => CliError::Validation { field: field.into(), reason },
            qkd_core::Error::ProbabilityOutOfRange(p) => {
                CliError::Validation { field: "probability".into(), reason: format!("{p} not in [0, 1]") }
            }
            e => CliError::Core(e),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
