use std::path::PathBuf;

use thiserror::Error;

/// Failures of a lab run, each mapped to a process exit status.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid config field `{field}`: {message}")]
    Validation { field: String, message: String },
    #[error("numerical failure: {0}")]
    Numerical(#[from] edg_core::Error),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("serialization failure: {0}")]
    Serialize(String),
}

impl LabError {
    pub fn invalid(field: &str, message: impl Into<String>) -> Self {
        LabError::Validation {
            field: field.to_string(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Validation { .. } => 2,
            _ => 3,
        }
    }
}

pub type LabResult<T> = Result<T, LabError>;

/// Exit status for a failed acceptance threshold in verify mode.
pub const EXIT_VERIFY_FAILED: i32 = 1;
