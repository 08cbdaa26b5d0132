use std::path::PathBuf;

use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] pairx_core::Error),

    #[error("output {0} already exists; runs are write-once")]
    OutputExists(PathBuf),

    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },

    #[error("invalid argument: {0}")]
    Usage(String),

    #[error("input {path} changed since the recorded run (sha256 {expected} → {actual})")]
    InputChanged {
        path: String,
        expected: String,
        actual: String,
    },

    #[error("{0}")]
    CheckFailed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::OutputExists(_) => "output_exists",
            CliError::Read { .. } => "io",
            CliError::Parse { .. } => "json",
            CliError::Usage(_) => "invalid_argument",
            CliError::InputChanged { .. } => "input_changed",
            CliError::CheckFailed(_) => "check_failed",
            CliError::Io(_) => "io",
        }
    }

    /// Process exit code:
    ///
    /// | code | meaning |
    /// |------|---------|
    /// | 2 | invalid input or arguments |
    /// | 3 | enumeration guard |
    /// | 4 | oracle transport |
    /// | 5 | ill-posed fit or undefined quantity |
    /// | 6 | filesystem |
    /// | 7 | conformance or replay check failed |
    pub fn exit_code(&self) -> i32 {
        use pairx_core::Error as E;
        match self {
            CliError::Core(e) if e.is_transport() => 4,
            CliError::Core(E::EnumerationGuard { .. }) => 3,
            CliError::Core(
                E::IllPosedFit { .. }
                | E::MissingConstraintRow(_)
                | E::UnsupportedConversion
                | E::UndefinedCorrelation(_)
                | E::NormalizationDegenerate(_)
                | E::UndefinedPgr
                | E::NonFinite(_),
            ) => 5,
            CliError::Core(E::Io(_)) | CliError::Io(_) | CliError::Read { .. } | CliError::OutputExists(_) => 6,
            CliError::Core(_) | CliError::Parse { .. } | CliError::Usage(_) => 2,
            CliError::InputChanged { .. } | CliError::CheckFailed(_) => 7,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "error": {
                "kind": self.kind(),
                "message": self.to_string(),
                "exit_code": self.exit_code(),
            }
        })
    }
}

pub type CliResult<T> = Result<T, CliError>;
