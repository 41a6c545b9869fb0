use std::path::PathBuf;

/// Process exit status classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Ok = 0,
    Validation = 1,
    Data = 2,
    Internal = 3,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("missing prerequisite {path} (run `versekit {command}` first)")]
    MissingPrerequisite { path: String, command: &'static str },
    #[error("{path} was produced with fingerprint {found}, the current config gives {expected} (rerun `versekit {command}`)")]
    FingerprintMismatch { path: String, found: String, expected: String, command: &'static str },
    #[error("{0}")]
    Data(String),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl CliError {
    pub fn kind(&self) -> ExitKind {
        match self {
            CliError::Config(_) => ExitKind::Validation,
            CliError::Internal(_) => ExitKind::Internal,
            _ => ExitKind::Data,
        }
    }

    pub fn io(path: impl Into<PathBuf>, e: impl std::fmt::Display) -> CliError {
        CliError::Io { path: path.into(), message: e.to_string() }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
