//! Errors of the front end and their exit codes.

use std::path::PathBuf;

use bundle_reduction::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },

    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },

    #[error("malformed {what} {path}: {message}")]
    Parse { what: &'static str, path: PathBuf, message: String },

    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    /// 2 for anything the user can fix in the input, 1 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Read { .. } | CliError::Parse { .. } => 2,
            CliError::Write { .. } => 2,
            CliError::Core(e) => match e {
                CoreError::InvalidConfig(_)
                | CoreError::UnknownScenario { .. }
                | CoreError::Shape(_)
                | CoreError::InvalidBundle(_)
                | CoreError::MissingGroupChart(_) => 2,
                _ => 1,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
