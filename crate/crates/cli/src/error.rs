use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_UNDECIDED: i32 = 2;
pub const EXIT_ACCEPTANCE: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}", format_config(path, *line, *column, message))]
    Config { path: PathBuf, line: Option<usize>, column: Option<usize>, message: String },

    #[error("{0}")]
    Usage(String),

    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Core(#[from] bpire_core::Error),

    #[error("{failed} acceptance criteria failed")]
    AcceptanceFailed { failed: usize },
}

fn format_config(path: &std::path::Path, line: Option<usize>, column: Option<usize>, message: &str) -> String {
    match (line, column) {
        (Some(l), Some(c)) => format!("config error: {}:{l}:{c}: {message}", path.display()),
        (Some(l), None) => format!("config error: {}:{l}: {message}", path.display()),
        _ => format!("config error: {}: {message}", path.display()),
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(bpire_core::Error::Undecided { .. }) => EXIT_UNDECIDED,
            CliError::AcceptanceFailed { .. } => EXIT_ACCEPTANCE,
            _ => EXIT_CONFIG,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
