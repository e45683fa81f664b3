use std::path::Path;

use thiserror::Error;

/// Failure classes of the command line, each with its own exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{source_name}: row {row}: {message}")]
    Row {
        source_name: String,
        row: usize,
        message: String,
    },
    #[error("{source_name}: {message}")]
    Parse { source_name: String, message: String },
    #[error("numerical failure: {0}")]
    Numerical(#[from] npcure_core::Error),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub const USAGE: u8 = 2;
    pub const PARSE: u8 = 3;
    pub const NUMERICAL: u8 = 4;
    pub const IO: u8 = 5;

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => Self::USAGE,
            CliError::Row { .. } | CliError::Parse { .. } => Self::PARSE,
            CliError::Numerical(_) => Self::NUMERICAL,
            CliError::Io { .. } => Self::IO,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            context: path.display().to_string(),
            source,
        }
    }

    pub fn parse(source_name: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Parse {
            source_name: source_name.into(),
            message: message.into(),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
