use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

/// Failures of the command-line layer, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad job file, flag, or input file contents.
    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed geometry or checkpoint.
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },

    /// A certificate or round-trip check failed.
    #[error("invariant failure: {0}")]
    Invariant(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invariant(_) => 1,
            CliError::Config(_) | CliError::Io { .. } | CliError::Parse { .. } => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        CliError::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}

impl From<tuttenet::Error> for CliError {
    fn from(e: tuttenet::Error) -> Self {
        use tuttenet::Error as E;
        match e {
            E::InvalidArgument(_) | E::OutOfDomain { .. } | E::NotInImage { .. } => CliError::Config(e.to_string()),
            E::InjectivityViolation { .. } => CliError::Invariant(e.to_string()),
            E::Numerical(_) => CliError::Numerical(e.to_string()),
        }
    }
}
