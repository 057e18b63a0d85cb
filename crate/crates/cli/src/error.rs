use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const IO: i32 = 1;
    pub const VALIDATION: i32 = 2;
    pub const NUMERIC: i32 = 3;
    pub const GOLDEN: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] ncfffd::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0} golden row(s) out of tolerance")]
    Golden(usize),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        use ncfffd::Error as E;
        match self {
            CliError::Usage(_) | CliError::Config(_) => exit::VALIDATION,
            // Bad user input surfaced by the library is a validation error;
            // everything else means the numerics gave up.
            CliError::Core(
                E::InvalidConfig(_) | E::InvalidConstellation(_) | E::Domain(_) | E::LengthMismatch { .. },
            ) => exit::VALIDATION,
            CliError::Core(_) => exit::NUMERIC,
            CliError::Io { .. } => exit::IO,
            CliError::Golden(_) => exit::GOLDEN,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
