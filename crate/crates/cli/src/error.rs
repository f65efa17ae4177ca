use thiserror::Error;

use xlayer_core::Error as CoreError;
use xlayer_milp::MilpError;

/// Exit status when the instance is survivable, or a command succeeded.
pub const EXIT_OK: i32 = 0;
/// Exit status of `check` on a non-survivable instance.
pub const EXIT_NOT_SURVIVABLE: i32 = 10;
/// Exit status for unreadable, malformed or invalid input and bad usage.
pub const EXIT_INPUT: i32 = 2;
/// Exit status when a valid input could not be processed.
pub const EXIT_FAILURE: i32 = 1;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error(transparent)]
    Milp(#[from] MilpError),

    #[error("{0}")]
    Usage(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Usage(_) => EXIT_INPUT,
            CliError::Core(e) => match e {
                CoreError::TreeLimit { .. }
                | CoreError::TerminalBound { .. }
                | CoreError::TerminalsDisconnected => EXIT_FAILURE,
                _ => EXIT_INPUT,
            },
            CliError::Milp(e) => match e {
                MilpError::NameCollision(_)
                | MilpError::Parse { .. }
                | MilpError::UnknownFormulation(_)
                | MilpError::Core(_) => EXIT_INPUT,
                _ => EXIT_FAILURE,
            },
            CliError::Csv(_) => EXIT_FAILURE,
        }
    }
}
