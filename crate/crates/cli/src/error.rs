use thiserror::Error;

/// Failure of a command, classified by the process exit code it maps to.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, bad configuration values, unknown configuration keys.
    #[error("usage: {0}")]
    Usage(String),
    /// Unreadable, malformed or inconsistent input data.
    #[error("{0}")]
    Data(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub const EXIT_USAGE: i32 = 1;
    pub const EXIT_DATA: i32 = 2;
    pub const EXIT_NUMERICAL: i32 = 3;

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => Self::EXIT_USAGE,
            CliError::Data(_) => Self::EXIT_DATA,
            CliError::Numerical(_) => Self::EXIT_NUMERICAL,
        }
    }

    pub(crate) fn usage(msg: impl std::fmt::Display) -> Self {
        CliError::Usage(msg.to_string())
    }

    /// Attaches a path (or other context) to a data error.
    pub(crate) fn at(context: impl std::fmt::Display, err: impl Into<CliError>) -> Self {
        match err.into() {
            CliError::Data(msg) => CliError::Data(format!("{context}: {msg}")),
            other => other,
        }
    }
}

impl From<pda_core::Error> for CliError {
    fn from(err: pda_core::Error) -> Self {
        use pda_core::Error as E;
        match err {
            E::NonFiniteGradient | E::NonFiniteLoss { .. } => CliError::Numerical(err.to_string()),
            _ => CliError::Data(err.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Data(err.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(err: csv::Error) -> Self {
        CliError::Data(err.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
