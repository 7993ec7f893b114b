use thiserror::Error;

/// Failures of a run, split by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// An invariant or oracle check failed (exit 1).
    #[error("invariant violated: {0}")]
    Invariant(String),
    /// Bad configuration or parameters (exit 2).
    #[error("configuration error: {0}")]
    Config(String),
    /// File system or format error (exit 2).
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invariant(_) => 1,
            CliError::Config(_) | CliError::Io(_) => 2,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<pellclass::Error> for CliError {
    fn from(e: pellclass::Error) -> Self {
        use pellclass::Error as E;
        match e {
            E::InvalidParameter(_) | E::Overflow(_) | E::TermCap { .. } => CliError::Config(e.to_string()),
            _ => CliError::Invariant(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
