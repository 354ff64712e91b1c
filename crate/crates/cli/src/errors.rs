//! CLI error taxonomy mapped onto process exit codes.

use std::fmt;

/// Exit code 2: invalid flags, config files or parameter combinations.
/// Exit code 3: unreadable or malformed input data.
/// Exit code 4: numeric failure inside the statistical machinery.
/// Exit code 1: verification mismatch.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
    Numeric(String),
    Mismatch(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Mismatch(_) => 1,
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        CliError::Data(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric error: {m}"),
            CliError::Mismatch(m) => write!(f, "verification mismatch: {m}"),
        }
    }
}

impl From<qanova::Error> for CliError {
    fn from(e: qanova::Error) -> Self {
        match e {
            qanova::Error::Data(m) => CliError::Data(m),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
