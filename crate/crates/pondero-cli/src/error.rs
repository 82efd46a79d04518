//! CLI error type and its mapping to process exit codes.
//!
//! 2 = validation (bad flags, bad config, bad input data),
//! 3 = a fit ran but did not converge,
//! 4 = I/O failure.  clap's own usage errors also exit 2.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    NonConvergence(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::NonConvergence(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(msg) => write!(f, "error: {msg}"),
            CliError::NonConvergence(msg) => write!(f, "error: fit did not converge: {msg}"),
            CliError::Io(msg) => write!(f, "error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<pondero::Error> for CliError {
    fn from(err: pondero::Error) -> Self {
        CliError::Validation(err.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Io(err.to_string())
    }
}
