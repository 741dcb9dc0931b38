//! Implementation of the `thomson5` command-line tool. Each subcommand is a
//! pure function from parsed arguments to output strings, so the command
//! layer is testable without spawning processes.

pub mod commands;
pub mod famspec;
pub mod fmt;
pub mod reports;

use std::fmt::Display;

/// Command-layer failures, split by exit code: usage errors exit 2,
/// numerical failures exit 3, I/O problems exit 1.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(String),
    Io(std::io::Error),
}

impl Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "invalid arguments: {msg}"),
            CliError::Numerical(msg) => write!(f, "numerical failure: {msg}"),
            CliError::Io(err) => write!(f, "i/o error: {err}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Io(err)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}
