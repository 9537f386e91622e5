//! CLI error classification with a stable exit-code contract:
//! 0 = completed or blow-up detected, 1 = I/O failure, 2 = configuration
//! error, 3 = solver failure, 4 = geometry precondition failure.

use std::fmt;
use std::process::ExitCode;

#[derive(Debug)]
pub enum CliError {
    Io(String),
    Config(String),
    Solver(String),
    Geometry(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Io(_) => ExitCode::from(1),
            CliError::Config(_) => ExitCode::from(2),
            CliError::Solver(_) => ExitCode::from(3),
            CliError::Geometry(_) => ExitCode::from(4),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Solver(m) => write!(f, "solver failure: {m}"),
            CliError::Geometry(m) => write!(f, "geometry error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
