//! Command-line front end for `lppl-core`.
//!
//! Exit codes: 0 success, 1 usage error (bad flags, unreadable input,
//! invalid configuration), 2 computation error (fit or data failure).

pub mod args;
mod commands;
pub mod report;

use std::fmt;
use std::process::ExitCode;

pub use commands::run;

/// Failure classified by exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(anyhow::Error),
    Compute(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(1),
            CliError::Compute(_) => ExitCode::from(2),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(e) | CliError::Compute(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<lppl_core::Error> for CliError {
    fn from(e: lppl_core::Error) -> Self {
        if e.is_usage() {
            CliError::Usage(e.into())
        } else {
            CliError::Compute(e.into())
        }
    }
}

/// Output failures after the computation succeeded count as usage errors:
/// they are almost always a bad `--out` path.
impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Usage(e)
    }
}
