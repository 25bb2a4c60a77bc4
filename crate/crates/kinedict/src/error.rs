//! CLI error taxonomy mapped onto process exit codes.
//!
//! Every failure a subcommand can hit is classified at the point where its
//! meaning is known: a bad flag combination is a usage error no matter which
//! library call rejected it, a malformed input file is a data error, and a
//! computation that degenerates on valid input is a numeric failure.

use std::fmt;

/// Exit code for a successful run.
pub const EXIT_OK: i32 = 0;

/// A failed CLI invocation, tagged with how the process should exit.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, bad flag values, or an inconsistent flag/config combination.
    /// Exit code 1.
    Usage(String),
    /// Input files that are missing, unreadable, or malformed. Exit code 2.
    Data(String),
    /// A computation failed on well-formed input (degenerate geometry,
    /// non-finite intermediates). Exit code 3.
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage: {msg}"),
            CliError::Data(msg) => write!(f, "data: {msg}"),
            CliError::Numeric(msg) => write!(f, "numeric: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = Result<T, CliError>;

/// Classify a fallible step into one of the three exit classes.
///
/// `context` names the file or operation so the message stands on its own.
pub trait StageExt<T> {
    fn usage_stage(self, context: &str) -> CliResult<T>;
    fn data_stage(self, context: &str) -> CliResult<T>;
    fn numeric_stage(self, context: &str) -> CliResult<T>;
}

impl<T, E: fmt::Display> StageExt<T> for Result<T, E> {
    fn usage_stage(self, context: &str) -> CliResult<T> {
        self.map_err(|e| CliError::Usage(format!("{context}: {e}")))
    }

    fn data_stage(self, context: &str) -> CliResult<T> {
        self.map_err(|e| CliError::Data(format!("{context}: {e}")))
    }

    fn numeric_stage(self, context: &str) -> CliResult<T> {
        self.map_err(|e| CliError::Numeric(format!("{context}: {e}")))
    }
}
