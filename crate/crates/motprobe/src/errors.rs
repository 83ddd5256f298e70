//! Error classification for exit codes and the machine-readable error line.

use std::fmt;

use motprobe_core::Error as CoreError;

/// Failure classes, each with a fixed exit code.
#[derive(Debug)]
pub enum RunError {
    /// Unparseable configuration or input file (exit 2).
    Config(String),
    /// A value violates a documented invariant (exit 3).
    Validation(String),
    /// Numerical failure such as a fit that did not converge (exit 4).
    Numerical(String),
    /// File-system failure (exit 5).
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Validation(_) => 3,
            RunError::Numerical(_) => 4,
            RunError::Io(_) => 5,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            RunError::Config(_) => "config",
            RunError::Validation(_) => "validation",
            RunError::Numerical(_) => "numerical",
            RunError::Io(_) => "io",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            RunError::Config(m)
            | RunError::Validation(m)
            | RunError::Numerical(m)
            | RunError::Io(m) => m,
        }
    }

    /// One-line JSON for the error stream.
    pub fn to_json_line(&self) -> String {
        serde_json::json!({ "error": self.kind(), "message": self.message() }).to_string()
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind(), self.message())
    }
}

impl From<CoreError> for RunError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::NoConvergence { .. } => RunError::Numerical(e.to_string()),
            CoreError::SeriesParse(_) => RunError::Config(e.to_string()),
            _ => RunError::Validation(e.to_string()),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e.to_string())
    }
}

pub type RunResult<T> = Result<T, RunError>;
