use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

/// A validation failure at a JSON path such as `$.model.theta[2]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

fn list(errors: &[ParseError]) -> String {
    errors.iter().map(|e| format!("\n  {e}")).collect()
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("problem: {} error(s){}", .0.len(), list(.0))]
    Parse(Vec<ParseError>),
    #[error("io: {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("json: {path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("csv: {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{0}")]
    Core(#[from] oedkit::Error),
    #[error("usage: {0}")]
    Usage(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// Validation errors, if this is a problem-file failure.
    pub fn parse_errors(&self) -> &[ParseError] {
        match self {
            CliError::Parse(e) => e,
            _ => &[],
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
