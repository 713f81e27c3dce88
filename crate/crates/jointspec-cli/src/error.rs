//! CLI error type with a fixed exit-code mapping.
//!
//! Exit codes: 0 success, 2 usage, 3 parse/validation, 4 verdict failure
//! under --strict, 5 budget exhausted, 1 anything else.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("verdict failed: {0}")]
    Verdict(String),
    #[error("budget exhausted: {0}")]
    Budget(String),
    /// Internal only: the cache layer recovers from this by recomputing.
    #[error("corrupt cache record: {0}")]
    CorruptCache(String),
    #[error(transparent)]
    Lib(#[from] jointspec::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Parse { .. } | CliError::Validation(_) => 3,
            CliError::Verdict(_) => 4,
            CliError::Budget(_) => 5,
            CliError::Lib(jointspec::Error::BudgetExceeded { .. }) => 5,
            _ => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
