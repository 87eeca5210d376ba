use thiserror::Error;

use crate::drift::Violation;

/// Crate-wide error type.
///
/// Drift-set rule violations are ordinary data when produced by
/// [`crate::drift::DriftSet::validate`]; they only become an `Error` when an
/// operation requires a valid set and is handed a broken one.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid drift set: {}", format_violations(.0))]
    InvalidDriftSet(Vec<Violation>),

    #[error("invalid concept set: {0}")]
    InvalidConceptSet(String),

    #[error("index {index} out of range 1..={n}")]
    IndexOutOfRange { index: u64, n: u64 },

    #[error("{0}")]
    EmptyInput(&'static str),

    #[error("fingerprint mismatch: {0}")]
    FingerprintMismatch(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed file: {0}")]
    Format(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by broken inputs rather than a failing
    /// environment; the CLI maps these to exit code 1 and I/O trouble to 2.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_) | Error::Format(_) | Error::Json(_))
    }
}
