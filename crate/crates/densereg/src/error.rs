use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input text; carries the 1-based line number.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// An input violated a documented precondition or invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// A numerical procedure could not produce a usable result
    /// (singular system, non-positive spectrum, non-finite loss).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Mismatched dimensions between related containers.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Binary or CSV container violated its declared format.
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable code for CLI error lines.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "PARSE",
            Error::Validation(_) => "VALIDATION",
            Error::Numerical(_) => "NUMERICAL",
            Error::Shape(_) => "SHAPE",
            Error::Format(_) => "FORMAT",
            Error::Io(_) => "IO",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
