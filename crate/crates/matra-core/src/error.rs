//! Error type shared across the toolkit.
//!
//! Errors fall into two broad classes which the CLI maps to exit codes:
//! computational failures (degenerate statistics, numeric blow-ups) and
//! input problems (I/O, malformed files, bad arguments).

use std::path::PathBuf;

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, MatraError>;

/// All errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum MatraError {
    /// Underlying I/O failure, annotated with the path involved.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A file had unparseable content. `line` is 1-based; 0 means the
    /// problem is not tied to a specific line.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// Two records in one file share a segment id.
    #[error("{path}:{line}: duplicate segment id {id:?}")]
    DuplicateId {
        path: PathBuf,
        line: usize,
        id: String,
    },

    /// A required text field was empty (or whitespace-only).
    #[error("{path}:{line}: field {field:?} must be non-empty")]
    EmptyField {
        path: PathBuf,
        line: usize,
        field: String,
    },

    /// Vector or matrix shapes do not line up.
    #[error("dimension mismatch: {message}")]
    Dimension { message: String },

    /// A sentence embedding was requested for a segment that has none and
    /// the averaged-word-vector fallback is disabled.
    #[error("no stored embedding for segment {segment_id:?} ({side}) and fallback is disabled")]
    MissingEmbedding { segment_id: String, side: String },

    /// An argument or configuration value is out of range or inconsistent.
    #[error("invalid argument: {message}")]
    InvalidArgument { message: String },

    /// A model or statistics artifact could not be decoded.
    #[error("{path}: {message}")]
    ArtifactFormat { path: PathBuf, message: String },

    /// Correlation was requested over a constant sequence.
    #[error("zero variance in {context}; correlation is undefined")]
    ZeroVariance { context: String },

    /// A statistic needs more data points than were available.
    #[error("{context}: got {got} data points, need at least {need}")]
    InsufficientData {
        context: String,
        got: usize,
        need: usize,
    },

    /// Training or inference produced a non-finite value.
    #[error("numeric failure: {message}")]
    Numeric { message: String },
}

impl MatraError {
    /// True for failures of the computation itself (as opposed to bad
    /// input or I/O). The CLI exits 1 for these and 2 for everything else.
    pub fn is_computational(&self) -> bool {
        matches!(
            self,
            MatraError::ZeroVariance { .. }
                | MatraError::InsufficientData { .. }
                | MatraError::Numeric { .. }
        )
    }

    /// Wrap an `io::Error` with the path that produced it.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        MatraError::Io {
            path: path.into(),
            source,
        }
    }

    /// Build a `Parse` error for `path:line`.
    pub fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        MatraError::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// Build an `InvalidArgument` error.
    pub fn invalid(message: impl Into<String>) -> Self {
        MatraError::InvalidArgument {
            message: message.into(),
        }
    }

    /// Build a `Dimension` error.
    pub fn dimension(message: impl Into<String>) -> Self {
        MatraError::Dimension {
            message: message.into(),
        }
    }

    /// Build a `Numeric` error.
    pub fn numeric(message: impl Into<String>) -> Self {
        MatraError::Numeric {
            message: message.into(),
        }
    }
}
