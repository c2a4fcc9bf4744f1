//! Error type shared by the whole pipeline.

use std::path::PathBuf;

/// Anything that can go wrong between reading an image and writing a
/// detection list.
///
/// The variants are grouped so a caller (the CLI in particular) can map
/// them to coarse exit classes: I/O, malformed input, invalid
/// configuration, numerical failure.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Operating-system level I/O failure, tagged with the path involved.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A file was readable but not in the expected format.
    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },

    /// Arguments or configuration that fail validation before any math
    /// runs (bad dimensions, empty training set, out-of-range options).
    #[error("{0}")]
    Validation(String),

    /// Shapes that must agree did not.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Numerical failure: non-finite values, zero-norm tensors, a solver
    /// that cannot make progress.
    #[error("numerical error: {0}")]
    Numerical(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format { path: path.into(), reason: reason.into() }
    }

    /// Exit-code class used by the CLI: 2 = I/O, 3 = bad input, 4 =
    /// numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 2,
            Error::Format { .. } | Error::Validation(_) | Error::ShapeMismatch(_) => 3,
            Error::Numerical(_) => 4,
        }
    }
}
