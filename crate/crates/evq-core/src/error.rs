use std::path::Path;

/// Crate-wide error type.
///
/// Variants are grouped so that callers (in particular the CLI) can map
/// them onto exit codes: everything except [`Error::Internal`] is a data
/// or usage problem.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed record at line {line}: {msg}")]
    Malformed { line: usize, msg: String },

    #[error("missing field {field} at line {line}")]
    MissingField { field: String, line: usize },

    /// A precondition on an operation's input was violated.
    #[error("{0}")]
    InvalidInput(String),

    /// A persisted artifact (model, index) failed to load or validate.
    #[error("bad artifact: {0}")]
    BadArtifact(String),

    /// A pipeline stage failed; wraps the underlying error with context.
    #[error("stage {stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
