use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {error}", path.display())]
    File { path: PathBuf, error: std::io::Error },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("checkpoint byte {offset}: {msg}")]
    Checkpoint { offset: usize, msg: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] meshdn_core::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn file(path: impl Into<PathBuf>, error: std::io::Error) -> Self {
        Error::File {
            path: path.into(),
            error,
        }
    }

    /// Prefixes parse-level errors with the file they came from.
    pub(crate) fn in_file(self, path: &std::path::Path) -> Self {
        match self {
            Error::File { .. } => self,
            e => Error::Invalid(format!("{}: {e}", path.display())),
        }
    }
}
