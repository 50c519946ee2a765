use std::fmt;
use std::path::PathBuf;

use bsum::BsumError;
use thiserror::Error;

/// Where in an input file a problem was found. Rows are file line numbers
/// and columns are 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestError {
    pub path: PathBuf,
    pub row: Option<u64>,
    pub col: Option<usize>,
    pub message: String,
}

impl fmt::Display for IngestError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.path.display())?;
        if let Some(r) = self.row {
            write!(f, ":{r}")?;
            if let Some(c) = self.col {
                write!(f, ":{c}")?;
            }
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for IngestError {}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),

    #[error("ingest error: {0}")]
    Ingest(#[from] IngestError),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed curve file {}: {message}", path.display())]
    Curve { path: PathBuf, message: String },

    #[error(transparent)]
    Core(#[from] BsumError),
}

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for anything wrong with the inputs, 1 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Ingest(_) => 2,
            HarnessError::Core(BsumError::Spec(_) | BsumError::Shape { .. }) => 2,
            _ => 1,
        }
    }
}
