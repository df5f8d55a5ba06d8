use std::path::PathBuf;

use skyforge_core::{CatalogError, CodecError, ConfigError, PipelineError, SurrogateError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure class, mapped one-to-one onto process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Usage,
    Data,
    Divergence,
    Io,
}

impl Category {
    pub fn exit_code(self) -> i32 {
        match self {
            Category::Usage => 2,
            Category::Data => 3,
            Category::Divergence => 4,
            Category::Io => 5,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("checkpoint: bad magic bytes")]
    BadMagic,
    #[error("checkpoint: unsupported format version {0}")]
    BadVersion(u32),
    #[error("checkpoint: truncated while reading {0}")]
    Truncated(&'static str),
    #[error("checkpoint: checksum mismatch")]
    BadChecksum,
    #[error("checkpoint: {0}")]
    Corrupt(String),
    #[error("checkpoint was trained against a different catalog (use the override to load anyway)")]
    CatalogMismatch,
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    InvalidConfig(#[from] ConfigError),
    #[error(transparent)]
    Surrogate(#[from] SurrogateError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn category(&self) -> Category {
        match self {
            Error::Io { .. } => Category::Io,
            Error::Usage(_) | Error::Config { .. } | Error::InvalidConfig(_) => Category::Usage,
            Error::Surrogate(SurrogateError::Divergence { .. })
            | Error::Pipeline(PipelineError::Surrogate(SurrogateError::Divergence { .. })) => Category::Divergence,
            _ => Category::Data,
        }
    }
}
