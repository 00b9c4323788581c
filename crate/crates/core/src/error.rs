use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("no windows in trace")]
    EmptyTrace,

    #[error("trace total is zero; nothing to rescale")]
    ZeroTotal,

    #[error("scale target {target} outside [1, {max}]")]
    TargetOutOfRange { target: i64, max: u32 },

    #[error("reward divisor must be at least one instance, got {0}")]
    RewardDomain(u32),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: row {line}: {message}")]
    QTableLoad {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } | Error::QTableLoad { .. } => 2,
            Error::Invariant(_) => 3,
            _ => 1,
        }
    }
}
