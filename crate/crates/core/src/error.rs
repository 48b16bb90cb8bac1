use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameters or configuration. Carries every violation found.
    #[error("configuration error: {}", .0.join("; "))]
    Config(Vec<String>),

    /// A requested time, shift or window falls outside what is available.
    #[error("range error: {0}")]
    Range(String),

    #[error("blow-up at step {step} (t = {time}): {reason}")]
    BlowUp { step: usize, time: f64, reason: String },

    #[error("lattice mismatch: {0}")]
    LatticeMismatch(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("checkpoint version {found} is not supported (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),

    #[error("invariant violation: {0}")]
    Invariant(String),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(vec![msg.into()])
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for batch scripting.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::LatticeMismatch(_) => 2,
            Error::Range(_) => 3,
            Error::BlowUp { .. } => 4,
            Error::Io { .. } | Error::Version { .. } | Error::Corrupt(_) | Error::Invariant(_) => 5,
        }
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Range(_) => "range",
            Error::BlowUp { .. } => "blow-up",
            Error::LatticeMismatch(_) => "lattice-mismatch",
            Error::Io { .. } => "io",
            Error::Version { .. } => "version",
            Error::Corrupt(_) => "corrupt",
            Error::Invariant(_) => "invariant",
        }
    }
}
