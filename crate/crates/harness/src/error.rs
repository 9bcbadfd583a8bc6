use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// Malformed file content; `line` is 1-based, 0 when unknown.
    #[error("{}:{line}: {message}", file.display())]
    Format { file: PathBuf, line: u64, message: String },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] synergy_core::Error),
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

/// Process exit statuses.
pub mod exit {
    pub const OK: u8 = 0;
    pub const CONFIG: u8 = 1;
    pub const NUMERIC: u8 = 2;
    pub const PARTIAL: u8 = 3;
}

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn format(file: &Path, line: u64, message: impl Into<String>) -> Self {
        Self::Format {
            file: file.to_path_buf(),
            line,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Core(e) if is_numeric(e) => exit::NUMERIC,
            _ => exit::CONFIG,
        }
    }
}

pub fn is_numeric(e: &synergy_core::Error) -> bool {
    use synergy_core::Error as E;
    matches!(e, E::Numeric { .. } | E::NoObservations)
}
