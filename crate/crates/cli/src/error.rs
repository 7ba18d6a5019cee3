use std::io;
use std::path::{Path, PathBuf};

use assocgeom_core::ErrorClass;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] assocgeom_core::Error),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error("{}: not a {expected} file (bad magic)", path.display())]
    BadMagic { path: PathBuf, expected: &'static str },
    #[error("{}: unsupported {format} version {version}", path.display())]
    UnsupportedVersion { path: PathBuf, format: &'static str, version: u32 },
    #[error("{}: truncated: expected {expected} bytes, found {found}", path.display())]
    Truncated { path: PathBuf, expected: u64, found: u64 },
    #[error("{}: {message}", path.display())]
    Malformed { path: PathBuf, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("missing {what}: expected {pattern}")]
    Missing { what: String, pattern: String },
}

impl Error {
    pub fn io(path: impl AsRef<Path>, source: io::Error) -> Error {
        Error::Io { path: path.as_ref().to_path_buf(), source }
    }

    pub fn malformed(path: impl AsRef<Path>, message: impl Into<String>) -> Error {
        Error::Malformed { path: path.as_ref().to_path_buf(), message: message.into() }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Core(e) => e.class(),
            Error::Config(_) => ErrorClass::Config,
            _ => ErrorClass::Data,
        }
    }

    /// Process exit status: 2 config, 3 data, 4 transport, 5 numerical.
    pub fn exit_code(&self) -> i32 {
        match self.class() {
            ErrorClass::Config => 2,
            ErrorClass::Data => 3,
            ErrorClass::Transport => 4,
            ErrorClass::Numerical => 5,
        }
    }
}
