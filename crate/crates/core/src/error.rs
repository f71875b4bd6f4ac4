//! Top-level error with a diagnostic class for the command line.

use std::fmt;
use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Parse,
    Assembly,
    Runtime,
    Io,
}

impl fmt::Display for ErrorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorClass::Parse => "parse error",
            ErrorClass::Assembly => "assembly error",
            ErrorClass::Runtime => "runtime error",
            ErrorClass::Io => "I/O error",
        })
    }
}

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed case file, SFL syntax, result or point file content.
    #[error("{0}")]
    Parse(String),
    /// Inconsistent definitions: unknown or duplicate symbols, bad domain.
    #[error("{0}")]
    Assembly(String),
    /// Failures while stepping: shape mismatches, non-finite values.
    #[error("{0}")]
    Runtime(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Parse(_) => ErrorClass::Parse,
            Error::Assembly(_) => ErrorClass::Assembly,
            Error::Runtime(_) => ErrorClass::Runtime,
            Error::Io { .. } => ErrorClass::Io,
        }
    }

    pub fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }

    pub fn assembly(msg: impl Into<String>) -> Self {
        Error::Assembly(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        Error::Runtime(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
