// SPDX-License-Identifier: MIT OR Apache-2.0

//! Crate-wide error type.

use std::path::PathBuf;

/// Errors produced by generation, scoring, probing and the file formats.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A numeric argument fell outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Input violated a documented precondition or invariant.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// Records required for a join were not supplied.
    #[error("missing records for question ids: {}", .0.join(", "))]
    MissingRecords(Vec<String>),

    /// A record points at an id that does not exist.
    #[error("dangling reference: {kind} `{id}` has no matching {target}")]
    Dangling {
        kind: &'static str,
        id: String,
        target: &'static str,
    },

    /// The same id appeared twice where ids must be unique.
    #[error("duplicate {kind} id `{id}`")]
    DuplicateId { kind: &'static str, id: String },

    /// A document or record stream could not be decoded.
    #[error("{location}: {message}")]
    Format { location: String, message: String },

    /// Document declared a schema version this build does not read.
    #[error("unsupported schema version {found} (expected {expected})")]
    Version { found: u64, expected: u64 },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Self::Invalid(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Self::Domain(msg.into())
    }

    pub(crate) fn format(location: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Format {
            location: location.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status for the command-line tool: 2 for I/O and format
    /// problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Io { .. } | Self::Format { .. } | Self::Version { .. } => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
