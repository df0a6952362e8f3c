// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::PathBuf;
use thiserror::Error;

/// Errors produced by segmentation, simulation and ingestion.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SameError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },

    #[error("scenario {scenario}, replicate {replicate}: {source}")]
    Replicate {
        scenario: usize,
        replicate: usize,
        #[source]
        source: Box<SameError>,
    },
}

impl SameError {
    pub fn invalid_input(message: impl Into<String>) -> Self {
        Self::InvalidInput(message.into())
    }
}

pub type Result<T> = std::result::Result<T, SameError>;
