use std::path::PathBuf;

use thiserror::Error;

use crate::field::SpectralField;

#[derive(Debug, Error)]
pub enum SqgError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("blow-up detected at t = {t}")]
    BlowUp {
        t: f64,
        /// Last state that passed the finiteness and amplitude checks, with its time.
        last_valid: Box<(f64, SpectralField)>,
    },

    #[error("{label}: {source}")]
    Member {
        label: String,
        #[source]
        source: Box<SqgError>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl SqgError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SqgError::Io {
            path: path.into(),
            source,
        }
    }
}

impl SqgError {
    pub fn member(label: impl Into<String>, source: SqgError) -> Self {
        SqgError::Member {
            label: label.into(),
            source: Box::new(source),
        }
    }

    /// Innermost error behind any study-member wrappers.
    pub fn root(&self) -> &SqgError {
        match self {
            SqgError::Member { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, SqgError>;
