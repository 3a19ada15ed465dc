use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A scalar input fell outside the domain of a binning rule.
    #[error("{what} out of range: {value}")]
    Domain { what: &'static str, value: f64 },

    /// A session or dataset record violates a data invariant.
    #[error("invalid record{}: {reason}", fmt_record(*.record))]
    Validation {
        record: Option<usize>,
        reason: String,
    },

    #[error("usage: {0}")]
    Usage(String),

    #[error("parse error{}: {source}", fmt_record(*.record))]
    Parse {
        record: Option<usize>,
        #[source]
        source: serde_json::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    /// Degenerate numerical input (constant vectors, singular fits).
    #[error("numerical failure: {0}")]
    Numerical(String),
}

fn fmt_record(record: Option<usize>) -> String {
    match record {
        Some(i) => format!(" (record {i})"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn invalid(reason: impl Into<String>) -> Self {
        Error::Validation {
            record: None,
            reason: reason.into(),
        }
    }

    /// Attach a dataset record index to validation and parse errors.
    pub fn at_record(self, index: usize) -> Self {
        match self {
            Error::Validation { reason, .. } => Error::Validation {
                record: Some(index),
                reason,
            },
            Error::Parse { source, .. } => Error::Parse {
                record: Some(index),
                source,
            },
            Error::Domain { what, value } => Error::Validation {
                record: Some(index),
                reason: format!("{what} out of range: {value}"),
            },
            other => other,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
