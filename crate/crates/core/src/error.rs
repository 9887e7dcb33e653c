use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("validation failed: {0}")]
    Validation(String),

    /// Source codes in the flow matrix that the crosswalk does not map.
    #[error("crosswalk does not cover source codes: {}", .codes.join(", "))]
    Coverage { codes: Vec<String> },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, err: csv::Error) -> Self {
        let path = path.into();
        let line = err.position().map(|p| p.line()).unwrap_or(0);
        match err.into_kind() {
            csv::ErrorKind::Io(source) => Error::Io { path, source },
            kind => Error::Parse {
                path,
                line,
                message: csv_kind_message(kind),
            },
        }
    }

    /// Process exit status for this failure class: 1 estimation, 2 validation, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Estimation(_) => 1,
            Error::Parse { .. }
            | Error::Validation(_)
            | Error::Coverage { .. }
            | Error::Degenerate(_) => 2,
            Error::Io { .. } => 3,
        }
    }
}

fn csv_kind_message(kind: csv::ErrorKind) -> String {
    match kind {
        csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => format!("expected {expected_len} fields, found {len}"),
        csv::ErrorKind::Utf8 { err, .. } => err.to_string(),
        other => format!("{other:?}"),
    }
}
