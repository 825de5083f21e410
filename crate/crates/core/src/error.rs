use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A hyperparameter or model parameter lies outside its domain.
    #[error("parameter out of domain: {0}")]
    ParameterDomain(String),

    /// An input value lies outside the support of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Every category of a categorical draw has zero mass.
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// Two experiment directories that cannot be compared.
    #[error("cannot compare {} and {}: {message}", a.display(), b.display())]
    Incomparable { a: PathBuf, b: PathBuf, message: String },

    /// Configuration problem anchored at a line of the offending file.
    #[error("{}:{}: {message}", path.display(), line.map(|l| l.to_string()).unwrap_or_else(|| "?".into()))]
    Config {
        path: PathBuf,
        line: Option<usize>,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
