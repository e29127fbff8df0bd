use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("input error: {0}")]
    Input(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    /// The requested fairness notion has no conditioning mass (e.g. FP with no y=0 rows).
    #[error("{0} notion undefined: {1}")]
    NotionUndefined(&'static str, String),

    #[error("numerical error: {message} (condition estimate {condition:.3e})")]
    Numerical { message: String, condition: f64 },

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("no convergence after {iterations} iterations (achieved gap {gap:.3e})")]
    NoConvergence { iterations: usize, gap: f64 },

    #[error("round {round}: {source}")]
    Round {
        round: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at_round(self, round: usize) -> Self {
        Error::Round {
            round,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
