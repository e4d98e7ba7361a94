use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("channel mismatch: {left} vs {right}")]
    ChannelMismatch { left: usize, right: usize },

    #[error("invalid piecewise map: {0}")]
    InvalidMap(String),

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("truncation height {k} is below the maximum finite height {max_height}")]
    TruncationTooLow { k: f64, max_height: f64 },

    #[error("edge above vertex '{0}' has unbounded support; truncate the dendrogram first")]
    Unbounded(String),

    #[error("brute force refuses {edges} edges (limit {limit})")]
    TooLarge { edges: usize, limit: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{path}: {message}")]
    Schema { path: String, message: String },

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("distance between '{left}' and '{right}' failed: {source}")]
    Pair {
        left: String,
        right: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }
}
