use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Shapes, layouts or settings that cannot work together.
    #[error("configuration error: {0}")]
    Config(String),

    /// Caller-supplied data violating a precondition (empty sets, too few samples).
    #[error("input error: {0}")]
    Input(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("capacity error: {players} players exceeds the exact enumeration limit of {limit}; use gtg_shapley instead")]
    Capacity { players: usize, limit: usize },

    #[error("ingestion error in {path}: {field} at byte offset {offset}: {message}")]
    Ingest {
        path: String,
        field: &'static str,
        offset: usize,
        message: String,
    },

    #[error("logic error: {0}")]
    Logic(String),

    #[error("utility evaluation failed for subset {subset:?}: {source}")]
    Utility {
        subset: Vec<usize>,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
