use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("invalid graph size {n}: at least {min} nodes required")]
    InvalidSize { n: usize, min: usize },
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: String,
        expected: String,
        got: String,
    },
    #[error("non-finite value in {0}")]
    Numeric(String),
    #[error("nodes {from} -> {to} are not connected")]
    Support { from: usize, to: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid node partition: {0}")]
    Partition(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("training diverged at epoch {epoch}: loss is {loss} (learning rate too high?)")]
    Diverged { epoch: usize, loss: f64 },
    #[error("model file error at `{path}`: {message}")]
    ModelFormat { path: String, message: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn dim(context: impl Into<String>, expected: impl ToString, got: impl ToString) -> Self {
        Error::Dimension {
            context: context.into(),
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }
}
