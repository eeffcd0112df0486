use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("i/o error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("node index {index} out of bounds for graph with {node_count} nodes")]
    Bounds { index: u64, node_count: u64 },
    #[error("invalid snapshot: {0}")]
    Format(String),
    #[error("query is disconnected")]
    DisconnectedQuery,
    #[error("query has no nodes")]
    EmptyQuery,
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),
    #[error("intermediate result exceeded the budget of {budget} rows")]
    BudgetExceeded { budget: usize },
    #[error(
        "oracle refused input of {query_nodes} query nodes and {data_nodes} data nodes (use force)"
    )]
    OracleGuard {
        query_nodes: usize,
        data_nodes: usize,
    },
    #[error("{0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
