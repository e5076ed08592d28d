use std::fmt::Display;
use std::path::{Path, PathBuf};

use qcloud_sim::SimError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Sim(#[from] SimError),

    #[error("{what}: expected length {expected}, found {found}")]
    Shape {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid architecture: {0}")]
    Architecture(String),

    #[error("observation entry {index} = {value} is outside [-1, 1]")]
    UnnormalizedInput { index: usize, value: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("action {action} out of range for {n_nodes} nodes")]
    ActionOutOfRange { action: usize, n_nodes: usize },

    #[error("environment has no pending task; call reset first")]
    NoPendingTask,

    #[error("workload source is empty")]
    EmptyWorkload,

    #[error("node list is empty")]
    NoNodes,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("{path}: {message}")]
    File { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn file(path: &Path, err: impl Display) -> Self {
        Error::File {
            path: path.to_path_buf(),
            message: err.to_string(),
        }
    }
}
