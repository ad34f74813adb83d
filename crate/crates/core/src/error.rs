use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the memory engine.
#[derive(Error, Debug)]
pub enum MemError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("score out of range [0,100]: {name}={value}")]
    ScoreOutOfRange { name: &'static str, value: f64 },

    #[error("embedding dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("duplicate episode for agent `{agent_id}` at task index {task_index}")]
    DuplicateEpisode { agent_id: String, task_index: u64 },

    #[error("unknown procedure `{0}`")]
    UnknownProcedure(String),

    #[error("unknown agent `{0}`")]
    UnknownAgent(String),

    #[error("dangling memory reference: {0}")]
    DanglingReference(String),

    #[error("episode agent `{episode}` does not match view agent `{view}`")]
    AgentMismatch { episode: String, view: String },

    #[error("failed to load {path}: {message}")]
    Load { path: PathBuf, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("run log mismatch: {0}")]
    LogMismatch(String),

    #[error("empty run log")]
    EmptyLog,

    #[error("generator failed: {0}")]
    Generator(String),
}

impl MemError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        MemError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        MemError::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, MemError>;
