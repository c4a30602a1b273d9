use thiserror::Error;

/// Errors produced while building or solving a collocation system.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("degenerate linear block: rank {rank} < {rows} rows")]
    DegenerateLinearBlock { rank: usize, rows: usize },

    #[error("non-finite value in row {row} (node {node}): {what}")]
    Evaluation {
        row: usize,
        node: usize,
        what: &'static str,
    },

    #[error("non-finite merit: {0}")]
    NonFinite(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than numerical failure.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Parse { .. } | Error::Validation(_) | Error::Domain(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
