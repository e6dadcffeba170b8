use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unknown profile `{0}`")]
    UnknownProfile(String),

    #[error("expression cannot be inverted: {0}")]
    NotInvertible(String),

    #[error("certificate error: {0}")]
    Certificate(String),

    #[error("missing constants: {0}")]
    MissingConstants(String),

    #[error("mismatched grids: {0}")]
    GridMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
