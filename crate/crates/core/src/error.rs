use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{line}:{col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

impl ParseError {
    pub fn new(line: usize, col: usize, msg: impl Into<String>) -> Self {
        ParseError { line, col, msg: msg.into() }
    }
}

/// A computation ran past one of its configured limits.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ResourceError {
    #[error("constraint normalization exceeded depth {0}")]
    NormalizationDepth(usize),
    #[error("universe slice exceeds {0} terms")]
    SliceTooLarge(usize),
    #[error("bounded search exceeded {0} instances")]
    TooManyInstances(u64),
    #[error("answer negation not supported: {0}")]
    Unsupported(String),
}
