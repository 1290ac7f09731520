use crate::span::LineIndex;

/// A syntax error with a 1-based line and column.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}, column {col}: {message}")]
pub struct ParseError {
    pub message: String,
    pub line: usize,
    pub col: usize,
    pub offset: usize,
}

impl ParseError {
    pub fn at(src: &str, offset: usize, message: &str) -> Self {
        let idx = LineIndex::new(src);
        let offset = offset.min(src.len());
        ParseError {
            message: message.to_string(),
            line: idx.line(offset),
            col: idx.col(offset) + 1,
            offset,
        }
    }
}
