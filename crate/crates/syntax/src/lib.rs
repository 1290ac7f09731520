//! Python 3.10 tokenizer and parser producing a span-accurate syntax tree.

pub mod ast;
pub mod error;
pub mod parser;
pub mod span;
pub mod token;
pub mod visit;

pub use error::ParseError;
pub use parser::{is_keyword, parse_expression, parse_module};
pub use span::{LineIndex, Span};
