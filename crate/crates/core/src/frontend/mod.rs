//! MiniC parsing and control-flow automaton construction.

pub mod ast;
mod cfa;
mod lexer;
mod parser;

pub use cfa::{build_cfa, Cfa, Edge, Loc, Op};
pub use parser::parse;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrontendError {
    #[error("{line}:{col}: syntax error: expected {}, found {found}", expected.join(" or "))]
    Syntax {
        line: usize,
        col: usize,
        expected: Vec<String>,
        found: String,
    },
    #[error("{line}:{col}: type error: {message}")]
    Type {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("program has neither an ERROR label nor an assert")]
    NoErrorLocation,
}
