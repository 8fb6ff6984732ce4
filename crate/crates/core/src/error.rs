//! Error types shared by the core modules.

use alloc::collections::BTreeSet;
use alloc::string::String;

/// Failures of germ arithmetic.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SeriesError {
    #[error("germ operands are expanded at different base points")]
    BaseMismatch,
    #[error("truncation order exhausted: needed {needed}, available {available}")]
    OrderExhausted { needed: usize, available: usize },
    #[error("division by a germ that vanishes at the base point")]
    DivisionByZeroGerm,
}

/// A surface expression failed to parse.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("parse error at line {line}, column {column}: found {found}, expected one of {}", join(expected))]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub found: String,
    pub expected: BTreeSet<String>,
}

fn join(set: &BTreeSet<String>) -> String {
    let mut out = String::new();
    for (i, s) in set.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(s);
    }
    out
}

/// Byte range of a subexpression in the source text.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

/// Failure while expanding a surface expression into a germ.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("denominator vanishes at the base point (source bytes {}..{})", span.start, span.end)]
    DivisionByZeroGerm { span: Span },
    #[error(transparent)]
    Series(#[from] SeriesError),
}
