//! Problem and plan text formats.

mod plan_file;
mod problem_file;

use thiserror::Error;

pub use plan_file::{format_plan, parse_plan, parse_plan_file, renumber, PlanFile};
pub use problem_file::{format_problem, parse_problem, parse_problem_document, ProblemDocument};

/// A diagnostic tied to a (1-based) line of the input.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, message: impl Into<String>) -> Self {
        ParseError { line, message: message.into() }
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphanumeric() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}
