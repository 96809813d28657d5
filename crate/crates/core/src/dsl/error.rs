use std::fmt;

use thiserror::Error;

use super::ast::Span;

#[derive(Clone, Debug, PartialEq)]
pub struct SyntaxError {
    pub span: Span,
    pub found: String,
    pub expected: Vec<String>,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unexpected {}", self.found)?;
        match self.expected.as_slice() {
            [] => Ok(()),
            [one] => write!(f, ", expected {one}"),
            many => write!(f, ", expected one of {}", many.join(", ")),
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("{}: syntax error, {}", .0.span, .0)]
    Syntax(SyntaxError),
    #[error("{span}: invalid regular expression: {message}")]
    Regex { span: Span, message: String },
    #[error("{span}: {message}")]
    Structure { span: Span, message: String },
}

impl ParseError {
    pub fn span(&self) -> Span {
        match self {
            ParseError::Syntax(e) => e.span,
            ParseError::Regex { span, .. } | ParseError::Structure { span, .. } => *span,
        }
    }
}

impl From<SyntaxError> for ParseError {
    fn from(e: SyntaxError) -> Self {
        ParseError::Syntax(e)
    }
}
