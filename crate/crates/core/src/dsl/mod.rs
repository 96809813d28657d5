//! The CPSLint language: syntax tree, parser, printer and validator.

pub mod ast;
mod error;
mod lexer;
mod parser;
mod render;
mod validate;

pub use ast::*;
pub use error::{ParseError, SyntaxError};
pub use parser::parse_script;
pub use render::{quote, render_annotated, render_number, render_range, render_script, Annotations};
pub use validate::{validate_script, DiagnosticKind, SemanticDiagnostic, MAX_CONDITIONAL_DEPTH};

pub(crate) use render::render_simple_rule;
