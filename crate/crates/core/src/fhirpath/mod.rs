//! A deterministic FHIRPath subset evaluated over one patient bundle.
//!
//! The function registry is closed: unknown names fail at parse time.
//! `orderBy`, `minBy` and `maxBy` are non-standard extensions. See
//! `docs/fhirpath-subset.md` for the grammar and semantics.

mod ast;
mod collection;
mod elements;
mod error;
mod eval;
mod functions;
mod lexer;
mod parser;

pub use ast::{Ast, BinaryOp, EnvVariable, Literal, NodeKind, Span, UnaryOp};
pub use collection::{Collection, Item, Origin};
pub use error::{EngineError, EngineErrorKind};
pub use eval::{evaluate, EvalContext};
pub use functions::Function;
pub use lexer::{escape_string, tokenize, Token, TokenKind};
pub use parser::parse;

use crate::store::PatientBundle;

/// Parses without evaluating.
pub fn validate_syntax(text: &str) -> Result<(), EngineError> {
    parse(text).map(|_| ())
}

/// Parse then evaluate with the default context (`%now` = record clock).
pub fn execute<'a>(text: &str, bundle: &'a PatientBundle) -> Result<Collection<'a>, EngineError> {
    evaluate(&parse(text)?, &EvalContext::new(bundle))
}
