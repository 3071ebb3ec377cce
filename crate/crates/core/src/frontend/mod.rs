//! Lexing, parsing and normalization of the restricted C input language.

pub mod ast;
mod lexer;
mod normalize;
mod parser;
mod print;

use std::sync::Arc;

use thiserror::Error;

pub use ast::*;
pub use lexer::{tokenize, Keyword, Token, TokenKind};
pub use normalize::{normalize, normalize_program};
pub use parser::parse;
pub use print::{print_function, print_program};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrontendError {
    #[error("{span}: lexical error: {message}")]
    Lexical { span: SourceSpan, message: String },
    #[error("{span}: syntax error: {message}")]
    Syntax { span: SourceSpan, message: String },
    /// Valid C that falls outside the supported subset (pointers, goto, ...).
    #[error("{span}: unsupported construct: {message}")]
    Unsupported { span: SourceSpan, message: String },
    #[error("{span}: {message}")]
    Semantic { span: SourceSpan, message: String },
}

impl FrontendError {
    pub fn span(&self) -> &SourceSpan {
        match self {
            FrontendError::Lexical { span, .. }
            | FrontendError::Syntax { span, .. }
            | FrontendError::Unsupported { span, .. }
            | FrontendError::Semantic { span, .. } => span,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            FrontendError::Lexical { message, .. }
            | FrontendError::Syntax { message, .. }
            | FrontendError::Unsupported { message, .. }
            | FrontendError::Semantic { message, .. } => message,
        }
    }

    /// Short category name used in diagnostics and reports.
    pub fn category(&self) -> &'static str {
        match self {
            FrontendError::Lexical { .. } => "lexical",
            FrontendError::Syntax { .. } => "syntax",
            FrontendError::Unsupported { .. } => "unsupported",
            FrontendError::Semantic { .. } => "semantic",
        }
    }
}

/// Tokenize and parse one source file.
pub fn parse_source(file: &str, source: &str) -> Result<Program, FrontendError> {
    let file: Arc<str> = Arc::from(file);
    let tokens = tokenize(&file, source)?;
    parse(&file, &tokens)
}
