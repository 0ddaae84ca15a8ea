//! The Low Level Language: lexer, parser, canonical printer and type checker.

pub mod ast;
mod lexer;
mod parser;
mod printer;
mod typecheck;

use std::fmt;

use crate::diag::{line_col, DiagCode, Diagnostic, Span};

pub use ast::{Block, Call, Expr, Instr, InstrKind, Program};
pub use parser::{parse, parse_named};
pub use printer::{expr_to_string, print_block, print_call, print_canonical, print_expr};
pub use typecheck::typecheck;
pub(crate) use typecheck::{Checker, Scope};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    Lexical,
    Syntax,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub message: String,
    pub span: Span,
    pub line: usize,
    pub column: usize,
    /// Token descriptions that would have been accepted here.
    pub expected: Vec<String>,
}

impl ParseError {
    pub(crate) fn new(text: &str, kind: ParseErrorKind, span: Span, message: String, expected: Vec<String>) -> Self {
        let (line, column) = line_col(text, span.start);
        ParseError {
            kind,
            message,
            span,
            line,
            column,
            expected,
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            ParseErrorKind::Lexical => "lexical error",
            ParseErrorKind::Syntax => "syntax error",
        };
        write!(f, "{}:{}: {kind}: {}", self.line, self.column, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}

impl ParseError {
    /// The error as a diagnostic, for callers that report everything alike.
    pub fn to_diagnostic(&self) -> Diagnostic {
        let code = match self.kind {
            ParseErrorKind::Lexical => DiagCode::LexicalError,
            ParseErrorKind::Syntax => DiagCode::SyntaxError,
        };
        let mut message = self.message.clone();
        if !self.expected.is_empty() {
            message.push_str(&format!(" (expected {})", self.expected.join(", ")));
        }
        Diagnostic::new(code, message).at(self.span)
    }
}
