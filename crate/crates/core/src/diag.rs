//! Spans and diagnostics shared by the type checker and the graph validator.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A half-open byte range into a source text.
///
/// Spans never participate in structural equality: two AST nodes that differ
/// only by where they came from compare equal. This is what makes
/// `parse(print(p)) == p` a meaningful statement.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn to(self, other: Span) -> Span {
        Span::new(self.start.min(other.start), self.end.max(other.end))
    }
}

impl PartialEq for Span {
    fn eq(&self, _: &Span) -> bool {
        true
    }
}

impl Eq for Span {}

/// Line and column (both 1-based, column counted in characters) of a byte
/// offset.
pub fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text[..floor_char_boundary(text, offset)];
    let line = before.matches('\n').count() + 1;
    let col = match before.rfind('\n') {
        Some(nl) => before[nl + 1..].chars().count() + 1,
        None => before.chars().count() + 1,
    };
    (line, col)
}

fn floor_char_boundary(text: &str, mut i: usize) -> usize {
    while !text.is_char_boundary(i) {
        i -= 1;
    }
    i
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagCode {
    LexicalError,
    SyntaxError,
    UnknownObject,
    UnknownMethod,
    ArityMismatch,
    KindMismatch,
    RangeViolation,
    ActionNotVoid,
    VoidValue,
    ExpectedBool,
    BreakOutsideLoop,
    InterruptOutsideParallel,
    MissingStart,
    MissingStop,
    MultipleStart,
    MultipleStop,
    StartNotFirst,
    StopNotLast,
    SentinelInSlot,
    OwnedTwice,
    DanglingVertex,
    UnreachableVertex,
    SlotCount,
    EmptySlot,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub code: DiagCode,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub span: Option<Span>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vertex: Option<String>,
}

impl Diagnostic {
    pub fn new(code: DiagCode, message: impl Into<String>) -> Self {
        Diagnostic {
            code,
            message: message.into(),
            span: None,
            vertex: None,
        }
    }

    pub fn at(mut self, span: Span) -> Self {
        self.span = Some(span);
        self
    }

    pub fn on_vertex(mut self, id: impl Into<String>) -> Self {
        self.vertex = Some(id.into());
        self
    }

    /// Renders as `name:line:col: message`, falling back to the vertex id or
    /// the bare message when no span is known.
    pub fn render(&self, source_name: &str, text: &str) -> String {
        match (&self.span, &self.vertex) {
            (Some(span), _) => {
                let (line, col) = line_col(text, span.start);
                format!("{source_name}:{line}:{col}: {}", self.message)
            }
            (None, Some(v)) => format!("{source_name}: vertex {v}: {}", self.message),
            (None, None) => format!("{source_name}: {}", self.message),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.vertex {
            Some(v) => write!(f, "vertex {v}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_col_counts_chars() {
        let text = "ab\n°x.y()";
        assert_eq!(line_col(text, 0), (1, 1));
        assert_eq!(line_col(text, 3), (2, 1));
        // the degree sign is two bytes but one column
        assert_eq!(line_col(text, 5), (2, 2));
    }

    #[test]
    fn spans_are_ignored_by_equality() {
        assert_eq!(Span::new(0, 3), Span::new(7, 9));
    }
}
