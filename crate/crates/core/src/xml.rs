//! Thin helpers over `roxmltree` for strict schema reading, plus a small
//! deterministic writer.

use std::fmt::Write as _;
use std::str::FromStr;

use roxmltree::{Document, Node};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum XmlError {
    #[error("{line}:{column}: malformed XML: {message}")]
    Malformed { message: String, line: u32, column: u32 },
    #[error("{line}:{column}: {message}")]
    Schema { message: String, line: u32, column: u32 },
}

impl XmlError {
    pub fn message(&self) -> &str {
        match self {
            XmlError::Malformed { message, .. } | XmlError::Schema { message, .. } => message,
        }
    }
}

pub(crate) fn parse(text: &str) -> Result<Document<'_>, XmlError> {
    Document::parse(text).map_err(|e| {
        let pos = e.pos();
        XmlError::Malformed {
            message: e.to_string(),
            line: pos.row,
            column: pos.col,
        }
    })
}

pub(crate) fn schema_error(node: Node<'_, '_>, message: impl Into<String>) -> XmlError {
    let pos = node.document().text_pos_at(node.range().start);
    XmlError::Schema {
        message: message.into(),
        line: pos.row,
        column: pos.col,
    }
}

pub(crate) fn expect_root<'a, 'i>(doc: &'a Document<'i>, name: &str) -> Result<Node<'a, 'i>, XmlError> {
    let root = doc.root_element();
    if root.tag_name().name() != name {
        return Err(schema_error(
            root,
            format!("expected <{name}> root, found <{}>", root.tag_name().name()),
        ));
    }
    Ok(root)
}

/// Element children of `node`. Text other than whitespace is rejected;
/// comments and processing instructions are skipped.
pub(crate) fn children<'a, 'i>(node: Node<'a, 'i>) -> Result<Vec<Node<'a, 'i>>, XmlError> {
    let mut out = Vec::new();
    for child in node.children() {
        if child.is_element() {
            out.push(child);
        } else if child.is_text() && !child.text().unwrap_or("").trim().is_empty() {
            return Err(schema_error(
                child,
                format!("unexpected text inside <{}>", node.tag_name().name()),
            ));
        }
    }
    Ok(out)
}

pub(crate) fn check_attrs(node: Node<'_, '_>, allowed: &[&str]) -> Result<(), XmlError> {
    for attr in node.attributes() {
        if !allowed.contains(&attr.name()) {
            return Err(schema_error(
                node,
                format!("unknown attribute '{}' on <{}>", attr.name(), node.tag_name().name()),
            ));
        }
    }
    Ok(())
}

pub(crate) fn req_attr<'a>(node: Node<'a, '_>, name: &str) -> Result<&'a str, XmlError> {
    node.attribute(name).ok_or_else(|| {
        schema_error(
            node,
            format!("missing attribute '{name}' on <{}>", node.tag_name().name()),
        )
    })
}

pub(crate) fn parse_attr<T: FromStr>(node: Node<'_, '_>, name: &str) -> Result<Option<T>, XmlError> {
    match node.attribute(name) {
        None => Ok(None),
        Some(raw) => raw.trim().parse().map(Some).map_err(|_| {
            schema_error(
                node,
                format!(
                    "invalid value '{raw}' for attribute '{name}' on <{}>",
                    node.tag_name().name()
                ),
            )
        }),
    }
}

pub(crate) fn req_parsed<T: FromStr>(node: Node<'_, '_>, name: &str) -> Result<T, XmlError> {
    parse_attr(node, name)?.ok_or_else(|| {
        schema_error(
            node,
            format!("missing attribute '{name}' on <{}>", node.tag_name().name()),
        )
    })
}

pub(crate) fn parse_bool(node: Node<'_, '_>, name: &str) -> Result<Option<bool>, XmlError> {
    match node.attribute(name) {
        None => Ok(None),
        Some("true") => Ok(Some(true)),
        Some("false") => Ok(Some(false)),
        Some(raw) => Err(schema_error(
            node,
            format!("attribute '{name}' must be true or false, got '{raw}'"),
        )),
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub(crate) fn ident_attr<'a>(node: Node<'a, '_>, name: &str) -> Result<&'a str, XmlError> {
    let value = req_attr(node, name)?;
    if !is_identifier(value) {
        return Err(schema_error(node, format!("'{value}' is not a valid identifier")));
    }
    Ok(value)
}

/// Indenting writer producing byte-identical output for equal inputs.
pub(crate) struct XmlWriter {
    out: String,
    depth: usize,
}

impl XmlWriter {
    pub fn new() -> Self {
        XmlWriter {
            out: String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"),
            depth: 0,
        }
    }

    fn open_tag(&mut self, name: &str, attrs: &[(&str, String)]) {
        for _ in 0..self.depth {
            self.out.push_str("  ");
        }
        self.out.push('<');
        self.out.push_str(name);
        for (k, v) in attrs {
            let _ = write!(self.out, " {k}=\"{}\"", escape(v));
        }
    }

    pub fn empty(&mut self, name: &str, attrs: &[(&str, String)]) {
        self.open_tag(name, attrs);
        self.out.push_str("/>\n");
    }

    pub fn start(&mut self, name: &str, attrs: &[(&str, String)]) {
        self.open_tag(name, attrs);
        self.out.push_str(">\n");
        self.depth += 1;
    }

    pub fn end(&mut self, name: &str) {
        self.depth -= 1;
        for _ in 0..self.depth {
            self.out.push_str("  ");
        }
        let _ = writeln!(self.out, "</{name}>");
    }

    pub fn finish(self) -> String {
        self.out
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}
