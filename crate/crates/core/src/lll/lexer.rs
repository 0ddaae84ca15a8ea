use std::fmt;

use crate::diag::Span;

use super::{ParseError, ParseErrorKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Number(u32),
    Dot,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Lt,
    Gt,
    Semi,
    Comma,
    Star,
    Bang,
    Amp,
    Pipe,
    /// `//`
    Parallel,
    /// `°` (U+00B0)
    Degree,
    Wait,
    Break,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(name) => format!("identifier '{name}'"),
            Tok::Number(n) => format!("number {n}"),
            Tok::Eof => "end of input".to_string(),
            other => format!("'{other}'"),
        }
    }
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(name) => return f.write_str(name),
            Tok::Number(n) => return write!(f, "{n}"),
            Tok::Dot => ".",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Lt => "<",
            Tok::Gt => ">",
            Tok::Semi => ";",
            Tok::Comma => ",",
            Tok::Star => "*",
            Tok::Bang => "!",
            Tok::Amp => "&",
            Tok::Pipe => "|",
            Tok::Parallel => "//",
            Tok::Degree => "°",
            Tok::Wait => "WAIT",
            Tok::Break => "BREAK",
            Tok::Eof => "<eof>",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let mut open_degree: Option<usize> = None;

    let lex_error = |start: usize, end: usize, message: String| {
        ParseError::new(
            text,
            ParseErrorKind::Lexical,
            Span::new(start, end),
            message,
            Vec::new(),
        )
    };

    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let single = match c {
            b' ' | b'\t' | b'\r' | b'\n' => {
                i += 1;
                continue;
            }
            b'#' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
                continue;
            }
            b'.' => Some(Tok::Dot),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b'[' => Some(Tok::LBracket),
            b']' => Some(Tok::RBracket),
            b'<' => Some(Tok::Lt),
            b'>' => Some(Tok::Gt),
            b';' => Some(Tok::Semi),
            b',' => Some(Tok::Comma),
            b'*' => Some(Tok::Star),
            b'!' => Some(Tok::Bang),
            b'&' => Some(Tok::Amp),
            b'|' => Some(Tok::Pipe),
            _ => None,
        };
        if let Some(tok) = single {
            i += 1;
            out.push(Token {
                tok,
                span: Span::new(start, i),
            });
            continue;
        }

        if c == b'/' {
            if bytes.get(i + 1) == Some(&b'/') {
                i += 2;
                out.push(Token {
                    tok: Tok::Parallel,
                    span: Span::new(start, i),
                });
                continue;
            }
            return Err(lex_error(
                start,
                start + 1,
                "illegal character '/'; did you mean '//'?".into(),
            ));
        }

        if text[i..].starts_with('°') {
            i += '°'.len_utf8();
            open_degree = match open_degree {
                Some(_) => None,
                None => Some(start),
            };
            out.push(Token {
                tok: Tok::Degree,
                span: Span::new(start, i),
            });
            continue;
        }

        if c.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let digits = &text[start..i];
            let n: u32 = digits
                .parse()
                .map_err(|_| lex_error(start, i, format!("number too large: {digits}")))?;
            out.push(Token {
                tok: Tok::Number(n),
                span: Span::new(start, i),
            });
            continue;
        }

        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let word = &text[start..i];
            let tok = match word {
                "WAIT" => Tok::Wait,
                "BREAK" => Tok::Break,
                _ => Tok::Ident(word.to_string()),
            };
            out.push(Token {
                tok,
                span: Span::new(start, i),
            });
            continue;
        }

        let ch = text[i..].chars().next().unwrap_or('?');
        return Err(lex_error(
            start,
            start + ch.len_utf8(),
            format!("illegal character {ch:?}"),
        ));
    }

    if let Some(at) = open_degree {
        return Err(lex_error(at, at + '°'.len_utf8(), "unterminated '°'".into()));
    }
    out.push(Token {
        tok: Tok::Eof,
        span: Span::new(text.len(), text.len()),
    });
    Ok(out)
}
