//! Recursive-descent parser for the Low Level Language.
//!
//! ```text
//! program      := ε | instructions
//! instructions := instr (';' instr)* ';'?
//! instr        := call                                   action
//!               | '°' call '°'                           interrupt action
//!               | nb '*' '(' instructions ')'            repeat
//!               | '*' '[' cond ']' '(' instructions ')'  while
//!               | '[' cond ']' '(' instructions ')' ('!' '(' instructions ')')?
//!               | '<' cond '>' '(' instructions ')'      event
//!               | '//' '(' instructions (',' instructions)* ')'
//!               | 'WAIT' '(' nb ')'
//!               | 'BREAK'
//! call         := ident '.' ident '(' (cond (',' cond)*)? ')'
//! cond         := and ('|' and)*
//! and          := unary ('&' unary)*
//! unary        := '!' unary | '(' cond ')' | nb | call
//! ```

use crate::diag::Span;

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::{ParseError, ParseErrorKind};

/// Nesting bound for blocks and parenthesised conditions.
const MAX_DEPTH: usize = 100;

const INSTR_START: &[&str] = &[
    "identifier",
    "number",
    "'°'",
    "'*'",
    "'['",
    "'<'",
    "'//'",
    "'WAIT'",
    "'BREAK'",
];

const COND_START: &[&str] = &["identifier", "number", "'!'", "'('"];

pub fn parse(text: &str) -> Result<Program, ParseError> {
    parse_named(text, "<input>")
}

pub fn parse_named(text: &str, source_name: &str) -> Result<Program, ParseError> {
    let tokens = tokenize(text)?;
    let mut parser = Parser {
        text,
        tokens,
        pos: 0,
        depth: 0,
    };
    let body = if parser.peek() == &Tok::Eof {
        Vec::new()
    } else {
        let body = parser.instructions()?;
        if parser.peek() != &Tok::Eof {
            return Err(parser.unexpected(&["';'", "end of input"]));
        }
        body
    };
    Ok(Program {
        body,
        source_name: source_name.to_string(),
    })
}

struct Parser<'t> {
    text: &'t str,
    tokens: Vec<Token>,
    pos: usize,
    depth: usize,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn prev_end(&self) -> usize {
        self.tokens[self.pos.saturating_sub(1)].span.end
    }

    fn bump(&mut self) -> Token {
        let tok = self.tokens[self.pos].clone();
        if tok.tok != Tok::Eof {
            self.pos += 1;
        }
        tok
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<Span, ParseError> {
        if self.peek() == &tok {
            Ok(self.bump().span)
        } else {
            Err(self.unexpected(&[&format!("'{tok}'")]))
        }
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        ParseError::new(
            self.text,
            ParseErrorKind::Syntax,
            self.peek_span(),
            format!("unexpected {}", self.peek().describe()),
            expected.iter().map(|s| s.to_string()).collect(),
        )
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(ParseError::new(
                self.text,
                ParseErrorKind::Syntax,
                self.peek_span(),
                format!("nesting deeper than {MAX_DEPTH} levels"),
                Vec::new(),
            ));
        }
        Ok(())
    }

    fn leave(&mut self) {
        self.depth -= 1;
    }

    fn at_instr_start(&self) -> bool {
        matches!(
            self.peek(),
            Tok::Ident(_)
                | Tok::Number(_)
                | Tok::Degree
                | Tok::Star
                | Tok::LBracket
                | Tok::Lt
                | Tok::Parallel
                | Tok::Wait
                | Tok::Break
        )
    }

    fn instructions(&mut self) -> Result<Block, ParseError> {
        self.enter()?;
        let mut block = vec![self.instr()?];
        while self.eat(&Tok::Semi) {
            if !self.at_instr_start() {
                break;
            }
            block.push(self.instr()?);
        }
        self.leave();
        Ok(block)
    }

    /// `'(' instructions ')'`
    fn paren_block(&mut self) -> Result<Block, ParseError> {
        self.expect(Tok::LParen)?;
        if !self.at_instr_start() {
            return Err(self.unexpected(INSTR_START));
        }
        let block = self.instructions()?;
        if self.peek() != &Tok::RParen {
            return Err(self.unexpected(&["';'", "')'"]));
        }
        self.bump();
        Ok(block)
    }

    fn number(&mut self) -> Result<u32, ParseError> {
        match *self.peek() {
            Tok::Number(n) => {
                self.bump();
                Ok(n)
            }
            _ => Err(self.unexpected(&["number"])),
        }
    }

    fn instr(&mut self) -> Result<Instr, ParseError> {
        let start = self.peek_span().start;
        let kind = match self.peek().clone() {
            Tok::Ident(_) => InstrKind::Action(self.call()?),
            Tok::Degree => {
                self.bump();
                let call = self.call()?;
                self.expect(Tok::Degree)?;
                InstrKind::Interrupt(call)
            }
            Tok::Number(count) => {
                self.bump();
                self.expect(Tok::Star)?;
                let body = self.paren_block()?;
                InstrKind::Repeat { count, body }
            }
            Tok::Star => {
                self.bump();
                let cond = self.bracketed(Tok::LBracket, Tok::RBracket)?;
                let body = self.paren_block()?;
                InstrKind::While { cond, body }
            }
            Tok::LBracket => {
                let cond = self.bracketed(Tok::LBracket, Tok::RBracket)?;
                let then = self.paren_block()?;
                let otherwise = if self.eat(&Tok::Bang) {
                    Some(self.paren_block()?)
                } else {
                    None
                };
                InstrKind::If { cond, then, otherwise }
            }
            Tok::Lt => {
                let cond = self.bracketed(Tok::Lt, Tok::Gt)?;
                let body = self.paren_block()?;
                InstrKind::Event { cond, body }
            }
            Tok::Parallel => {
                self.bump();
                self.expect(Tok::LParen)?;
                let mut branches = Vec::new();
                loop {
                    if !self.at_instr_start() {
                        return Err(self.unexpected(INSTR_START));
                    }
                    branches.push(self.instructions()?);
                    match self.peek() {
                        Tok::Comma => {
                            self.bump();
                        }
                        Tok::RParen => {
                            self.bump();
                            break;
                        }
                        _ => return Err(self.unexpected(&["';'", "','", "')'"])),
                    }
                }
                InstrKind::Parallel(branches)
            }
            Tok::Wait => {
                self.bump();
                self.expect(Tok::LParen)?;
                let ticks = self.number()?;
                self.expect(Tok::RParen)?;
                InstrKind::Wait(ticks)
            }
            Tok::Break => {
                self.bump();
                InstrKind::Break
            }
            _ => return Err(self.unexpected(INSTR_START)),
        };
        Ok(Instr {
            kind,
            span: Span::new(start, self.prev_end()),
        })
    }

    fn bracketed(&mut self, open: Tok, close: Tok) -> Result<Expr, ParseError> {
        self.expect(open)?;
        let cond = self.cond()?;
        if self.peek() != &close {
            return Err(self.unexpected(&[&format!("'{close}'"), "'&'", "'|'"]));
        }
        self.bump();
        Ok(cond)
    }

    fn call(&mut self) -> Result<Call, ParseError> {
        let start = self.peek_span().start;
        let object = self.ident()?;
        self.expect(Tok::Dot)?;
        let method = self.ident()?;
        self.expect(Tok::LParen)?;
        let mut args = Vec::new();
        if !self.eat(&Tok::RParen) {
            loop {
                args.push(self.cond()?);
                match self.peek() {
                    Tok::Comma => {
                        self.bump();
                    }
                    Tok::RParen => {
                        self.bump();
                        break;
                    }
                    _ => return Err(self.unexpected(&["','", "')'", "'&'", "'|'"])),
                }
            }
        }
        Ok(Call {
            object,
            method,
            args,
            span: Span::new(start, self.prev_end()),
        })
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Tok::Ident(name) => {
                let name = name.clone();
                self.bump();
                Ok(name)
            }
            _ => Err(self.unexpected(&["identifier"])),
        }
    }

    fn cond(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let mut lhs = self.and()?;
        while self.eat(&Tok::Pipe) {
            let rhs = self.and()?;
            lhs = Expr::Or(Box::new(lhs), Box::new(rhs));
        }
        self.leave();
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while self.eat(&Tok::Amp) {
            let rhs = self.unary()?;
            lhs = Expr::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Bang => {
                self.bump();
                self.enter()?;
                let inner = self.unary()?;
                self.leave();
                Ok(Expr::Not(Box::new(inner)))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.cond()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Tok::Number(n) => {
                let span = self.bump().span;
                Ok(Expr::Int(n, span))
            }
            Tok::Ident(_) => Ok(Expr::Call(self.call()?)),
            _ => Err(self.unexpected(COND_START)),
        }
    }
}
