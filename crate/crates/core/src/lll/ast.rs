use crate::diag::Span;

/// `object.method(args)`: an action, an integer action, or an atomic
/// condition. Which one is decided by the catalog, not the syntax.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Call {
    pub object: String,
    pub method: String,
    pub args: Vec<Expr>,
    pub span: Span,
}

impl Call {
    pub fn new(object: &str, method: &str, args: Vec<Expr>) -> Self {
        Call {
            object: object.to_string(),
            method: method.to_string(),
            args,
            span: Span::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Int(u32, Span),
    Call(Call),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn int(v: u32) -> Expr {
        Expr::Int(v, Span::default())
    }

    pub fn call(object: &str, method: &str, args: Vec<Expr>) -> Expr {
        Expr::Call(Call::new(object, method, args))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: Expr) -> Expr {
        Expr::Not(Box::new(e))
    }

    pub fn and(l: Expr, r: Expr) -> Expr {
        Expr::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Expr, r: Expr) -> Expr {
        Expr::Or(Box::new(l), Box::new(r))
    }

    pub fn span(&self) -> Span {
        match self {
            Expr::Int(_, span) => *span,
            Expr::Call(c) => c.span,
            Expr::Not(e) => e.span(),
            Expr::And(l, r) | Expr::Or(l, r) => l.span().to(r.span()),
        }
    }

    /// Calls in evaluation order (left to right, depth first).
    pub fn calls(&self) -> Vec<&Call> {
        let mut out = Vec::new();
        self.collect_calls(&mut out);
        out
    }

    fn collect_calls<'a>(&'a self, out: &mut Vec<&'a Call>) {
        match self {
            Expr::Int(..) => {}
            Expr::Call(c) => {
                for a in &c.args {
                    a.collect_calls(out);
                }
                out.push(c);
            }
            Expr::Not(e) => e.collect_calls(out),
            Expr::And(l, r) | Expr::Or(l, r) => {
                l.collect_calls(out);
                r.collect_calls(out);
            }
        }
    }
}

pub type Block = Vec<Instr>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instr {
    pub kind: InstrKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InstrKind {
    Action(Call),
    /// `°obj.method(args)°`, legal only inside a parallel branch.
    Interrupt(Call),
    Repeat {
        count: u32,
        body: Block,
    },
    While {
        cond: Expr,
        body: Block,
    },
    If {
        cond: Expr,
        then: Block,
        otherwise: Option<Block>,
    },
    Event {
        cond: Expr,
        body: Block,
    },
    Parallel(Vec<Block>),
    Wait(u32),
    Break,
}

impl From<InstrKind> for Instr {
    fn from(kind: InstrKind) -> Self {
        Instr {
            kind,
            span: Span::default(),
        }
    }
}

impl Instr {
    /// Number of instructions in this subtree, counting itself.
    pub fn size(&self) -> usize {
        1 + match &self.kind {
            InstrKind::Repeat { body, .. } | InstrKind::While { body, .. } | InstrKind::Event { body, .. } => {
                block_size(body)
            }
            InstrKind::If { then, otherwise, .. } => block_size(then) + otherwise.as_deref().map_or(0, block_size),
            InstrKind::Parallel(branches) => branches.iter().map(|b| block_size(b)).sum(),
            _ => 0,
        }
    }
}

pub fn block_size(block: &[Instr]) -> usize {
    block.iter().map(Instr::size).sum()
}

/// A parsed Low Level Language program. Equality compares the instruction
/// tree only.
#[derive(Debug, Clone)]
pub struct Program {
    pub body: Block,
    pub source_name: String,
}

impl Program {
    pub fn new(body: Block) -> Self {
        Program {
            body,
            source_name: "<input>".to_string(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.body.is_empty()
    }
}

impl PartialEq for Program {
    fn eq(&self, other: &Program) -> bool {
        self.body == other.body
    }
}

impl Eq for Program {}
