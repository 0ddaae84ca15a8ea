//! Seeded generators of valid programs and graphs.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::catalog::{Catalog, ObjectKind, ParamKind, Range, ReturnType};
use crate::graph::{ProgramGraph, VertexId, VertexKind};
use crate::lll::ast::block_size;
use crate::lll::{Block, Call, Expr, Instr, InstrKind, Program};

#[derive(Debug, Clone, Copy)]
pub struct GenConfig {
    /// Upper bound on the instruction count of a generated program.
    pub max_instrs: usize,
    pub max_depth: usize,
    pub max_cond_depth: usize,
    pub max_repeat: u32,
    pub max_wait: u32,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_instrs: 40,
            max_depth: 4,
            max_cond_depth: 3,
            max_repeat: 4,
            max_wait: 4,
        }
    }
}

pub struct ProgramGen<'c> {
    catalog: &'c Catalog,
    cfg: GenConfig,
    rng: ChaCha8Rng,
    budget: usize,
    actions: Vec<(String, String)>,
    bool_reads: Vec<(String, String)>,
    int_reads: Vec<(String, String)>,
}

#[derive(Clone, Copy)]
struct Ctx {
    depth: usize,
    in_loop: bool,
    in_branch: bool,
}

impl<'c> ProgramGen<'c> {
    pub fn new(catalog: &'c Catalog, seed: u64, cfg: GenConfig) -> Self {
        let mut actions = Vec::new();
        let mut bool_reads = Vec::new();
        let mut int_reads = Vec::new();
        for o in &catalog.objects {
            for m in &o.methods {
                let key = (o.name.clone(), m.name.clone());
                match m.returns {
                    ReturnType::Void => actions.push(key),
                    ReturnType::Bool => bool_reads.push(key),
                    ReturnType::Int => int_reads.push(key),
                }
            }
            debug_assert!(o.kind != ObjectKind::Actuator || !o.methods.is_empty());
        }
        ProgramGen {
            catalog,
            cfg,
            rng: ChaCha8Rng::seed_from_u64(seed),
            budget: 0,
            actions,
            bool_reads,
            int_reads,
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// A program that parses and typechecks against the catalog. May be empty.
    pub fn program(&mut self) -> Program {
        loop {
            self.budget = self.rng.random_range(0..=self.cfg.max_instrs);
            if self.budget == 0 {
                return Program::new(Vec::new());
            }
            let ctx = Ctx {
                depth: 0,
                in_loop: false,
                in_branch: false,
            };
            let body = self.block(ctx);
            if block_size(&body) <= self.cfg.max_instrs {
                return Program::new(body);
            }
        }
    }

    /// A non-empty program.
    pub fn nonempty_program(&mut self) -> Program {
        loop {
            let p = self.program();
            if !p.body.is_empty() {
                return p;
            }
        }
    }

    fn block(&mut self, ctx: Ctx) -> Block {
        let len = self.rng.random_range(1..=4usize);
        let mut out = Vec::new();
        for i in 0..len {
            if i > 0 && self.budget == 0 {
                break;
            }
            out.push(self.instr(ctx));
        }
        out
    }

    fn instr(&mut self, ctx: Ctx) -> Instr {
        self.budget = self.budget.saturating_sub(1);
        let compound = ctx.depth < self.cfg.max_depth && self.budget > 0;
        let inner = Ctx {
            depth: ctx.depth + 1,
            ..ctx
        };
        let looping = Ctx { in_loop: true, ..inner };
        let choice = self.rng.random_range(0..if compound { 13 } else { 6 });
        let kind = match choice {
            0 | 1 => InstrKind::Action(self.action()),
            2 if ctx.in_branch => InstrKind::Interrupt(self.action()),
            2 => InstrKind::Action(self.action()),
            3 => InstrKind::Wait(self.rng.random_range(0..=self.cfg.max_wait)),
            4 if ctx.in_loop => InstrKind::Break,
            4 => InstrKind::Wait(self.rng.random_range(0..=self.cfg.max_wait)),
            5 => InstrKind::Action(self.action()),
            6 => InstrKind::Repeat {
                count: self.rng.random_range(0..=self.cfg.max_repeat),
                body: self.block(looping),
            },
            7 => InstrKind::While {
                cond: self.cond(0),
                body: self.block(looping),
            },
            8 => InstrKind::If {
                cond: self.cond(0),
                then: self.block(inner),
                otherwise: None,
            },
            9 => InstrKind::If {
                cond: self.cond(0),
                then: self.block(inner),
                otherwise: Some(self.block(inner)),
            },
            10 => InstrKind::Event {
                cond: self.cond(0),
                body: self.block(inner),
            },
            _ => {
                let branch = Ctx {
                    depth: ctx.depth + 1,
                    in_loop: false,
                    in_branch: true,
                };
                let n = self.rng.random_range(1..=3usize);
                InstrKind::Parallel((0..n).map(|_| self.block(branch)).collect())
            }
        };
        kind.into()
    }

    pub fn action(&mut self) -> Call {
        let (object, method) = self.actions.choose(&mut self.rng).expect("catalog has actions").clone();
        self.call(&object, &method)
    }

    fn call(&mut self, object: &str, method: &str) -> Call {
        let spec = self
            .catalog
            .object(object)
            .and_then(|o| o.method(method))
            .expect("picked from the catalog")
            .clone();
        let args = spec
            .params
            .iter()
            .map(|p| match p.kind {
                ParamKind::BoolExpr => self.cond(self.cfg.max_cond_depth),
                ParamKind::Int => {
                    if !self.int_reads.is_empty() && self.rng.random_bool(0.2) {
                        let (o, m) = self.int_reads.choose(&mut self.rng).unwrap().clone();
                        Expr::Call(self.call(&o, &m))
                    } else {
                        let r = p.range.unwrap_or(Range::DEFAULT);
                        Expr::int(self.rng.random_range(r.min..=r.max))
                    }
                }
            })
            .collect();
        Call::new(object, method, args)
    }

    pub fn cond(&mut self, depth: usize) -> Expr {
        let leaf = depth >= self.cfg.max_cond_depth || self.rng.random_bool(0.5);
        if leaf {
            let (o, m) = self
                .bool_reads
                .choose(&mut self.rng)
                .expect("catalog has conditions")
                .clone();
            return Expr::Call(self.call(&o, &m));
        }
        match self.rng.random_range(0..3) {
            0 => Expr::not(self.cond(depth + 1)),
            1 => Expr::and(self.cond(depth + 1), self.cond(depth + 1)),
            _ => Expr::or(self.cond(depth + 1), self.cond(depth + 1)),
        }
    }

    /// A program that is valid except for exactly one integer literal
    /// argument pushed outside its parameter's range.
    pub fn out_of_range(&mut self) -> Program {
        loop {
            let mut p = self.nonempty_program();
            let mut sites = Vec::new();
            visit_int_args(&mut p.body, self.catalog, &mut |_, range| sites.push(range));
            if sites.is_empty() {
                continue;
            }
            let target = self.rng.random_range(0..sites.len());
            let range = sites[target];
            let bad = if range.min > 0 && self.rng.random_bool(0.3) {
                self.rng.random_range(0..range.min)
            } else if self.rng.random_bool(0.7) {
                self.rng.random_range(range.max + 1..=range.max + 1000)
            } else {
                self.rng.random_range(range.max + 1..=u32::MAX)
            };
            let mut seen = 0;
            visit_int_args(&mut p.body, self.catalog, &mut |n, _| {
                if seen == target {
                    *n = bad;
                }
                seen += 1;
            });
            return p;
        }
    }

    /// A valid graph whose structural image is a generated program, with
    /// random editor positions on some vertices.
    pub fn graph(&mut self) -> ProgramGraph {
        let program = self.program();
        let mut g = graph_of(&program);
        let ids: Vec<VertexId> = g.vertices.keys().cloned().collect();
        for id in ids {
            if self.rng.random_bool(0.5) {
                let (x, y) = (self.rng.random_range(-500..2000), self.rng.random_range(-500..2000));
                g.set_position(&id, x, y).expect("id exists");
            }
        }
        g
    }
}

/// Builds the graph whose compiled form is `program`.
pub fn graph_of(program: &Program) -> ProgramGraph {
    let mut g = ProgramGraph::new();
    for instr in &program.body {
        let id = g.append(kind_of(instr)).expect("fresh graph");
        fill(&mut g, &id, instr);
    }
    g
}

fn kind_of(instr: &Instr) -> VertexKind {
    match &instr.kind {
        InstrKind::Action(call) => VertexKind::Action {
            call: call.clone(),
            interrupt: false,
        },
        InstrKind::Interrupt(call) => VertexKind::Action {
            call: call.clone(),
            interrupt: true,
        },
        InstrKind::Repeat { count, .. } => VertexKind::Repetition { count: *count },
        InstrKind::While { cond, .. } => VertexKind::While { cond: cond.clone() },
        InstrKind::If {
            cond, otherwise: None, ..
        } => VertexKind::IfThen { cond: cond.clone() },
        InstrKind::If { cond, .. } => VertexKind::IfThenElse { cond: cond.clone() },
        InstrKind::Event { cond, .. } => VertexKind::Event { cond: cond.clone() },
        InstrKind::Parallel(_) => VertexKind::Parallel,
        InstrKind::Wait(n) => VertexKind::Wait { ticks: *n },
        InstrKind::Break => VertexKind::Break,
    }
}

fn fill(g: &mut ProgramGraph, id: &VertexId, instr: &Instr) {
    let slots: Vec<&Block> = match &instr.kind {
        InstrKind::Repeat { body, .. } | InstrKind::While { body, .. } | InstrKind::Event { body, .. } => {
            vec![body]
        }
        InstrKind::If { then, otherwise, .. } => std::iter::once(then).chain(otherwise.as_ref()).collect(),
        InstrKind::Parallel(branches) => {
            for _ in 2..branches.len() {
                g.add_branch(id).expect("parallel vertex");
            }
            if branches.len() == 1 {
                g.vertices.get_mut(id).expect("just added").slots.truncate(1);
            }
            branches.iter().collect()
        }
        _ => vec![],
    };
    for (i, block) in slots.into_iter().enumerate() {
        for child in block {
            let cid = g.append_to(id, i, kind_of(child)).expect("slot exists");
            fill(g, &cid, child);
        }
    }
}

/// Calls `f` on every integer literal passed to an integer parameter, in
/// source order.
fn visit_int_args(block: &mut Block, catalog: &Catalog, f: &mut dyn FnMut(&mut u32, Range)) {
    for instr in block {
        match &mut instr.kind {
            InstrKind::Action(c) | InstrKind::Interrupt(c) => visit_call(c, catalog, f),
            InstrKind::Repeat { body, .. } => visit_int_args(body, catalog, f),
            InstrKind::While { cond, body } | InstrKind::Event { cond, body } => {
                visit_expr(cond, catalog, f);
                visit_int_args(body, catalog, f);
            }
            InstrKind::If { cond, then, otherwise } => {
                visit_expr(cond, catalog, f);
                visit_int_args(then, catalog, f);
                if let Some(o) = otherwise {
                    visit_int_args(o, catalog, f);
                }
            }
            InstrKind::Parallel(branches) => {
                for b in branches {
                    visit_int_args(b, catalog, f);
                }
            }
            InstrKind::Wait(_) | InstrKind::Break => {}
        }
    }
}

fn visit_call(call: &mut Call, catalog: &Catalog, f: &mut dyn FnMut(&mut u32, Range)) {
    let params = catalog
        .object(&call.object)
        .and_then(|o| o.method(&call.method))
        .map(|m| m.params.clone())
        .unwrap_or_default();
    for (arg, param) in call.args.iter_mut().zip(params) {
        match (arg, param.kind) {
            (Expr::Int(n, _), ParamKind::Int) => f(n, param.range.unwrap_or(Range::DEFAULT)),
            (other, _) => visit_expr(other, catalog, f),
        }
    }
}

fn visit_expr(expr: &mut Expr, catalog: &Catalog, f: &mut dyn FnMut(&mut u32, Range)) {
    match expr {
        Expr::Int(..) => {}
        Expr::Call(c) => visit_call(c, catalog, f),
        Expr::Not(e) => visit_expr(e, catalog, f),
        Expr::And(l, r) | Expr::Or(l, r) => {
            visit_expr(l, catalog, f);
            visit_expr(r, catalog, f);
        }
    }
}
