//! Lowering of the instruction tree into flat code with explicit jumps.
//!
//! Structured control flow becomes a handful of ops. Ops marked
//! "free" below are taken during settling and never cost a tick.

use crate::lll::{Block, Call, Expr, Instr, InstrKind, Program};

pub(crate) type Pc = usize;

#[derive(Debug, Clone)]
pub(crate) enum Op {
    Act(Call),
    /// Free: push a counter and enter the body, or skip it when `count` is 0.
    RepeatEnter {
        count: u32,
        exit: Pc,
    },
    /// Free: count down; loop to `body` while passes remain.
    RepeatNext {
        body: Pc,
    },
    /// Evaluate the guard; fall through into the body or jump to `exit`.
    WhileHead {
        cond: Expr,
        exit: Pc,
    },
    /// Free.
    Jump(Pc),
    /// Evaluate; fall through into the then-part or jump to `otherwise`.
    If {
        cond: Expr,
        otherwise: Pc,
    },
    /// Block until `cond` holds, then fall through into the body.
    Event {
        cond: Expr,
    },
    Wait(u32),
    /// Leave the innermost loop, dropping its counter when it is a repeat.
    Break {
        exit: Pc,
        drop_counter: bool,
    },
    Fork {
        branches: Vec<Branch>,
    },
    /// End of a branch or of the program.
    Halt,
}

#[derive(Debug, Clone)]
pub(crate) struct Branch {
    pub entry: Pc,
    pub interruptible: bool,
}

impl Op {
    pub fn is_free(&self) -> bool {
        matches!(self, Op::RepeatEnter { .. } | Op::RepeatNext { .. } | Op::Jump(_))
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Code {
    pub ops: Vec<Op>,
}

#[derive(Clone, Copy)]
enum LoopExit {
    Repeat,
    While,
}

struct Lowering {
    ops: Vec<Op>,
    /// Open loops, innermost last, with the break sites awaiting their exit.
    loops: Vec<(LoopExit, Vec<usize>)>,
    pending: Vec<(usize, usize, Block)>,
}

pub(crate) fn lower(program: &Program) -> Code {
    let mut l = Lowering {
        ops: Vec::new(),
        loops: Vec::new(),
        pending: Vec::new(),
    };
    l.block(&program.body);
    l.ops.push(Op::Halt);
    // Branch bodies are laid out after the main code, each ending in Halt.
    while let Some((fork, index, block)) = l.pending.pop() {
        let entry = l.ops.len();
        let saved = std::mem::take(&mut l.loops);
        l.block(&block);
        l.loops = saved;
        l.ops.push(Op::Halt);
        if let Op::Fork { branches } = &mut l.ops[fork] {
            branches[index].entry = entry;
        }
    }
    Code { ops: l.ops }
}

/// A branch can be abandoned iff it holds an interrupt action of its own,
/// i.e. one not nested inside a deeper parallel.
pub(crate) fn has_own_interrupt(block: &[Instr]) -> bool {
    block.iter().any(|i| match &i.kind {
        InstrKind::Interrupt(_) => true,
        InstrKind::Repeat { body, .. } | InstrKind::While { body, .. } | InstrKind::Event { body, .. } => {
            has_own_interrupt(body)
        }
        InstrKind::If { then, otherwise, .. } => {
            has_own_interrupt(then) || otherwise.as_deref().is_some_and(has_own_interrupt)
        }
        _ => false,
    })
}

impl Lowering {
    fn here(&self) -> Pc {
        self.ops.len()
    }

    fn block(&mut self, block: &[Instr]) {
        for instr in block {
            self.instr(instr);
        }
    }

    fn instr(&mut self, instr: &Instr) {
        match &instr.kind {
            InstrKind::Action(call) | InstrKind::Interrupt(call) => {
                self.ops.push(Op::Act(call.clone()));
            }
            InstrKind::Repeat { count, body } => {
                let enter = self.here();
                self.ops.push(Op::RepeatEnter { count: *count, exit: 0 });
                self.loops.push((LoopExit::Repeat, Vec::new()));
                self.block(body);
                self.ops.push(Op::RepeatNext { body: enter + 1 });
                let exit = self.here();
                if let Op::RepeatEnter { exit: e, .. } = &mut self.ops[enter] {
                    *e = exit;
                }
                self.close_loop(exit);
            }
            InstrKind::While { cond, body } => {
                let head = self.here();
                self.ops.push(Op::WhileHead {
                    cond: cond.clone(),
                    exit: 0,
                });
                self.loops.push((LoopExit::While, Vec::new()));
                self.block(body);
                self.ops.push(Op::Jump(head));
                let exit = self.here();
                if let Op::WhileHead { exit: e, .. } = &mut self.ops[head] {
                    *e = exit;
                }
                self.close_loop(exit);
            }
            InstrKind::If { cond, then, otherwise } => {
                let test = self.here();
                self.ops.push(Op::If {
                    cond: cond.clone(),
                    otherwise: 0,
                });
                self.block(then);
                let target = match otherwise {
                    None => self.here(),
                    Some(otherwise) => {
                        let jump = self.here();
                        self.ops.push(Op::Jump(0));
                        let start = self.here();
                        self.block(otherwise);
                        let end = self.here();
                        self.ops[jump] = Op::Jump(end);
                        start
                    }
                };
                if let Op::If { otherwise: o, .. } = &mut self.ops[test] {
                    *o = target;
                }
            }
            InstrKind::Event { cond, body } => {
                self.ops.push(Op::Event { cond: cond.clone() });
                self.block(body);
            }
            InstrKind::Parallel(blocks) => {
                let fork = self.here();
                self.ops.push(Op::Fork {
                    branches: blocks
                        .iter()
                        .map(|b| Branch {
                            entry: 0,
                            interruptible: has_own_interrupt(b),
                        })
                        .collect(),
                });
                for (i, b) in blocks.iter().enumerate().rev() {
                    self.pending.push((fork, i, b.clone()));
                }
            }
            InstrKind::Wait(n) => self.ops.push(Op::Wait(*n)),
            InstrKind::Break => {
                let site = self.here();
                self.ops.push(Op::Break {
                    exit: 0,
                    drop_counter: false,
                });
                if let Some((kind, sites)) = self.loops.last_mut() {
                    sites.push(site);
                    if let Op::Break { drop_counter, .. } = &mut self.ops[site] {
                        *drop_counter = matches!(kind, LoopExit::Repeat);
                    }
                }
            }
        }
    }

    fn close_loop(&mut self, exit: Pc) {
        let (_, sites) = self.loops.pop().expect("loop pushed by caller");
        for site in sites {
            if let Op::Break { exit: e, .. } = &mut self.ops[site] {
                *e = exit;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lll::parse;

    fn ops(text: &str) -> Vec<String> {
        lower(&parse(text).unwrap())
            .ops
            .iter()
            .map(|op| match op {
                Op::Act(c) => format!("act {}.{}", c.object, c.method),
                Op::RepeatEnter { count, exit } => format!("rep {count} ->{exit}"),
                Op::RepeatNext { body } => format!("next ->{body}"),
                Op::WhileHead { exit, .. } => format!("while ->{exit}"),
                Op::Jump(t) => format!("jump {t}"),
                Op::If { otherwise, .. } => format!("if ->{otherwise}"),
                Op::Event { .. } => "event".into(),
                Op::Wait(n) => format!("wait {n}"),
                Op::Break { exit, drop_counter } => format!("break ->{exit} {drop_counter}"),
                Op::Fork { branches } => format!(
                    "fork {:?}",
                    branches.iter().map(|b| (b.entry, b.interruptible)).collect::<Vec<_>>()
                ),
                Op::Halt => "halt".into(),
            })
            .collect()
    }

    #[test]
    fn loops_and_breaks() {
        assert_eq!(
            ops("2*(*[a.X()](BREAK;);BREAK;);"),
            [
                "rep 2 ->6",
                "while ->4",
                "break ->4 false",
                "jump 1",
                "break ->6 true",
                "next ->1",
                "halt"
            ]
        );
    }

    #[test]
    fn if_else_layout() {
        assert_eq!(
            ops("[a.X()](WAIT(1);)!(WAIT(2););WAIT(3);"),
            ["if ->3", "wait 1", "jump 4", "wait 2", "wait 3", "halt"]
        );
    }

    #[test]
    fn branches_are_out_of_line() {
        assert_eq!(
            ops("//(WAIT(1);,°a.X()°;);WAIT(9);"),
            [
                "fork [(3, false), (5, true)]",
                "wait 9",
                "halt",
                "wait 1",
                "halt",
                "act a.X",
                "halt"
            ]
        );
    }

    #[test]
    fn interrupts_belong_to_the_innermost_parallel() {
        let p = parse("//(//(°a.X()°;,WAIT(1););,WAIT(2););").unwrap();
        let InstrKind::Parallel(branches) = &p.body[0].kind else {
            panic!()
        };
        assert!(!has_own_interrupt(&branches[0]));
    }
}
