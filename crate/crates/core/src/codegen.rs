//! Graph to Low Level Language compiler.
//!
//! A syntax-directed translation: each block maps to the instruction of the
//! same shape and the result is printed in canonical form.

use crate::catalog::Catalog;
use crate::diag::Diagnostic;
use crate::graph::{validate_graph, ProgramGraph, VertexId, VertexKind};
use crate::lll::{print_canonical, Block, Instr, InstrKind, Program};

/// The program a structurally sound graph denotes.
pub fn ast_of(graph: &ProgramGraph) -> Program {
    Program::new(block_of(graph, &graph.top))
}

fn block_of(graph: &ProgramGraph, ids: &[VertexId]) -> Block {
    ids.iter().filter_map(|id| instr_of(graph, id)).collect()
}

fn instr_of(graph: &ProgramGraph, id: &VertexId) -> Option<Instr> {
    let v = &graph.vertices[id];
    let slot = |i: usize| block_of(graph, &v.slots[i]);
    let kind = match &v.kind {
        VertexKind::Start | VertexKind::Stop => return None,
        VertexKind::Action { call, interrupt: false } => InstrKind::Action(call.clone()),
        VertexKind::Action { call, interrupt: true } => InstrKind::Interrupt(call.clone()),
        VertexKind::Repetition { count } => InstrKind::Repeat {
            count: *count,
            body: slot(0),
        },
        VertexKind::While { cond } => InstrKind::While {
            cond: cond.clone(),
            body: slot(0),
        },
        VertexKind::IfThen { cond } => InstrKind::If {
            cond: cond.clone(),
            then: slot(0),
            otherwise: None,
        },
        VertexKind::IfThenElse { cond } => InstrKind::If {
            cond: cond.clone(),
            then: slot(0),
            otherwise: Some(slot(1)),
        },
        VertexKind::Wait { ticks } => InstrKind::Wait(*ticks),
        VertexKind::Break => InstrKind::Break,
        VertexKind::Parallel => InstrKind::Parallel((0..v.slots.len()).map(slot).collect()),
        VertexKind::Event { cond } => InstrKind::Event {
            cond: cond.clone(),
            body: slot(0),
        },
    };
    Some(kind.into())
}

/// Validates and compiles. The empty program compiles to the empty string.
pub fn compile_graph(graph: &ProgramGraph, catalog: &Catalog) -> Result<String, Vec<Diagnostic>> {
    let diags = validate_graph(graph, catalog);
    if !diags.is_empty() {
        return Err(diags);
    }
    Ok(print_canonical(&ast_of(graph)))
}
