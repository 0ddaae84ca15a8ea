use crate::catalog::Catalog;
use crate::diag::{DiagCode, Diagnostic};
use crate::lll::{Checker, Scope};

use super::{ProgramGraph, VertexId, VertexKind};

/// All diagnostics for a graph: structure first; when the structure is sound,
/// also block payloads against the catalog and placement rules. Mirrors the
/// checks `typecheck` applies to the compiled program.
pub fn validate_graph(graph: &ProgramGraph, catalog: &Catalog) -> Vec<Diagnostic> {
    let structural = graph.structure_diagnostics();
    if !structural.is_empty() {
        return structural;
    }
    let mut walker = Walker {
        graph,
        checker: Checker::new(catalog),
    };
    walker.sequence(&graph.top, Scope::default());
    walker.checker.diags
}

struct Walker<'g, 'c> {
    graph: &'g ProgramGraph,
    checker: Checker<'c>,
}

impl Walker<'_, '_> {
    fn sequence(&mut self, ids: &[VertexId], scope: Scope) {
        for id in ids {
            self.vertex(id, scope);
        }
    }

    fn vertex(&mut self, id: &VertexId, scope: Scope) {
        let v = &self.graph.vertices[id];
        let before = self.checker.diags.len();
        match &v.kind {
            VertexKind::Start | VertexKind::Stop | VertexKind::Wait { .. } | VertexKind::Parallel => {}
            VertexKind::Action { call, interrupt } => {
                if *interrupt && !scope.in_branch {
                    self.checker.placement(DiagCode::InterruptOutsideParallel);
                }
                self.checker.action(call);
            }
            VertexKind::Repetition { .. } => {}
            VertexKind::While { cond }
            | VertexKind::IfThen { cond }
            | VertexKind::IfThenElse { cond }
            | VertexKind::Event { cond } => self.checker.condition(cond),
            VertexKind::Break => {
                if !scope.in_loop {
                    self.checker.placement(DiagCode::BreakOutsideLoop);
                }
            }
        }
        for (i, slot) in v.slots.iter().enumerate() {
            if slot.is_empty() {
                let what = match v.kind {
                    VertexKind::Parallel => format!("branch {} is empty", i + 1),
                    VertexKind::IfThenElse { .. } if i == 1 => "else slot is empty".to_string(),
                    _ => "body is empty".to_string(),
                };
                self.checker.diags.push(Diagnostic::new(DiagCode::EmptySlot, what));
            }
        }
        for d in &mut self.checker.diags[before..] {
            d.span = None;
            d.vertex = Some(id.0.clone());
        }

        let inner = match v.kind {
            VertexKind::Parallel => Scope::branch(),
            ref k if k.is_loop() => scope.looping(),
            _ => scope,
        };
        for slot in &v.slots {
            self.sequence(slot, inner);
        }
    }
}
