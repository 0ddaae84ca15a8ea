//! The visual program representation.
//!
//! A graph is an ownership tree: `top` runs from the Start vertex to the
//! Stop vertex, and every other vertex is owned by exactly one sequence,
//! either `top` or one slot of another vertex. Arcs are implied by sequence
//! order, so control flow is always well nested.

mod krt;
mod validate;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use crate::diag::{DiagCode, Diagnostic};
use crate::lll::{Call, Expr};

pub use krt::{load_krt, save_krt, KrtError, KRT_VERSION};
pub use validate::validate_graph;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct VertexId(pub String);

impl VertexId {
    pub fn new(id: impl Into<String>) -> Self {
        VertexId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for VertexId {
    fn from(s: &str) -> Self {
        VertexId::new(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VertexKind {
    Start,
    Stop,
    Action { call: Call, interrupt: bool },
    Repetition { count: u32 },
    While { cond: Expr },
    IfThen { cond: Expr },
    IfThenElse { cond: Expr },
    Wait { ticks: u32 },
    Break,
    Parallel,
    Event { cond: Expr },
}

impl VertexKind {
    pub fn name(&self) -> &'static str {
        match self {
            VertexKind::Start => "Start",
            VertexKind::Stop => "Stop",
            VertexKind::Action { .. } => "Action",
            VertexKind::Repetition { .. } => "Repetition",
            VertexKind::While { .. } => "While",
            VertexKind::IfThen { .. } => "IfThen",
            VertexKind::IfThenElse { .. } => "IfThenElse",
            VertexKind::Wait { .. } => "Wait",
            VertexKind::Break => "Break",
            VertexKind::Parallel => "Parallel",
            VertexKind::Event { .. } => "Event",
        }
    }

    /// Slots a freshly created vertex of this kind gets.
    pub fn initial_slots(&self) -> usize {
        match self {
            VertexKind::Repetition { .. }
            | VertexKind::While { .. }
            | VertexKind::IfThen { .. }
            | VertexKind::Event { .. } => 1,
            VertexKind::IfThenElse { .. } | VertexKind::Parallel => 2,
            _ => 0,
        }
    }

    fn slots_ok(&self, n: usize) -> bool {
        match self {
            VertexKind::Parallel => n >= 1,
            other => n == other.initial_slots(),
        }
    }

    fn slot_rule(&self) -> &'static str {
        match self {
            VertexKind::Parallel => "at least 1",
            VertexKind::IfThenElse { .. } => "exactly 2",
            VertexKind::Repetition { .. }
            | VertexKind::While { .. }
            | VertexKind::IfThen { .. }
            | VertexKind::Event { .. } => "exactly 1",
            _ => "no",
        }
    }

    pub fn is_loop(&self) -> bool {
        matches!(self, VertexKind::Repetition { .. } | VertexKind::While { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vertex {
    pub id: VertexId,
    pub kind: VertexKind,
    pub slots: Vec<Vec<VertexId>>,
    /// Editor geometry; opaque to validation.
    pub position: Option<(i64, i64)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgramGraph {
    pub vertices: BTreeMap<VertexId, Vertex>,
    pub top: Vec<VertexId>,
    pub format_version: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EditError {
    #[error("no vertex {0}")]
    NoSuchVertex(VertexId),
    #[error("vertex {id} has no slot {slot}")]
    NoSuchSlot { id: VertexId, slot: usize },
    #[error("vertex {0} is not a parallel block")]
    NotParallel(VertexId),
    #[error("Start and Stop cannot be inserted or removed")]
    Sentinel,
}

impl Default for ProgramGraph {
    fn default() -> Self {
        ProgramGraph::new()
    }
}

impl ProgramGraph {
    /// The minimal graph: Start followed by Stop.
    pub fn new() -> Self {
        let mut g = ProgramGraph {
            vertices: BTreeMap::new(),
            top: Vec::new(),
            format_version: KRT_VERSION,
        };
        for (id, kind) in [("start", VertexKind::Start), ("stop", VertexKind::Stop)] {
            let id = VertexId::new(id);
            g.vertices.insert(
                id.clone(),
                Vertex {
                    id: id.clone(),
                    kind,
                    slots: Vec::new(),
                    position: None,
                },
            );
            g.top.push(id);
        }
        g
    }

    pub fn vertex(&self, id: &VertexId) -> Option<&Vertex> {
        self.vertices.get(id)
    }

    fn fresh_id(&self) -> VertexId {
        let mut n = self.vertices.len();
        loop {
            let id = VertexId(format!("v{n}"));
            if !self.vertices.contains_key(&id) {
                return id;
            }
            n += 1;
        }
    }

    fn create(&mut self, kind: VertexKind) -> Result<VertexId, EditError> {
        if matches!(kind, VertexKind::Start | VertexKind::Stop) {
            return Err(EditError::Sentinel);
        }
        let id = self.fresh_id();
        let slots = vec![Vec::new(); kind.initial_slots()];
        self.vertices.insert(
            id.clone(),
            Vertex {
                id: id.clone(),
                kind,
                slots,
                position: None,
            },
        );
        Ok(id)
    }

    /// Inserts a new block at the end of the top sequence, just before Stop.
    pub fn append(&mut self, kind: VertexKind) -> Result<VertexId, EditError> {
        let id = self.create(kind)?;
        let at = match self.top.last() {
            Some(last) if self.vertices.get(last).map(|v| &v.kind) == Some(&VertexKind::Stop) => self.top.len() - 1,
            _ => self.top.len(),
        };
        self.top.insert(at, id.clone());
        Ok(id)
    }

    /// Appends a new block to slot `slot` of `parent`.
    pub fn append_to(&mut self, parent: &VertexId, slot: usize, kind: VertexKind) -> Result<VertexId, EditError> {
        let p = self
            .vertices
            .get(parent)
            .ok_or_else(|| EditError::NoSuchVertex(parent.clone()))?;
        if slot >= p.slots.len() {
            return Err(EditError::NoSuchSlot {
                id: parent.clone(),
                slot,
            });
        }
        let id = self.create(kind)?;
        self.vertices.get_mut(parent).expect("checked above").slots[slot].push(id.clone());
        Ok(id)
    }

    /// Adds an empty branch to a parallel block, returning its index.
    pub fn add_branch(&mut self, parallel: &VertexId) -> Result<usize, EditError> {
        let v = self
            .vertices
            .get_mut(parallel)
            .ok_or_else(|| EditError::NoSuchVertex(parallel.clone()))?;
        if v.kind != VertexKind::Parallel {
            return Err(EditError::NotParallel(parallel.clone()));
        }
        v.slots.push(Vec::new());
        Ok(v.slots.len() - 1)
    }

    /// Removes a block and everything it owns.
    pub fn remove(&mut self, id: &VertexId) -> Result<(), EditError> {
        let v = self
            .vertices
            .get(id)
            .ok_or_else(|| EditError::NoSuchVertex(id.clone()))?;
        if matches!(v.kind, VertexKind::Start | VertexKind::Stop) {
            return Err(EditError::Sentinel);
        }
        self.top.retain(|x| x != id);
        for v in self.vertices.values_mut() {
            for slot in &mut v.slots {
                slot.retain(|x| x != id);
            }
        }
        let mut pending = vec![id.clone()];
        while let Some(next) = pending.pop() {
            if let Some(v) = self.vertices.remove(&next) {
                pending.extend(v.slots.into_iter().flatten());
            }
        }
        Ok(())
    }

    pub fn set_position(&mut self, id: &VertexId, x: i64, y: i64) -> Result<(), EditError> {
        let v = self
            .vertices
            .get_mut(id)
            .ok_or_else(|| EditError::NoSuchVertex(id.clone()))?;
        v.position = Some((x, y));
        Ok(())
    }

    /// Checks the tree-shape invariants that do not depend on a catalog.
    pub fn structure_diagnostics(&self) -> Vec<Diagnostic> {
        let mut diags = Vec::new();
        let count = |want: &VertexKind| {
            self.vertices
                .values()
                .filter(|v| std::mem::discriminant(&v.kind) == std::mem::discriminant(want))
                .count()
        };
        for (kind, missing, multiple, name) in [
            (
                VertexKind::Start,
                DiagCode::MissingStart,
                DiagCode::MultipleStart,
                "Start",
            ),
            (VertexKind::Stop, DiagCode::MissingStop, DiagCode::MultipleStop, "Stop"),
        ] {
            match count(&kind) {
                0 => diags.push(Diagnostic::new(missing, format!("missing {name} vertex"))),
                1 => {}
                _ => diags.push(Diagnostic::new(multiple, format!("multiple {name} vertices"))),
            }
        }

        let kind_of = |id: &VertexId| self.vertices.get(id).map(|v| &v.kind);
        if let Some(first) = self.top.first() {
            if kind_of(first) != Some(&VertexKind::Start) {
                diags.push(
                    Diagnostic::new(DiagCode::StartNotFirst, "program must begin with Start").on_vertex(first.as_str()),
                );
            }
        }
        if let Some(last) = self.top.last() {
            if kind_of(last) != Some(&VertexKind::Stop) {
                diags.push(
                    Diagnostic::new(DiagCode::StopNotLast, "program must end with Stop").on_vertex(last.as_str()),
                );
            }
        }
        for (i, id) in self.top.iter().enumerate() {
            let inner = i > 0 && i + 1 < self.top.len();
            if inner && matches!(kind_of(id), Some(VertexKind::Start | VertexKind::Stop)) {
                diags.push(
                    Diagnostic::new(
                        DiagCode::SentinelInSlot,
                        "Start and Stop may only open and close the program",
                    )
                    .on_vertex(id.as_str()),
                );
            }
        }

        // reference counts over every sequence, reachable or not
        let mut refs: HashMap<&VertexId, usize> = HashMap::new();
        let all_refs = self
            .top
            .iter()
            .chain(self.vertices.values().flat_map(|v| v.slots.iter().flatten()));
        for id in all_refs {
            *refs.entry(id).or_default() += 1;
        }
        let mut reported = HashSet::new();
        for (id, n) in &refs {
            if !self.vertices.contains_key(*id) && reported.insert(*id) {
                diags.push(
                    Diagnostic::new(DiagCode::DanglingVertex, format!("reference to missing vertex {id}"))
                        .on_vertex(id.as_str()),
                );
            } else if *n > 1 {
                diags.push(Diagnostic::new(DiagCode::OwnedTwice, "vertex owned twice").on_vertex(id.as_str()));
            }
        }

        for v in self.vertices.values() {
            if !v.kind.slots_ok(v.slots.len()) {
                diags.push(
                    Diagnostic::new(
                        DiagCode::SlotCount,
                        format!(
                            "{} block takes {} slot(s), has {}",
                            v.kind.name(),
                            v.kind.slot_rule(),
                            v.slots.len()
                        ),
                    )
                    .on_vertex(v.id.as_str()),
                );
            }
            for child in v.slots.iter().flatten() {
                if matches!(kind_of(child), Some(VertexKind::Start | VertexKind::Stop)) {
                    diags.push(
                        Diagnostic::new(
                            DiagCode::SentinelInSlot,
                            "Start and Stop cannot be nested inside a block",
                        )
                        .on_vertex(child.as_str()),
                    );
                }
            }
        }

        let mut seen: HashSet<&VertexId> = HashSet::new();
        let mut stack: Vec<&VertexId> = self.top.iter().collect();
        while let Some(id) = stack.pop() {
            if !seen.insert(id) {
                continue;
            }
            if let Some(v) = self.vertices.get(id) {
                stack.extend(v.slots.iter().flatten());
            }
        }
        for id in self.vertices.keys() {
            if !seen.contains(id) {
                diags.push(
                    Diagnostic::new(
                        DiagCode::UnreachableVertex,
                        format!("vertex {id} is not reachable from Start"),
                    )
                    .on_vertex(id.as_str()),
                );
            }
        }
        diags.sort_by(|a, b| a.vertex.cmp(&b.vertex).then(a.message.cmp(&b.message)));
        diags
    }
}
