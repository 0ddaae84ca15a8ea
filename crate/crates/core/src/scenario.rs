//! Multi-agent runs: one program per agent against a shared world.
//!
//! Each global tick steps every running agent once, in world declaration
//! order, and then advances the world's physics once.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::catalog::{Catalog, CatalogError};
use crate::diag::Diagnostic;
use crate::lll::{parse_named, typecheck, Program};
use crate::vm::{Devices, MachineState, Outcome, TraceRecord};
use crate::world::{world_from_spec, WorldError, WorldState};

/// What the driver needs from an interpreter.
pub trait Agent {
    fn step_tick(&mut self, devices: &mut dyn Devices);
    fn is_done(&self) -> bool;
    fn drain_trace(&mut self) -> Vec<TraceRecord>;
    fn exhaust_budget(&mut self);
}

impl Agent for MachineState {
    fn step_tick(&mut self, devices: &mut dyn Devices) {
        MachineState::step_tick(self, devices)
    }

    fn is_done(&self) -> bool {
        MachineState::is_done(self)
    }

    fn drain_trace(&mut self) -> Vec<TraceRecord> {
        MachineState::drain_trace(self)
    }

    fn exhaust_budget(&mut self) {
        MachineState::exhaust_budget(self)
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    World(#[from] WorldError),
    #[error("{0}")]
    Catalog(#[from] CatalogError),
    #[error("no agent named {0} in the world")]
    UnknownAgent(String),
    #[error("agent {0} has no robot-object catalog bound")]
    Unbound(String),
    #[error("two programs given for agent {0}")]
    DuplicateProgram(String),
    #[error("program for {agent} is invalid")]
    Program {
        agent: String,
        text: String,
        diagnostics: Vec<Diagnostic>,
    },
}

/// A checked program ready to run on an agent.
#[derive(Debug, Clone)]
pub struct AgentProgram {
    pub agent: String,
    pub program: Program,
    pub catalog: Arc<Catalog>,
}

/// A world plus checked programs, ordered as the agents are declared.
#[derive(Debug, Clone)]
pub struct Setup {
    pub world: WorldState,
    pub programs: Vec<AgentProgram>,
}

impl Setup {
    /// Reads a world file; catalogs named by its binds are resolved
    /// against the file's directory.
    pub fn from_files(world: &Path, programs: &[(String, String)]) -> Result<Setup, ScenarioError> {
        let text = std::fs::read_to_string(world).map_err(|source| ScenarioError::Io {
            path: world.to_path_buf(),
            source,
        })?;
        let base = world.parent().unwrap_or(Path::new("."));
        Setup::from_text(&text, base, programs)
    }

    pub fn from_text(world: &str, base: &Path, programs: &[(String, String)]) -> Result<Setup, ScenarioError> {
        let world = world_from_spec(world)?;
        let mut texts = BTreeMap::new();
        for (agent, text) in programs {
            if world.role(agent).is_none() {
                return Err(ScenarioError::UnknownAgent(agent.clone()));
            }
            if texts.insert(agent.clone(), text.clone()).is_some() {
                return Err(ScenarioError::DuplicateProgram(agent.clone()));
            }
        }
        let mut catalogs: BTreeMap<PathBuf, Arc<Catalog>> = BTreeMap::new();
        let mut checked = Vec::new();
        for (agent, _) in &world.agents {
            let Some(text) = texts.get(agent) else {
                continue;
            };
            let bind = world
                .binds
                .iter()
                .find(|b| &b.agent == agent)
                .ok_or_else(|| ScenarioError::Unbound(agent.clone()))?;
            let path = base.join(&bind.objects);
            let catalog = match catalogs.get(&path) {
                Some(c) => c.clone(),
                None => {
                    let c = Arc::new(Catalog::load_files(None, &path)?);
                    catalogs.insert(path, c.clone());
                    c
                }
            };
            let fail = |diagnostics| ScenarioError::Program {
                agent: agent.clone(),
                text: text.clone(),
                diagnostics,
            };
            let program = parse_named(text, agent).map_err(|e| fail(vec![e.to_diagnostic()]))?;
            let diags = typecheck(&program, &catalog);
            if !diags.is_empty() {
                return Err(fail(diags));
            }
            checked.push(AgentProgram {
                agent: agent.clone(),
                program,
                catalog,
            });
        }
        Ok(Setup {
            world,
            programs: checked,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ready,
    Running,
    Done,
}

pub struct Scenario<A = MachineState> {
    world: WorldState,
    agents: Vec<(String, A)>,
    max_ticks: u64,
    clock: u64,
    trace: Vec<TraceRecord>,
    done: bool,
}

impl Scenario<MachineState> {
    pub fn new(setup: Setup, max_ticks: u64) -> Self {
        Scenario::with(setup, max_ticks, |p| MachineState::new(p.program, p.catalog, &p.agent))
    }
}

impl<A: Agent> Scenario<A> {
    /// Builds the run with any interpreter.
    pub fn with(setup: Setup, max_ticks: u64, make: impl Fn(AgentProgram) -> A) -> Self {
        let agents = setup.programs.into_iter().map(|p| (p.agent.clone(), make(p))).collect();
        let mut s = Scenario {
            world: setup.world,
            agents,
            max_ticks,
            clock: 0,
            trace: Vec::new(),
            done: false,
        };
        for (_, a) in &mut s.agents {
            s.trace.extend(a.drain_trace());
        }
        s.check_end();
        s
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn max_ticks(&self) -> u64 {
        self.max_ticks
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn status(&self) -> Status {
        match (self.done, self.clock) {
            (true, _) => Status::Done,
            (false, 0) => Status::Ready,
            _ => Status::Running,
        }
    }

    /// Names of the agents that run programs, with whether each has ended.
    pub fn agents(&self) -> Vec<(&str, bool)> {
        self.agents.iter().map(|(n, a)| (n.as_str(), a.is_done())).collect()
    }

    /// One global tick. Returns the records it produced.
    pub fn step(&mut self) -> &[TraceRecord] {
        let start = self.trace.len();
        if self.done {
            return &self.trace[start..];
        }
        for (_, agent) in &mut self.agents {
            if !agent.is_done() {
                agent.step_tick(&mut self.world);
                self.trace.extend(agent.drain_trace());
            }
        }
        self.world.advance_physics();
        self.clock += 1;
        self.check_end();
        &self.trace[start..]
    }

    /// Up to `ticks` global ticks; stops early when the run ends.
    pub fn step_many(&mut self, ticks: u64) -> Vec<TraceRecord> {
        let start = self.trace.len();
        for _ in 0..ticks {
            if self.done {
                break;
            }
            self.step();
        }
        self.trace[start..].to_vec()
    }

    /// Runs to the end, calling `observe` after every tick.
    pub fn run_observed(&mut self, mut observe: impl FnMut(&WorldState, u64)) -> &[TraceRecord] {
        while !self.done {
            self.step();
            observe(&self.world, self.clock);
        }
        &self.trace
    }

    pub fn run(&mut self) -> &[TraceRecord] {
        self.run_observed(|_, _| {})
    }

    fn check_end(&mut self) {
        if self.agents.iter().all(|(_, a)| a.is_done()) {
            self.done = true;
            return;
        }
        if self.clock >= self.max_ticks {
            for (_, agent) in &mut self.agents {
                agent.exhaust_budget();
                self.trace.extend(agent.drain_trace());
            }
            self.done = true;
        }
    }

    /// The outcome of each agent's program, from its program-end record.
    pub fn outcomes(&self) -> BTreeMap<String, Outcome> {
        self.trace
            .iter()
            .filter_map(|r| match &r.value {
                Some(crate::vm::TraceValue::Outcome(o)) => Some((r.agent.clone(), *o)),
                _ => None,
            })
            .collect()
    }
}
