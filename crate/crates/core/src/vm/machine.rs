use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::catalog::{Catalog, ObjectKind, ParamKind, Range, VarType};
use crate::diag::Diagnostic;
use crate::lll::{parse_named, typecheck, Call, Expr, ParseError, Program};

use super::code::{lower, Code, Op, Pc};
use super::device::{DeviceCall, DeviceFault, Devices, Value};
use super::trace::{EventKind, Outcome, TraceRecord, TraceValue};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("program has {} diagnostic(s)", .0.len())]
    Typecheck(Vec<Diagnostic>),
}

impl LoadError {
    /// Diagnostics in a uniform shape, whichever stage failed.
    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        match self {
            LoadError::Parse(e) => vec![e.to_diagnostic()],
            LoadError::Typecheck(d) => d.clone(),
        }
    }
}

/// Parses and typechecks `text`, returning the machine at tick 0.
pub fn load_program(text: &str, catalog: Arc<Catalog>, agent: &str) -> Result<MachineState, LoadError> {
    let program = parse_named(text, agent)?;
    let diags = typecheck(&program, &catalog);
    if !diags.is_empty() {
        return Err(LoadError::Typecheck(diags));
    }
    Ok(MachineState::new(program, catalog, agent))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case", tag = "status")]
pub enum FrameStatus {
    Runnable,
    Waiting {
        until: u64,
    },
    BlockedOnEvent,
    /// Waiting for the branches of a parallel block.
    Joining,
    Done,
    Aborted,
}

impl FrameStatus {
    fn live(self) -> bool {
        !matches!(self, FrameStatus::Done | FrameStatus::Aborted)
    }
}

#[derive(Debug, Clone)]
struct Frame {
    pc: Pc,
    /// Remaining passes of the enclosing repeat loops, innermost last.
    counters: Vec<u32>,
    status: FrameStatus,
    parent: Option<usize>,
    children: Vec<usize>,
    branch: usize,
    interruptible: bool,
}

impl Frame {
    fn new(pc: Pc, parent: Option<usize>, branch: usize, interruptible: bool) -> Self {
        Frame {
            pc,
            counters: Vec::new(),
            status: FrameStatus::Runnable,
            parent,
            children: Vec::new(),
            branch,
            interruptible,
        }
    }
}

struct EvalFault {
    fault: DeviceFault,
    object: String,
    method: String,
    args: Vec<Value>,
}

const ROOT: usize = 0;

#[derive(Debug, Clone)]
pub struct MachineState {
    agent: String,
    catalog: Arc<Catalog>,
    program: Program,
    code: Code,
    frames: Vec<Frame>,
    free: Vec<usize>,
    clock: u64,
    variables: BTreeMap<String, Value>,
    trace: Vec<TraceRecord>,
    outcome: Option<Outcome>,
    fault: Option<DeviceFault>,
}

impl MachineState {
    /// A machine for an already checked program.
    pub fn new(program: Program, catalog: Arc<Catalog>, agent: &str) -> Self {
        let variables = catalog
            .objects
            .iter()
            .filter(|o| o.kind == ObjectKind::Variable)
            .map(|o| {
                let init = match o.var_type {
                    Some(VarType::Boolean) => Value::Bool(false),
                    _ => Value::Int(0),
                };
                (o.name.clone(), init)
            })
            .collect();
        let code = lower(&program);
        let mut m = MachineState {
            agent: agent.to_string(),
            catalog,
            program,
            code,
            frames: vec![Frame::new(0, None, 0, false)],
            free: Vec::new(),
            clock: 0,
            variables,
            trace: Vec::new(),
            outcome: None,
            fault: None,
        };
        m.settle(ROOT);
        m
    }

    pub fn agent(&self) -> &str {
        &self.agent
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    /// Moves the records emitted so far out of the machine.
    pub fn drain_trace(&mut self) -> Vec<TraceRecord> {
        std::mem::take(&mut self.trace)
    }

    pub fn variables(&self) -> &BTreeMap<String, Value> {
        &self.variables
    }

    pub fn is_done(&self) -> bool {
        self.outcome.is_some()
    }

    pub fn outcome(&self) -> Option<Outcome> {
        self.outcome
    }

    pub fn fault(&self) -> Option<&DeviceFault> {
        self.fault.as_ref()
    }

    /// Status of every live frame in scheduling order, as (depth, branch, status).
    pub fn frames(&self) -> Vec<(usize, usize, FrameStatus)> {
        let mut out = Vec::new();
        let mut stack = vec![(ROOT, 0)];
        while let Some((f, depth)) = stack.pop() {
            let frame = &self.frames[f];
            if !frame.status.live() {
                continue;
            }
            out.push((depth, frame.branch, frame.status));
            for &c in frame.children.iter().rev() {
                stack.push((c, depth + 1));
            }
        }
        out
    }

    /// Runs one tick: each live frame takes at most one step, then the clock
    /// advances. Does nothing once the program has ended.
    pub fn step_tick(&mut self, devices: &mut dyn Devices) {
        if self.is_done() {
            return;
        }
        for f in self.schedule() {
            if self.is_done() {
                break;
            }
            if self.frames[f].status.live() {
                self.step_frame(f, devices);
            }
        }
        self.clock += 1;
    }

    /// Steps until the program ends or the clock reaches `max_ticks`.
    pub fn run(&mut self, devices: &mut dyn Devices, max_ticks: u64) -> Outcome {
        while !self.is_done() && self.clock < max_ticks {
            self.step_tick(devices);
        }
        self.exhaust_budget();
        self.outcome.expect("ended above")
    }

    /// Ends a still-running program with a budget-exhausted record at the
    /// current clock.
    pub fn exhaust_budget(&mut self) {
        if !self.is_done() {
            self.end(Outcome::TickBudgetExhausted);
        }
    }

    fn schedule(&self) -> Vec<usize> {
        let mut order = Vec::new();
        let mut stack = vec![ROOT];
        while let Some(f) = stack.pop() {
            if self.frames[f].status.live() {
                order.push(f);
                stack.extend(self.frames[f].children.iter().rev());
            }
        }
        order
    }

    fn record(&mut self, kind: EventKind) -> TraceRecord {
        TraceRecord::bare(self.clock, &self.agent, kind)
    }

    fn end(&mut self, outcome: Outcome) {
        let r = TraceRecord::program_end(self.clock, &self.agent, outcome);
        self.trace.push(r);
        self.outcome = Some(outcome);
    }

    fn step_frame(&mut self, f: usize, devices: &mut dyn Devices) {
        match self.frames[f].status {
            FrameStatus::Runnable => self.execute(f, devices),
            FrameStatus::Waiting { until } => {
                if self.clock >= until {
                    let r = self.record(EventKind::WaitEnd);
                    self.trace.push(r);
                    self.frames[f].status = FrameStatus::Runnable;
                    self.advance(f);
                }
            }
            FrameStatus::BlockedOnEvent => {
                let Op::Event { cond } = &self.code.ops[self.frames[f].pc] else {
                    unreachable!("blocked frames sit on an event");
                };
                let cond = cond.clone();
                if let Some(true) = self.condition(&cond, devices) {
                    self.frames[f].status = FrameStatus::Runnable;
                    self.advance(f);
                }
            }
            FrameStatus::Joining | FrameStatus::Done | FrameStatus::Aborted => {}
        }
    }

    fn execute(&mut self, f: usize, devices: &mut dyn Devices) {
        let pc = self.frames[f].pc;
        match self.code.ops[pc].clone() {
            Op::Act(call) => {
                let Some(args) = self.arguments(&call, devices) else {
                    return;
                };
                let result = self.invoke(&call, &args, devices);
                match result {
                    Ok(()) => {
                        let r = self
                            .record(EventKind::Action)
                            .with_call(&call.object, &call.method, &args);
                        self.trace.push(r);
                        self.advance(f);
                    }
                    Err(fault) => {
                        let r = self
                            .record(EventKind::ActionAborted)
                            .with_call(&call.object, &call.method, &args);
                        self.trace.push(r);
                        self.fault = Some(fault);
                        self.end(Outcome::Failed);
                    }
                }
            }
            Op::WhileHead { cond, exit } => {
                if let Some(v) = self.condition(&cond, devices) {
                    self.jump(f, if v { pc + 1 } else { exit });
                }
            }
            Op::If { cond, otherwise } => {
                if let Some(v) = self.condition(&cond, devices) {
                    self.jump(f, if v { pc + 1 } else { otherwise });
                }
            }
            Op::Event { .. } => self.frames[f].status = FrameStatus::BlockedOnEvent,
            Op::Wait(n) => {
                let r = self.record(EventKind::WaitStart);
                self.trace.push(r);
                if n == 0 {
                    let r = self.record(EventKind::WaitEnd);
                    self.trace.push(r);
                    self.advance(f);
                } else {
                    self.frames[f].status = FrameStatus::Waiting {
                        until: self.clock + u64::from(n),
                    };
                }
            }
            Op::Break { exit, drop_counter } => {
                if drop_counter {
                    self.frames[f].counters.pop();
                }
                self.jump(f, exit);
            }
            Op::Fork { branches } => {
                self.frames[f].status = FrameStatus::Joining;
                let mut children = Vec::with_capacity(branches.len());
                for (i, b) in branches.iter().enumerate() {
                    let r = TraceRecord::branch(self.clock, &self.agent, EventKind::BranchStart, i);
                    self.trace.push(r);
                    children.push(self.alloc(Frame::new(b.entry, Some(f), i, b.interruptible)));
                }
                self.frames[f].children = children.clone();
                for c in children {
                    if self.frames[c].status.live() {
                        self.settle(c);
                    }
                }
            }
            Op::RepeatEnter { .. } | Op::RepeatNext { .. } | Op::Jump(_) | Op::Halt => {
                unreachable!("settled frames never rest on control ops")
            }
        }
    }

    fn alloc(&mut self, frame: Frame) -> usize {
        match self.free.pop() {
            Some(i) => {
                self.frames[i] = frame;
                i
            }
            None => {
                self.frames.push(frame);
                self.frames.len() - 1
            }
        }
    }

    fn advance(&mut self, f: usize) {
        let pc = self.frames[f].pc + 1;
        self.jump(f, pc);
    }

    fn jump(&mut self, f: usize, pc: Pc) {
        self.frames[f].pc = pc;
        self.settle(f);
    }

    /// Follows control ops until the frame rests on a steppable op, or
    /// finishes it on `Halt`.
    fn settle(&mut self, f: usize) {
        loop {
            let frame = &mut self.frames[f];
            match &self.code.ops[frame.pc] {
                Op::RepeatEnter { count: 0, exit } => frame.pc = *exit,
                Op::RepeatEnter { count, .. } => {
                    frame.counters.push(*count);
                    frame.pc += 1;
                }
                Op::RepeatNext { body } => {
                    let left = frame.counters.last_mut().expect("inside a repeat");
                    *left -= 1;
                    if *left > 0 {
                        frame.pc = *body;
                    } else {
                        frame.counters.pop();
                        frame.pc += 1;
                    }
                }
                Op::Jump(target) => frame.pc = *target,
                Op::Halt => {
                    self.finish(f);
                    return;
                }
                op => {
                    debug_assert!(!op.is_free());
                    return;
                }
            }
        }
    }

    fn finish(&mut self, f: usize) {
        self.frames[f].status = FrameStatus::Done;
        let Some(parent) = self.frames[f].parent else {
            self.end(Outcome::Completed);
            return;
        };
        let r = TraceRecord::branch(self.clock, &self.agent, EventKind::BranchEnd, self.frames[f].branch);
        self.trace.push(r);
        self.try_join(parent);
    }

    fn try_join(&mut self, p: usize) {
        let children = self.frames[p].children.clone();
        let all_interruptible = children.iter().all(|&c| self.frames[c].interruptible);
        let complete = children
            .iter()
            .filter(|&&c| all_interruptible || !self.frames[c].interruptible)
            .all(|&c| self.frames[c].status == FrameStatus::Done);
        if !complete {
            return;
        }
        for &c in &children {
            if self.frames[c].status.live() {
                self.abort(c);
            }
        }
        for &c in &children {
            self.release(c);
        }
        let parent = &mut self.frames[p];
        parent.children.clear();
        parent.status = FrameStatus::Runnable;
        self.advance(p);
    }

    /// Aborts `f` and its live descendants, recording each in preorder.
    fn abort(&mut self, f: usize) {
        let r = TraceRecord::branch(self.clock, &self.agent, EventKind::BranchAborted, self.frames[f].branch);
        self.trace.push(r);
        self.frames[f].status = FrameStatus::Aborted;
        for c in self.frames[f].children.clone() {
            if self.frames[c].status.live() {
                self.abort(c);
            }
        }
    }

    fn release(&mut self, f: usize) {
        for c in std::mem::take(&mut self.frames[f].children) {
            self.release(c);
        }
        self.frames[f].status = FrameStatus::Aborted;
        self.free.push(f);
    }

    /// Evaluates a condition; `None` when a sensor faulted and the program
    /// has ended.
    fn condition(&mut self, cond: &Expr, devices: &mut dyn Devices) -> Option<bool> {
        match self.eval(cond, None, devices) {
            Ok(v) => Some(v.as_bool()),
            Err(e) => {
                self.sensor_failed(*e);
                None
            }
        }
    }

    fn arguments(&mut self, call: &Call, devices: &mut dyn Devices) -> Option<Vec<Value>> {
        match self.eval_args(call, devices) {
            Ok(args) => Some(args),
            Err(e) => {
                self.sensor_failed(*e);
                None
            }
        }
    }

    fn sensor_failed(&mut self, e: EvalFault) {
        let r =
            TraceRecord::program_end(self.clock, &self.agent, Outcome::Failed).with_call(&e.object, &e.method, &e.args);
        self.trace.push(r);
        self.outcome = Some(Outcome::Failed);
        self.fault = Some(e.fault);
    }

    fn eval_args(&mut self, call: &Call, devices: &mut dyn Devices) -> Result<Vec<Value>, Box<EvalFault>> {
        let params = self
            .catalog
            .object(&call.object)
            .and_then(|o| o.method(&call.method))
            .map(|m| m.params.clone())
            .unwrap_or_default();
        let mut out = Vec::with_capacity(call.args.len());
        for (i, arg) in call.args.iter().enumerate() {
            let param = params.get(i);
            let range = match param {
                Some(p) if p.kind == ParamKind::Int => Some(p.range.unwrap_or(Range::DEFAULT)),
                _ => None,
            };
            out.push(self.eval(arg, range, devices)?);
        }
        Ok(out)
    }

    /// `range` is set when the value feeds an integer parameter; dynamic
    /// values are clamped into it.
    fn eval(&mut self, expr: &Expr, range: Option<Range>, devices: &mut dyn Devices) -> Result<Value, Box<EvalFault>> {
        match expr {
            Expr::Int(n, _) => Ok(Value::Int(*n)),
            Expr::Call(call) => {
                let args = self.eval_args(call, devices)?;
                let value = self.sense(call, &args, devices).map_err(|fault| {
                    Box::new(EvalFault {
                        fault,
                        object: call.object.clone(),
                        method: call.method.clone(),
                        args: args.clone(),
                    })
                })?;
                let r = self
                    .record(EventKind::CondEval)
                    .with_call(&call.object, &call.method, &args)
                    .with_value(TraceValue::Value(value));
                self.trace.push(r);
                Ok(match (value, range) {
                    (Value::Int(n), Some(range)) => Value::Int(range.clamp(n)),
                    _ => value,
                })
            }
            Expr::Not(e) => Ok(Value::Bool(!self.eval(e, None, devices)?.as_bool())),
            Expr::And(l, r) => {
                if !self.eval(l, None, devices)?.as_bool() {
                    return Ok(Value::Bool(false));
                }
                Ok(Value::Bool(self.eval(r, None, devices)?.as_bool()))
            }
            Expr::Or(l, r) => {
                if self.eval(l, None, devices)?.as_bool() {
                    return Ok(Value::Bool(true));
                }
                Ok(Value::Bool(self.eval(r, None, devices)?.as_bool()))
            }
        }
    }

    fn device_call<'a>(&'a self, call: &'a Call, args: &'a [Value]) -> DeviceCall<'a> {
        DeviceCall {
            tick: self.clock,
            agent: &self.agent,
            object: &call.object,
            method: &call.method,
            args,
        }
    }

    fn sense(&self, call: &Call, args: &[Value], devices: &dyn Devices) -> Result<Value, DeviceFault> {
        if let Some(v) = self.variables.get(&call.object) {
            return match (call.method.as_str(), *v) {
                ("Get", Value::Int(_)) => Ok(*v),
                ("IsTrue", Value::Bool(b)) => Ok(Value::Bool(b)),
                ("IsFalse", Value::Bool(b)) => Ok(Value::Bool(!b)),
                _ => Err(DeviceFault::unsupported(&self.device_call(call, args))),
            };
        }
        devices.sense(&self.device_call(call, args))
    }

    fn invoke(&mut self, call: &Call, args: &[Value], devices: &mut dyn Devices) -> Result<(), DeviceFault> {
        if let Some(slot) = self.variables.get(&call.object).copied() {
            let next = match (call.method.as_str(), slot, args) {
                ("Set", Value::Int(_), [v]) => Value::Int(v.as_int().min(Range::DEFAULT.max)),
                ("SetTrue", Value::Bool(_), []) => Value::Bool(true),
                ("SetFalse", Value::Bool(_), []) => Value::Bool(false),
                _ => return Err(DeviceFault::unsupported(&self.device_call(call, args))),
            };
            self.variables.insert(call.object.clone(), next);
            return Ok(());
        }
        let dc = DeviceCall {
            tick: self.clock,
            agent: &self.agent,
            object: &call.object,
            method: &call.method,
            args,
        };
        devices.act(&dc)
    }
}
