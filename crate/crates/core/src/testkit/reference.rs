//! A deliberately plain interpreter used as an oracle for the VM.
//!
//! It walks the AST directly. Each frame keeps an explicit continuation
//! stack; each tick a scheduler queue of live frames is built and drained.
//! Nothing here is shared with `vm::MachineState` apart from the device and
//! trace types.

use std::collections::{BTreeMap, VecDeque};

use crate::catalog::{Catalog, ObjectKind, ParamKind, VarType};
use crate::lll::{Block, Call, Expr, InstrKind, Program};
use crate::vm::{DeviceCall, DeviceFault, Devices, EventKind, Outcome, TraceRecord, TraceValue, Value};

#[derive(Clone)]
enum Cont {
    Seq {
        block: Block,
        idx: usize,
    },
    RepeatLoop {
        remaining: u32,
        body: Block,
    },
    /// A while loop whose guard is due.
    WhileLoop {
        cond: Expr,
        body: Block,
    },
}

#[derive(Clone, PartialEq)]
enum State {
    Ready,
    Sleeping(u64),
    Blocked,
    Joining,
    Finished,
    Killed,
}

struct Frame {
    stack: Vec<Cont>,
    state: State,
    /// Condition and body of the event a blocked frame waits on.
    event: Option<(Expr, Block)>,
    parent: Option<usize>,
    children: Vec<usize>,
    index: usize,
    interruptible: bool,
}

pub struct RefMachine {
    agent: String,
    catalog: Catalog,
    frames: Vec<Frame>,
    clock: u64,
    vars: BTreeMap<String, Value>,
    trace: Vec<TraceRecord>,
    done: bool,
}

struct SensorFault {
    object: String,
    method: String,
    args: Vec<Value>,
}

/// Lexical test: an interrupt in this branch, not counting nested parallels.
fn interruptible(block: &Block) -> bool {
    for instr in block {
        let found = match &instr.kind {
            InstrKind::Interrupt(_) => true,
            InstrKind::Parallel(_) => false,
            InstrKind::Repeat { body, .. } => interruptible(body),
            InstrKind::While { body, .. } => interruptible(body),
            InstrKind::Event { body, .. } => interruptible(body),
            InstrKind::If { then, otherwise, .. } => {
                interruptible(then) || otherwise.as_ref().map(interruptible).unwrap_or(false)
            }
            _ => false,
        };
        if found {
            return true;
        }
    }
    false
}

impl RefMachine {
    pub fn new(program: &Program, catalog: &Catalog, agent: &str) -> Self {
        let mut vars = BTreeMap::new();
        for o in &catalog.objects {
            if o.kind == ObjectKind::Variable {
                let v = if o.var_type == Some(VarType::Boolean) {
                    Value::Bool(false)
                } else {
                    Value::Int(0)
                };
                vars.insert(o.name.clone(), v);
            }
        }
        let mut m = RefMachine {
            agent: agent.to_string(),
            catalog: catalog.clone(),
            frames: vec![Frame {
                stack: vec![Cont::Seq {
                    block: program.body.clone(),
                    idx: 0,
                }],
                state: State::Ready,
                event: None,
                parent: None,
                children: vec![],
                index: 0,
                interruptible: false,
            }],
            clock: 0,
            vars,
            trace: vec![],
            done: false,
        };
        m.normalize(0);
        m
    }

    pub fn agent(&self) -> &str {
        &self.agent
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    pub fn drain_trace(&mut self) -> Vec<TraceRecord> {
        std::mem::take(&mut self.trace)
    }

    pub fn variables(&self) -> &BTreeMap<String, Value> {
        &self.vars
    }

    /// Runs to completion or budget and returns the whole trace.
    pub fn run(&mut self, devices: &mut dyn Devices, max_ticks: u64) -> Vec<TraceRecord> {
        while !self.done && self.clock < max_ticks {
            self.step_tick(devices);
        }
        self.exhaust_budget();
        self.trace.clone()
    }

    pub fn exhaust_budget(&mut self) {
        if !self.done {
            self.push(TraceRecord::program_end(
                self.clock,
                &self.agent,
                Outcome::TickBudgetExhausted,
            ));
            self.done = true;
        }
    }

    pub fn step_tick(&mut self, devices: &mut dyn Devices) {
        if self.done {
            return;
        }
        let mut queue = VecDeque::new();
        self.enqueue(0, &mut queue);
        while let Some(f) = queue.pop_front() {
            if self.done {
                break;
            }
            if self.alive(f) {
                self.step(f, devices);
            }
        }
        self.clock += 1;
    }

    fn enqueue(&self, f: usize, queue: &mut VecDeque<usize>) {
        if !self.alive(f) {
            return;
        }
        queue.push_back(f);
        for &c in &self.frames[f].children {
            self.enqueue(c, queue);
        }
    }

    fn alive(&self, f: usize) -> bool {
        self.frames[f].state != State::Finished && self.frames[f].state != State::Killed
    }

    fn push(&mut self, r: TraceRecord) {
        self.trace.push(r);
    }

    fn rec(&self, kind: EventKind) -> TraceRecord {
        TraceRecord::bare(self.clock, &self.agent, kind)
    }

    fn step(&mut self, f: usize, devices: &mut dyn Devices) {
        match self.frames[f].state.clone() {
            State::Ready => {}
            State::Sleeping(until) => {
                if self.clock >= until {
                    self.push(self.rec(EventKind::WaitEnd));
                    self.frames[f].state = State::Ready;
                    self.normalize(f);
                }
                return;
            }
            State::Blocked => {
                let (cond, body) = self.frames[f].event.clone().unwrap();
                match self.eval_bool(&cond, devices) {
                    Err(e) => self.sensor_fault(e),
                    Ok(false) => {}
                    Ok(true) => {
                        self.frames[f].state = State::Ready;
                        self.frames[f].event = None;
                        self.frames[f].stack.push(Cont::Seq { block: body, idx: 0 });
                        self.normalize(f);
                    }
                }
                return;
            }
            _ => return,
        }

        let top = self.frames[f].stack.last().cloned().unwrap();
        match top {
            Cont::WhileLoop { cond, body } => self.guard(f, &cond, body, devices),
            Cont::RepeatLoop { .. } => unreachable!(),
            Cont::Seq { block, idx } => {
                if let Some(Cont::Seq { idx: i, .. }) = self.frames[f].stack.last_mut() {
                    *i += 1;
                }
                let instr = &block[idx];
                match &instr.kind {
                    InstrKind::Action(call) | InstrKind::Interrupt(call) => {
                        let args = match self.eval_args(call, devices) {
                            Ok(a) => a,
                            Err(e) => return self.sensor_fault(e),
                        };
                        match self.actuate(call, &args, devices) {
                            Ok(()) => {
                                self.push(self.rec(EventKind::Action).with_call(&call.object, &call.method, &args));
                                self.normalize(f);
                            }
                            Err(_) => {
                                self.push(self.rec(EventKind::ActionAborted).with_call(
                                    &call.object,
                                    &call.method,
                                    &args,
                                ));
                                self.push(TraceRecord::program_end(self.clock, &self.agent, Outcome::Failed));
                                self.done = true;
                            }
                        }
                    }
                    InstrKind::While { cond, body } => {
                        self.frames[f].stack.push(Cont::WhileLoop {
                            cond: cond.clone(),
                            body: body.clone(),
                        });
                        self.guard(f, cond, body.clone(), devices);
                    }
                    InstrKind::If { cond, then, otherwise } => match self.eval_bool(cond, devices) {
                        Err(e) => self.sensor_fault(e),
                        Ok(v) => {
                            let chosen = if v { Some(then.clone()) } else { otherwise.clone() };
                            if let Some(block) = chosen {
                                self.frames[f].stack.push(Cont::Seq { block, idx: 0 });
                            }
                            self.normalize(f);
                        }
                    },
                    InstrKind::Event { cond, body } => {
                        self.frames[f].state = State::Blocked;
                        self.frames[f].event = Some((cond.clone(), body.clone()));
                    }
                    InstrKind::Wait(n) => {
                        self.push(self.rec(EventKind::WaitStart));
                        if *n == 0 {
                            self.push(self.rec(EventKind::WaitEnd));
                            self.normalize(f);
                        } else {
                            self.frames[f].state = State::Sleeping(self.clock + *n as u64);
                        }
                    }
                    InstrKind::Break => {
                        loop {
                            match self.frames[f].stack.pop() {
                                Some(Cont::RepeatLoop { .. }) | Some(Cont::WhileLoop { .. }) => break,
                                Some(Cont::Seq { .. }) => continue,
                                None => panic!("break outside loop"),
                            }
                        }
                        self.normalize(f);
                    }
                    InstrKind::Parallel(blocks) => {
                        self.frames[f].state = State::Joining;
                        let mut kids = vec![];
                        for (i, b) in blocks.iter().enumerate() {
                            self.push(TraceRecord::branch(self.clock, &self.agent, EventKind::BranchStart, i));
                            self.frames.push(Frame {
                                stack: vec![Cont::Seq {
                                    block: b.clone(),
                                    idx: 0,
                                }],
                                state: State::Ready,
                                event: None,
                                parent: Some(f),
                                children: vec![],
                                index: i,
                                interruptible: interruptible(b),
                            });
                            kids.push(self.frames.len() - 1);
                        }
                        self.frames[f].children = kids.clone();
                        for k in kids {
                            if self.alive(k) {
                                self.normalize(k);
                            }
                        }
                    }
                    InstrKind::Repeat { .. } => unreachable!(),
                }
            }
        }
    }

    fn guard(&mut self, f: usize, cond: &Expr, body: Block, devices: &mut dyn Devices) {
        match self.eval_bool(cond, devices) {
            Err(e) => self.sensor_fault(e),
            Ok(true) => {
                self.frames[f].stack.push(Cont::Seq { block: body, idx: 0 });
                self.normalize(f);
            }
            Ok(false) => {
                self.frames[f].stack.pop();
                self.normalize(f);
            }
        }
    }

    /// Unwinds finished sequences and repeat bookkeeping until the frame's
    /// next step is a real instruction, or the frame has nothing left.
    fn normalize(&mut self, f: usize) {
        loop {
            let stack = &mut self.frames[f].stack;
            match stack.last_mut() {
                None => {
                    self.frame_finished(f);
                    return;
                }
                Some(Cont::WhileLoop { .. }) => return,
                Some(Cont::RepeatLoop { remaining, body }) => {
                    *remaining -= 1;
                    if *remaining == 0 {
                        stack.pop();
                    } else {
                        let body = body.clone();
                        stack.push(Cont::Seq { block: body, idx: 0 });
                    }
                }
                Some(Cont::Seq { block, idx }) => {
                    if *idx >= block.len() {
                        stack.pop();
                        continue;
                    }
                    if let InstrKind::Repeat { count, body } = &block[*idx].kind {
                        let (count, body) = (*count, body.clone());
                        *idx += 1;
                        if count > 0 {
                            stack.push(Cont::RepeatLoop {
                                remaining: count,
                                body: body.clone(),
                            });
                            stack.push(Cont::Seq { block: body, idx: 0 });
                        }
                        continue;
                    }
                    return;
                }
            }
        }
    }

    fn frame_finished(&mut self, f: usize) {
        self.frames[f].state = State::Finished;
        match self.frames[f].parent {
            None => {
                self.push(TraceRecord::program_end(self.clock, &self.agent, Outcome::Completed));
                self.done = true;
            }
            Some(p) => {
                self.push(TraceRecord::branch(
                    self.clock,
                    &self.agent,
                    EventKind::BranchEnd,
                    self.frames[f].index,
                ));
                self.check_join(p);
            }
        }
    }

    fn check_join(&mut self, p: usize) {
        let kids = self.frames[p].children.clone();
        let every = kids.iter().all(|&k| self.frames[k].interruptible);
        for &k in &kids {
            let required = every || !self.frames[k].interruptible;
            if required && self.frames[k].state != State::Finished {
                return;
            }
        }
        for &k in &kids {
            if self.alive(k) {
                self.kill(k);
            }
        }
        self.frames[p].children.clear();
        self.frames[p].state = State::Ready;
        self.normalize(p);
    }

    fn kill(&mut self, f: usize) {
        self.push(TraceRecord::branch(
            self.clock,
            &self.agent,
            EventKind::BranchAborted,
            self.frames[f].index,
        ));
        self.frames[f].state = State::Killed;
        let kids = self.frames[f].children.clone();
        for k in kids {
            if self.alive(k) {
                self.kill(k);
            }
        }
    }

    fn sensor_fault(&mut self, e: SensorFault) {
        self.push(
            TraceRecord::program_end(self.clock, &self.agent, Outcome::Failed).with_call(&e.object, &e.method, &e.args),
        );
        self.done = true;
    }

    fn eval_bool(&mut self, e: &Expr, devices: &mut dyn Devices) -> Result<bool, SensorFault> {
        match e {
            Expr::Not(inner) => Ok(!self.eval_bool(inner, devices)?),
            Expr::And(l, r) => Ok(self.eval_bool(l, devices)? && self.eval_bool(r, devices)?),
            Expr::Or(l, r) => Ok(self.eval_bool(l, devices)? || self.eval_bool(r, devices)?),
            Expr::Call(c) => Ok(match self.read(c, devices)? {
                Value::Bool(b) => b,
                Value::Int(n) => n != 0,
            }),
            Expr::Int(n, _) => Ok(*n != 0),
        }
    }

    fn eval_args(&mut self, call: &Call, devices: &mut dyn Devices) -> Result<Vec<Value>, SensorFault> {
        let params = self
            .catalog
            .object(&call.object)
            .unwrap()
            .method(&call.method)
            .unwrap()
            .params
            .clone();
        let mut out = vec![];
        for (arg, param) in call.args.iter().zip(params) {
            let v = match param.kind {
                ParamKind::BoolExpr => Value::Bool(self.eval_bool(arg, devices)?),
                ParamKind::Int => match arg {
                    Expr::Int(n, _) => Value::Int(*n),
                    Expr::Call(c) => {
                        let raw = match self.read(c, devices)? {
                            Value::Int(n) => n,
                            Value::Bool(b) => b as u32,
                        };
                        let range = param.range.unwrap();
                        Value::Int(raw.max(range.min).min(range.max))
                    }
                    _ => unreachable!("typechecked"),
                },
            };
            out.push(v);
        }
        Ok(out)
    }

    fn read(&mut self, c: &Call, devices: &mut dyn Devices) -> Result<Value, SensorFault> {
        let args = self.eval_args(c, devices)?;
        let result = match self.vars.get(&c.object) {
            Some(&v) => Ok(match c.method.as_str() {
                "IsFalse" => Value::Bool(v == Value::Bool(false)),
                _ => v,
            }),
            None => devices.sense(&DeviceCall {
                tick: self.clock,
                agent: &self.agent,
                object: &c.object,
                method: &c.method,
                args: &args,
            }),
        };
        match result {
            Ok(v) => {
                let r = self
                    .rec(EventKind::CondEval)
                    .with_call(&c.object, &c.method, &args)
                    .with_value(TraceValue::Value(v));
                self.push(r);
                Ok(v)
            }
            Err(_) => Err(SensorFault {
                object: c.object.clone(),
                method: c.method.clone(),
                args,
            }),
        }
    }

    fn actuate(&mut self, c: &Call, args: &[Value], devices: &mut dyn Devices) -> Result<(), DeviceFault> {
        if self.vars.contains_key(&c.object) {
            let v = match c.method.as_str() {
                "SetTrue" => Value::Bool(true),
                "SetFalse" => Value::Bool(false),
                _ => Value::Int(match args[0] {
                    Value::Int(n) => n.min(100),
                    Value::Bool(b) => b as u32,
                }),
            };
            self.vars.insert(c.object.clone(), v);
            return Ok(());
        }
        devices.act(&DeviceCall {
            tick: self.clock,
            agent: &self.agent,
            object: &c.object,
            method: &c.method,
            args,
        })
    }
}
