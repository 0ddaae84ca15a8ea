use serde::{Deserialize, Serialize};

use super::device::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    Action,
    ActionAborted,
    CondEval,
    WaitStart,
    WaitEnd,
    BranchStart,
    BranchEnd,
    BranchAborted,
    ProgramEnd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Completed,
    TickBudgetExhausted,
    Failed,
}

/// The `value` column: a sensor result, a branch index, or a program-end
/// status.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TraceValue {
    Value(Value),
    Outcome(Outcome),
}

/// One line of a trace. Field order is part of the file format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub tick: u64,
    pub agent: String,
    pub kind: EventKind,
    pub object: Option<String>,
    pub method: Option<String>,
    pub args: Option<Vec<Value>>,
    pub value: Option<TraceValue>,
}

impl TraceRecord {
    pub fn bare(tick: u64, agent: &str, kind: EventKind) -> Self {
        TraceRecord {
            tick,
            agent: agent.to_string(),
            kind,
            object: None,
            method: None,
            args: None,
            value: None,
        }
    }

    pub fn with_call(mut self, object: &str, method: &str, args: &[Value]) -> Self {
        self.object = Some(object.to_string());
        self.method = Some(method.to_string());
        self.args = Some(args.to_vec());
        self
    }

    pub fn with_value(mut self, value: TraceValue) -> Self {
        self.value = Some(value);
        self
    }

    pub fn branch(tick: u64, agent: &str, kind: EventKind, index: usize) -> Self {
        TraceRecord::bare(tick, agent, kind).with_value(TraceValue::Value(Value::Int(index as u32)))
    }

    pub fn program_end(tick: u64, agent: &str, outcome: Outcome) -> Self {
        TraceRecord::bare(tick, agent, EventKind::ProgramEnd).with_value(TraceValue::Outcome(outcome))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("trace records always serialize")
    }
}

/// Serializes records as JSON Lines.
pub fn to_jsonl(records: &[TraceRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&r.to_json());
        out.push('\n');
    }
    out
}

pub fn from_jsonl(text: &str) -> Result<Vec<TraceRecord>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}
