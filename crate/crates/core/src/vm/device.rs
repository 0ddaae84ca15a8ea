use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A runtime value: the result of a sensor read or an evaluated argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(u32),
    Bool(bool),
}

impl Value {
    pub fn as_bool(self) -> bool {
        match self {
            Value::Bool(b) => b,
            Value::Int(n) => n != 0,
        }
    }

    pub fn as_int(self) -> u32 {
        match self {
            Value::Int(n) => n,
            Value::Bool(b) => b as u32,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Bool(b) => write!(f, "{b}"),
        }
    }
}

/// One device invocation as seen by a backend.
#[derive(Debug, Clone, Copy)]
pub struct DeviceCall<'a> {
    pub tick: u64,
    pub agent: &'a str,
    pub object: &'a str,
    pub method: &'a str,
    pub args: &'a [Value],
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DeviceFault {
    #[error("agent {agent} has no device bound to '{object}'")]
    UnknownDevice { agent: String, object: String },
    #[error("device {object} of agent {agent} does not support {method}")]
    UnsupportedMethod {
        agent: String,
        object: String,
        method: String,
    },
    #[error("unknown agent {0}")]
    UnknownAgent(String),
}

impl DeviceFault {
    pub fn unknown_device(call: &DeviceCall<'_>) -> Self {
        DeviceFault::UnknownDevice {
            agent: call.agent.to_string(),
            object: call.object.to_string(),
        }
    }

    pub fn unsupported(call: &DeviceCall<'_>) -> Self {
        DeviceFault::UnsupportedMethod {
            agent: call.agent.to_string(),
            object: call.object.to_string(),
            method: call.method.to_string(),
        }
    }
}

/// The world as a program sees it. Actuators mutate; sensors only read,
/// which the `&self` receiver enforces.
pub trait Devices {
    fn act(&mut self, call: &DeviceCall<'_>) -> Result<(), DeviceFault>;
    fn sense(&self, call: &DeviceCall<'_>) -> Result<Value, DeviceFault>;
}
