//! Test support: an independent reference interpreter, seeded generators,
//! and a scripted device backend. Enabled by the `testkit` feature.

mod gen;
mod reference;

use std::cell::RefCell;
use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

pub use gen::{graph_of, GenConfig, ProgramGen};
pub use reference::RefMachine;

use crate::catalog::{Catalog, ReturnType};
use crate::vm::{DeviceCall, DeviceFault, Devices, Value};

/// Sensors answer with a pseudo-random function of the call and tick, so
/// the same call at the same tick always reads the same. Optionally, one in
/// `fault_one_in` device calls fails.
pub struct ScriptedDevices {
    catalog: Catalog,
    seed: u64,
    pub fault_one_in: Option<u64>,
    pub acted: RefCell<Vec<String>>,
}

impl ScriptedDevices {
    pub fn new(catalog: &Catalog, seed: u64) -> Self {
        ScriptedDevices {
            catalog: catalog.clone(),
            seed,
            fault_one_in: None,
            acted: RefCell::new(Vec::new()),
        }
    }

    fn hash(&self, call: &DeviceCall<'_>) -> u64 {
        let mut h = DefaultHasher::new();
        (self.seed, call.tick, call.agent, call.object, call.method).hash(&mut h);
        for a in call.args {
            a.as_int().hash(&mut h);
        }
        h.finish()
    }

    fn faults(&self, h: u64) -> bool {
        self.fault_one_in.is_some_and(|n| (h >> 32).is_multiple_of(n))
    }
}

impl Devices for ScriptedDevices {
    fn act(&mut self, call: &DeviceCall<'_>) -> Result<(), DeviceFault> {
        if self.faults(self.hash(call)) {
            return Err(DeviceFault::unknown_device(call));
        }
        self.acted
            .borrow_mut()
            .push(format!("{}:{}.{}", call.tick, call.object, call.method));
        Ok(())
    }

    fn sense(&self, call: &DeviceCall<'_>) -> Result<Value, DeviceFault> {
        let h = self.hash(call);
        if self.faults(h) {
            return Err(DeviceFault::unknown_device(call));
        }
        let returns = self
            .catalog
            .object(call.object)
            .and_then(|o| o.method(call.method))
            .map(|m| m.returns);
        match returns {
            Some(ReturnType::Int) => Ok(Value::Int((h % 121) as u32)),
            Some(ReturnType::Bool) => Ok(Value::Bool(h.is_multiple_of(3))),
            _ => Err(DeviceFault::unsupported(call)),
        }
    }
}

impl crate::scenario::Agent for RefMachine {
    fn step_tick(&mut self, devices: &mut dyn Devices) {
        RefMachine::step_tick(self, devices)
    }

    fn is_done(&self) -> bool {
        RefMachine::is_done(self)
    }

    fn drain_trace(&mut self) -> Vec<crate::vm::TraceRecord> {
        RefMachine::drain_trace(self)
    }

    fn exhaust_budget(&mut self) {
        RefMachine::exhaust_budget(self)
    }
}

/// The shipped demo: world file plus one program per carrier and station.
pub fn demo_programs(assets: &std::path::Path) -> Vec<(String, String)> {
    let read = |name: &str| std::fs::read_to_string(assets.join("programs").join(name)).expect("demo program");
    vec![
        ("c1".to_string(), read("carrier.lll")),
        ("c2".to_string(), read("carrier.lll")),
        ("L".to_string(), read("loader.lll")),
        ("U".to_string(), read("unloader.lll")),
    ]
}
