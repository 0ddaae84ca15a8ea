//! Deterministic tick-based interpreter of the Low Level Language.
//!
//! A program is lowered to flat code and executed by a tree of frames: the
//! root frame plus one child per branch of every running parallel block.
//! Each tick, every live frame takes at most one step, in depth-first
//! branch-declaration order, and the clock then advances by one.

mod code;
mod device;
mod machine;
mod trace;

pub use device::{DeviceCall, DeviceFault, Devices, Value};
pub use machine::{load_program, FrameStatus, LoadError, MachineState};
pub use trace::{from_jsonl, to_jsonl, EventKind, Outcome, TraceRecord, TraceValue};
