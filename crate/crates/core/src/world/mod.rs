//! The simulated transport world: a ring of track sections, carriers moving
//! around it, loader and unloader stations beside it, and stores holding
//! stock.
//!
//! Agents reach the world only through [`Devices`]. Which devices an agent
//! has depends on its role.

mod load;

use std::collections::BTreeMap;

use serde::Serialize;

use crate::vm::{DeviceCall, DeviceFault, Devices, Value};

pub use load::{world_from_spec, Bind, WorldError};

/// Sub-section position is kept in hundredths so that speed `s` advances a
/// carrier by exactly `s/100` sections per tick.
pub const SUBSTEPS: u32 = 100;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Section {
    pub index: usize,
    pub sign: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Carrier {
    pub name: String,
    pub section: usize,
    /// Hundredths of a section travelled, in `0..SUBSTEPS`.
    pub sub: u32,
    pub direction: Direction,
    pub speed: u32,
    pub loaded: bool,
    pub collided: bool,
    pub door_open: bool,
    /// Last command given to devices whose effect is not simulated.
    pub recorded: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StationRole {
    Loader,
    Unloader,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Station {
    pub name: String,
    pub role: StationRole,
    pub section: usize,
    pub door_open: bool,
    pub presence: bool,
    pub recorded: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Store {
    pub name: String,
    pub count: u64,
    pub station: Option<String>,
    pub recorded: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Carrier,
    Station,
    Store,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WorldState {
    pub sections: Vec<Section>,
    pub carriers: Vec<Carrier>,
    pub stations: Vec<Station>,
    pub stores: Vec<Store>,
    pub tick: u64,
    /// Every agent with its role, in document order.
    pub agents: Vec<(String, Role)>,
    #[serde(skip)]
    pub binds: Vec<Bind>,
}

impl WorldState {
    pub fn role(&self, agent: &str) -> Option<Role> {
        self.agents.iter().find(|(n, _)| n == agent).map(|(_, r)| *r)
    }

    pub fn carrier(&self, name: &str) -> Option<&Carrier> {
        self.carriers.iter().find(|c| c.name == name)
    }

    pub fn station(&self, name: &str) -> Option<&Station> {
        self.stations.iter().find(|s| s.name == name)
    }

    pub fn store(&self, name: &str) -> Option<&Store> {
        self.stores.iter().find(|s| s.name == name)
    }

    /// Store counts plus loaded carriers. Constant over any run.
    pub fn stock(&self) -> u64 {
        self.stores.iter().map(|s| s.count).sum::<u64>() + self.carriers.iter().filter(|c| c.loaded).count() as u64
    }

    /// Moves every carrier by its speed, then refreshes derived flags.
    pub fn advance_physics(&mut self) {
        let n = self.sections.len();
        for c in &mut self.carriers {
            match c.direction {
                Direction::Forward => {
                    c.sub += c.speed;
                    while c.sub >= SUBSTEPS {
                        c.sub -= SUBSTEPS;
                        c.section = (c.section + 1) % n;
                    }
                }
                Direction::Backward => {
                    let mut sub = c.sub as i64 - c.speed as i64;
                    while sub < 0 {
                        sub += SUBSTEPS as i64;
                        c.section = (c.section + n - 1) % n;
                    }
                    c.sub = sub as u32;
                }
            }
        }
        self.tick += 1;
        self.refresh();
    }

    pub(crate) fn refresh(&mut self) {
        let sections: Vec<usize> = self.carriers.iter().map(|c| c.section).collect();
        for (i, c) in self.carriers.iter_mut().enumerate() {
            c.collided = sections.iter().enumerate().any(|(j, &s)| j != i && s == c.section);
        }
        for st in &mut self.stations {
            st.presence = self.carriers.iter().any(|c| c.section == st.section && c.speed == 0);
        }
    }

    fn waiting_carrier(&self, section: usize) -> Option<usize> {
        self.carriers.iter().position(|c| c.section == section && c.speed == 0)
    }

    fn store_of_station(&self, station: &str) -> Option<usize> {
        self.stores.iter().position(|s| s.station.as_deref() == Some(station))
    }

    /// Applies an actuator call on behalf of `call.agent`.
    pub fn apply_action(&mut self, call: &DeviceCall<'_>) -> Result<(), DeviceFault> {
        let arg = |i: usize| call.args.get(i).map(|v| v.as_int()).unwrap_or(0);
        match self.role(call.agent) {
            None => Err(DeviceFault::UnknownAgent(call.agent.to_string())),
            Some(Role::Carrier) => {
                let c = self
                    .carriers
                    .iter_mut()
                    .find(|c| c.name == call.agent)
                    .expect("role table and carriers agree");
                match (call.object, call.method) {
                    ("wheel", "Advance") => {
                        c.speed = arg(0);
                        c.direction = Direction::Forward;
                    }
                    ("wheel", "Reverse") => {
                        c.speed = arg(0);
                        c.direction = Direction::Backward;
                    }
                    ("wheel", "Stop") => c.speed = 0,
                    ("door", "Open") => c.door_open = true,
                    ("door", "Close") => c.door_open = false,
                    ("motor" | "light" | "switch", _) => {
                        if !recorded_method(call.object, call.method) {
                            return Err(DeviceFault::unsupported(call));
                        }
                        c.recorded.insert(call.object.to_string(), describe(call));
                    }
                    ("wheel" | "door", _) => return Err(DeviceFault::unsupported(call)),
                    _ => return Err(DeviceFault::unknown_device(call)),
                }
                Ok(())
            }
            Some(Role::Station) => {
                let si = self
                    .stations
                    .iter()
                    .position(|s| s.name == call.agent)
                    .expect("role table and stations agree");
                match (call.object, call.method) {
                    ("belt", "Load") => {
                        self.transfer(si, true);
                    }
                    ("belt", "Unload") => {
                        self.transfer(si, false);
                    }
                    ("door", "Open") => self.stations[si].door_open = true,
                    ("door", "Close") => self.stations[si].door_open = false,
                    ("light" | "switch", _) => {
                        if !recorded_method(call.object, call.method) {
                            return Err(DeviceFault::unsupported(call));
                        }
                        let d = describe(call);
                        self.stations[si].recorded.insert(call.object.to_string(), d);
                    }
                    ("belt" | "door", _) => return Err(DeviceFault::unsupported(call)),
                    _ => return Err(DeviceFault::unknown_device(call)),
                }
                Ok(())
            }
            Some(Role::Store) => {
                let s = self
                    .stores
                    .iter_mut()
                    .find(|s| s.name == call.agent)
                    .expect("role table and stores agree");
                match call.object {
                    "light" if recorded_method(call.object, call.method) => {
                        s.recorded.insert(call.object.to_string(), describe(call));
                        Ok(())
                    }
                    "light" => Err(DeviceFault::unsupported(call)),
                    _ => Err(DeviceFault::unknown_device(call)),
                }
            }
        }
    }

    /// Moves one unit between the station's store and the carrier waiting
    /// there. No-op unless both sides can take part.
    fn transfer(&mut self, station: usize, load: bool) {
        let section = self.stations[station].section;
        let (Some(ci), Some(si)) = (
            self.waiting_carrier(section),
            self.store_of_station(&self.stations[station].name.clone()),
        ) else {
            return;
        };
        let (carrier, store) = (&mut self.carriers[ci], &mut self.stores[si]);
        if load && store.count > 0 && !carrier.loaded {
            store.count -= 1;
            carrier.loaded = true;
        } else if !load && carrier.loaded {
            store.count += 1;
            carrier.loaded = false;
        }
    }

    /// Reads a sensor on behalf of `call.agent`. Never changes the world.
    pub fn read_sensor(&self, call: &DeviceCall<'_>) -> Result<Value, DeviceFault> {
        let arg = || call.args.first().map(|v| v.as_int()).unwrap_or(0);
        let compare = |actual: u32| -> Result<Value, DeviceFault> {
            Ok(match call.method {
                "Get" => Value::Int(actual),
                "EqualTo" => Value::Bool(actual == arg()),
                "LessThan" => Value::Bool(actual < arg()),
                "GreaterThan" => Value::Bool(actual > arg()),
                _ => return Err(DeviceFault::unsupported(call)),
            })
        };
        let button = |pressed: bool| -> Result<Value, DeviceFault> {
            match call.method {
                "IsPressed" => Ok(Value::Bool(pressed)),
                "IsReleased" => Ok(Value::Bool(!pressed)),
                _ => Err(DeviceFault::unsupported(call)),
            }
        };
        let store_count = |i: Option<usize>| -> Result<u32, DeviceFault> {
            i.map(|i| self.stores[i].count.min(100) as u32)
                .ok_or_else(|| DeviceFault::unknown_device(call))
        };
        match self.role(call.agent) {
            None => Err(DeviceFault::UnknownAgent(call.agent.to_string())),
            Some(Role::Carrier) => {
                let c = self.carrier(call.agent).expect("role table and carriers agree");
                let sign = self.sections[c.section].sign;
                match call.object {
                    "captor" => compare(sign),
                    "button" | "collision" => button(c.collided),
                    "lightsensor" => {
                        let colour = match call.method {
                            "IsRed" => 0,
                            "IsGreen" => 1,
                            "IsBlue" => 2,
                            _ => return Err(DeviceFault::unsupported(call)),
                        };
                        Ok(Value::Bool(sign % 3 == colour))
                    }
                    _ => Err(DeviceFault::unknown_device(call)),
                }
            }
            Some(Role::Station) => {
                let st = self.station(call.agent).expect("role table and stations agree");
                match call.object {
                    "presence" => button(st.presence),
                    "store" => compare(store_count(self.store_of_station(&st.name))?),
                    _ => Err(DeviceFault::unknown_device(call)),
                }
            }
            Some(Role::Store) => match call.object {
                "store" => compare(store_count(self.stores.iter().position(|s| s.name == call.agent))?),
                _ => Err(DeviceFault::unknown_device(call)),
            },
        }
    }
}

fn recorded_method(object: &str, method: &str) -> bool {
    matches!(
        (object, method),
        ("motor", "AbsoluteTurn" | "Turn" | "Stop")
            | ("light", "LightOn" | "LightOff")
            | ("switch", "SwitchOn" | "SwitchOff")
    )
}

fn describe(call: &DeviceCall<'_>) -> String {
    let args: Vec<String> = call.args.iter().map(|a| a.to_string()).collect();
    format!("{}({})", call.method, args.join(","))
}

impl Devices for WorldState {
    fn act(&mut self, call: &DeviceCall<'_>) -> Result<(), DeviceFault> {
        self.apply_action(call)
    }

    fn sense(&self, call: &DeviceCall<'_>) -> Result<Value, DeviceFault> {
        self.read_sensor(call)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DEMO: &str = include_str!("../../../../assets/demo-world.xml");

    fn call<'a>(agent: &'a str, object: &'a str, method: &'a str, args: &'a [Value]) -> DeviceCall<'a> {
        DeviceCall {
            tick: 0,
            agent,
            object,
            method,
            args,
        }
    }

    fn demo() -> WorldState {
        world_from_spec(DEMO).unwrap()
    }

    #[test]
    fn advance_sets_speed_and_direction() {
        let mut w = demo();
        w.apply_action(&call("c1", "wheel", "Reverse", &[Value::Int(20)]))
            .unwrap();
        w.apply_action(&call("c1", "wheel", "Advance", &[Value::Int(50)]))
            .unwrap();
        let c = w.carrier("c1").unwrap();
        assert_eq!((c.speed, c.direction), (50, Direction::Forward));
    }

    #[test]
    fn load_without_presence_is_a_noop() {
        let mut w = demo();
        let before = w.clone();
        w.apply_action(&call("L", "belt", "Load", &[])).unwrap();
        assert_eq!(w, before);
    }

    fn parked_at_loader() -> WorldState {
        let mut w = demo();
        w.carriers[0].section = 2;
        w.carriers[0].speed = 0;
        w.refresh();
        w
    }

    #[test]
    fn load_moves_one_unit() {
        let mut w = parked_at_loader();
        assert!(w.station("L").unwrap().presence);
        w.apply_action(&call("L", "belt", "Load", &[])).unwrap();
        assert_eq!(w.store("A").unwrap().count, 4);
        assert!(w.carrier("c1").unwrap().loaded);
        w.apply_action(&call("L", "belt", "Load", &[])).unwrap();
        assert_eq!(w.store("A").unwrap().count, 4);
        w.apply_action(&call("L", "belt", "Unload", &[])).unwrap();
        assert_eq!(w.store("A").unwrap().count, 5);
        assert!(!w.carrier("c1").unwrap().loaded);
    }

    #[test]
    fn captor_reads_the_section_sign() {
        let w = demo();
        let sign = w.sections[w.carrier("c1").unwrap().section].sign;
        let args = [Value::Int(sign)];
        assert_eq!(
            w.read_sensor(&call("c1", "captor", "EqualTo", &args)),
            Ok(Value::Bool(true))
        );
        assert_eq!(w.read_sensor(&call("c1", "captor", "Get", &[])), Ok(Value::Int(sign)));
    }

    #[test]
    fn sole_carrier_never_collides() {
        let w = world_from_spec(r#"<world sections="1"><carrier name="solo" section="0"/></world>"#).unwrap();
        assert_eq!(
            w.read_sensor(&call("solo", "collision", "IsPressed", &[])),
            Ok(Value::Bool(false))
        );
    }

    #[test]
    fn store_reads_are_clamped() {
        let mut w = demo();
        w.stores[0].count = 150;
        assert_eq!(w.read_sensor(&call("A", "store", "Get", &[])), Ok(Value::Int(100)));
        assert_eq!(w.read_sensor(&call("L", "store", "Get", &[])), Ok(Value::Int(100)));
        assert_eq!(w.stores[0].count, 150);
    }

    #[test]
    fn unknown_devices_fault() {
        let mut w = demo();
        assert!(matches!(
            w.apply_action(&call("c1", "belt", "Load", &[])),
            Err(DeviceFault::UnknownDevice { .. })
        ));
        assert!(matches!(
            w.read_sensor(&call("L", "captor", "Get", &[])),
            Err(DeviceFault::UnknownDevice { .. })
        ));
        assert!(matches!(
            w.read_sensor(&call("nobody", "captor", "Get", &[])),
            Err(DeviceFault::UnknownAgent(_))
        ));
    }

    #[test]
    fn physics_rates() {
        let mut w = demo();
        w.carriers[0].speed = 100;
        w.carriers[1].speed = 50;
        let (a, b) = (w.carriers[0].section, w.carriers[1].section);
        let mut seen = Vec::new();
        for _ in 0..4 {
            w.advance_physics();
            seen.push((w.carriers[0].section - a, w.carriers[1].section - b));
        }
        assert_eq!(seen, [(1, 0), (2, 1), (3, 1), (4, 2)]);
    }

    #[test]
    fn reverse_wraps_around() {
        let mut w = demo();
        w.carriers[0].speed = 25;
        w.carriers[0].direction = Direction::Backward;
        w.advance_physics();
        assert_eq!((w.carriers[0].section, w.carriers[0].sub), (7, 75));
    }

    #[test]
    fn presence_needs_a_stopped_carrier() {
        let mut w = parked_at_loader();
        w.carriers[0].speed = 10;
        w.refresh();
        assert!(!w.station("L").unwrap().presence);
    }
}
