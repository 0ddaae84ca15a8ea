//! World description files.
//!
//! ```xml
//! <world sections="8">
//!   <section index="0" sign="10"/>
//!   <carrier name="c1" section="0" loaded="false" direction="forward"/>
//!   <station name="L" role="loader" section="2"/>
//!   <store name="A" station="L" count="5"/>
//!   <bind agent="c1" objects="carrier.xml"/>
//! </world>
//! ```
//!
//! Sections are either all listed or all omitted; omitted sections get
//! sign = index.

use std::collections::{BTreeMap, HashSet};

use thiserror::Error;

use crate::xml::{self, schema_error, XmlError};

use super::{Carrier, Direction, Role, Section, Station, StationRole, Store, WorldState};

/// Robot-object catalog for an agent, as a path relative to the world file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bind {
    pub agent: String,
    pub objects: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorldError {
    #[error("{0}")]
    Xml(#[from] XmlError),
    #[error("invalid world: {0}")]
    Invalid(String),
}

fn invalid(message: impl Into<String>) -> WorldError {
    WorldError::Invalid(message.into())
}

pub fn world_from_spec(text: &str) -> Result<WorldState, WorldError> {
    let doc = xml::parse(text)?;
    let root = xml::expect_root(&doc, "world")?;
    xml::check_attrs(root, &["sections"])?;
    let count: usize = xml::req_parsed(root, "sections")?;
    if count == 0 {
        return Err(schema_error(root, "a world needs at least one section").into());
    }

    let mut sections: BTreeMap<usize, u32> = BTreeMap::new();
    let mut carriers = Vec::new();
    let mut stations = Vec::new();
    let mut stores = Vec::new();
    let mut binds = Vec::new();
    let mut agents = Vec::new();
    let mut names = HashSet::new();

    for node in xml::children(root)? {
        let section_attr = |node| -> Result<usize, XmlError> {
            let s: usize = xml::req_parsed(node, "section")?;
            if s >= count {
                return Err(schema_error(
                    node,
                    format!("section {s} is outside the ring of {count}"),
                ));
            }
            Ok(s)
        };
        match node.tag_name().name() {
            "section" => {
                xml::check_attrs(node, &["index", "sign"])?;
                let index: usize = xml::req_parsed(node, "index")?;
                let sign: u32 = xml::req_parsed(node, "sign")?;
                if index >= count {
                    return Err(schema_error(node, format!("section index {index} out of range")).into());
                }
                if sign > 100 {
                    return Err(schema_error(node, "sign must be between 0 and 100").into());
                }
                if sections.insert(index, sign).is_some() {
                    return Err(schema_error(node, format!("duplicate section {index}")).into());
                }
            }
            "carrier" | "station" | "store" => {
                let tag = node.tag_name().name();
                let name = xml::ident_attr(node, "name")?;
                if !names.insert(name.to_string()) {
                    return Err(schema_error(node, format!("duplicate agent name: {name}")).into());
                }
                match tag {
                    "carrier" => {
                        xml::check_attrs(node, &["name", "section", "loaded", "direction"])?;
                        let direction = match node.attribute("direction") {
                            None | Some("forward") => Direction::Forward,
                            Some("backward") => Direction::Backward,
                            Some(other) => return Err(schema_error(node, format!("unknown direction: {other}")).into()),
                        };
                        carriers.push(Carrier {
                            name: name.to_string(),
                            section: section_attr(node)?,
                            sub: 0,
                            direction,
                            speed: 0,
                            loaded: xml::parse_bool(node, "loaded")?.unwrap_or(false),
                            collided: false,
                            door_open: false,
                            recorded: BTreeMap::new(),
                        });
                        agents.push((name.to_string(), Role::Carrier));
                    }
                    "station" => {
                        xml::check_attrs(node, &["name", "role", "section"])?;
                        let role = match xml::req_attr(node, "role")? {
                            "loader" => StationRole::Loader,
                            "unloader" => StationRole::Unloader,
                            other => return Err(schema_error(node, format!("unknown station role: {other}")).into()),
                        };
                        stations.push(Station {
                            name: name.to_string(),
                            role,
                            section: section_attr(node)?,
                            door_open: false,
                            presence: false,
                            recorded: BTreeMap::new(),
                        });
                        agents.push((name.to_string(), Role::Station));
                    }
                    _ => {
                        xml::check_attrs(node, &["name", "station", "count"])?;
                        stores.push(Store {
                            name: name.to_string(),
                            count: xml::parse_attr(node, "count")?.unwrap_or(0),
                            station: node.attribute("station").map(str::to_string),
                            recorded: BTreeMap::new(),
                        });
                        agents.push((name.to_string(), Role::Store));
                    }
                }
            }
            "bind" => {
                xml::check_attrs(node, &["agent", "objects"])?;
                binds.push(Bind {
                    agent: xml::ident_attr(node, "agent")?.to_string(),
                    objects: xml::req_attr(node, "objects")?.to_string(),
                });
            }
            other => return Err(schema_error(node, format!("unknown element <{other}>")).into()),
        }
    }

    let sections: Vec<Section> = if sections.is_empty() {
        (0..count)
            .map(|index| Section {
                index,
                sign: (index % 101) as u32,
            })
            .collect()
    } else if sections.len() == count {
        sections
            .into_iter()
            .map(|(index, sign)| Section { index, sign })
            .collect()
    } else {
        return Err(invalid(format!(
            "{} of {count} sections listed; list all or none",
            sections.len()
        )));
    };

    let mut attached = HashSet::new();
    for s in &stores {
        if let Some(st) = &s.station {
            if !stations.iter().any(|x| &x.name == st) {
                return Err(invalid(format!("store {} names unknown station {st}", s.name)));
            }
            if !attached.insert(st.clone()) {
                return Err(invalid(format!("station {st} has more than one store")));
            }
        }
    }
    let mut bound = HashSet::new();
    for b in &binds {
        if !names.contains(&b.agent) {
            return Err(invalid(format!("bind names unknown agent {}", b.agent)));
        }
        if !bound.insert(b.agent.clone()) {
            return Err(invalid(format!("agent {} is bound twice", b.agent)));
        }
    }
    for (i, a) in carriers.iter().enumerate() {
        if let Some(b) = carriers[i + 1..].iter().find(|b| b.section == a.section) {
            return Err(invalid(format!(
                "carriers {} and {} start on section {} (collided)",
                a.name, b.name, a.section
            )));
        }
    }

    let mut world = WorldState {
        sections,
        carriers,
        stations,
        stores,
        tick: 0,
        agents,
        binds,
    };
    world.refresh();
    Ok(world)
}
