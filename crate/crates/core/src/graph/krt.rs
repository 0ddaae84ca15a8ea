//! `.krt` program files.
//!
//! ```xml
//! <krt version="1">
//!   <program>
//!     <start id="start"/>
//!     <repeat id="v2" count="3">
//!       <body>
//!         <action id="v3" object="wheel" method="Advance"><arg int="50"/></action>
//!       </body>
//!     </repeat>
//!     <stop id="stop"/>
//!   </program>
//! </krt>
//! ```
//!
//! Conditions are `<cond>` elements holding one of `<call>`, `<not>`,
//! `<and>`, `<or>` or `<int>`. An `<arg>` carries either `int="…"` or a
//! nested `<cond>`. Every vertex element accepts optional `x`/`y`.

use std::collections::{BTreeMap, HashSet};

use roxmltree::Node;
use thiserror::Error;

use crate::diag::{DiagCode, Diagnostic};
use crate::lll::{Call, Expr};
use crate::xml::{self, schema_error, XmlError, XmlWriter};

use super::{ProgramGraph, Vertex, VertexId, VertexKind};

pub const KRT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KrtError {
    #[error("{0}")]
    Xml(#[from] XmlError),
    #[error("unsupported krt format version {found} (this build reads version {KRT_VERSION})")]
    Version { found: u32 },
    #[error("invalid program graph: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invariant(Vec<Diagnostic>),
}

/// Serializes a structurally valid graph. Output is byte-identical for
/// equal graphs.
pub fn save_krt(graph: &ProgramGraph) -> Result<String, Vec<Diagnostic>> {
    let diags = graph.structure_diagnostics();
    if !diags.is_empty() {
        return Err(diags);
    }
    let mut w = XmlWriter::new();
    w.start("krt", &[("version", graph.format_version.to_string())]);
    w.start("program", &[]);
    for id in &graph.top {
        write_vertex(graph, id, &mut w);
    }
    w.end("program");
    w.end("krt");
    Ok(w.finish())
}

fn write_vertex(graph: &ProgramGraph, id: &VertexId, w: &mut XmlWriter) {
    let v = &graph.vertices[id];
    let mut attrs = vec![("id", v.id.0.clone())];
    let (tag, slot_tags): (&str, &[&str]) = match &v.kind {
        VertexKind::Start => ("start", &[]),
        VertexKind::Stop => ("stop", &[]),
        VertexKind::Action { call, interrupt } => {
            attrs.push(("object", call.object.clone()));
            attrs.push(("method", call.method.clone()));
            if *interrupt {
                attrs.push(("interrupt", "true".to_string()));
            }
            ("action", &[])
        }
        VertexKind::Repetition { count } => {
            attrs.push(("count", count.to_string()));
            ("repeat", &["body"])
        }
        VertexKind::While { .. } => ("while", &["body"]),
        VertexKind::IfThen { .. } => ("if", &["then"]),
        VertexKind::IfThenElse { .. } => ("ifelse", &["then", "else"]),
        VertexKind::Wait { ticks } => {
            attrs.push(("ticks", ticks.to_string()));
            ("wait", &[])
        }
        VertexKind::Break => ("break", &[]),
        VertexKind::Parallel => ("parallel", &[]),
        VertexKind::Event { .. } => ("event", &["body"]),
    };
    if let Some((x, y)) = v.position {
        attrs.push(("x", x.to_string()));
        attrs.push(("y", y.to_string()));
    }

    let cond = match &v.kind {
        VertexKind::While { cond }
        | VertexKind::IfThen { cond }
        | VertexKind::IfThenElse { cond }
        | VertexKind::Event { cond } => Some(cond),
        _ => None,
    };
    let args = match &v.kind {
        VertexKind::Action { call, .. } => call.args.as_slice(),
        _ => &[],
    };
    if cond.is_none() && args.is_empty() && v.slots.is_empty() {
        w.empty(tag, &attrs);
        return;
    }
    w.start(tag, &attrs);
    write_args(args, w);
    if let Some(cond) = cond {
        write_cond(cond, w);
    }
    for (i, slot) in v.slots.iter().enumerate() {
        let slot_tag = if v.kind == VertexKind::Parallel {
            "branch"
        } else {
            slot_tags[i]
        };
        if slot.is_empty() {
            w.empty(slot_tag, &[]);
            continue;
        }
        w.start(slot_tag, &[]);
        for child in slot {
            write_vertex(graph, child, w);
        }
        w.end(slot_tag);
    }
    w.end(tag);
}

fn write_args(args: &[Expr], w: &mut XmlWriter) {
    for arg in args {
        match arg {
            Expr::Int(v, _) => w.empty("arg", &[("int", v.to_string())]),
            other => {
                w.start("arg", &[]);
                write_cond(other, w);
                w.end("arg");
            }
        }
    }
}

fn write_cond(expr: &Expr, w: &mut XmlWriter) {
    w.start("cond", &[]);
    write_expr(expr, w);
    w.end("cond");
}

fn write_expr(expr: &Expr, w: &mut XmlWriter) {
    match expr {
        Expr::Int(v, _) => w.empty("int", &[("value", v.to_string())]),
        Expr::Call(call) => {
            let attrs = [("object", call.object.clone()), ("method", call.method.clone())];
            if call.args.is_empty() {
                w.empty("call", &attrs);
            } else {
                w.start("call", &attrs);
                write_args(&call.args, w);
                w.end("call");
            }
        }
        Expr::Not(inner) => {
            w.start("not", &[]);
            write_expr(inner, w);
            w.end("not");
        }
        Expr::And(l, r) | Expr::Or(l, r) => {
            let tag = if matches!(expr, Expr::And(..)) { "and" } else { "or" };
            w.start(tag, &[]);
            write_expr(l, w);
            write_expr(r, w);
            w.end(tag);
        }
    }
}

pub fn load_krt(text: &str) -> Result<ProgramGraph, KrtError> {
    let doc = xml::parse(text)?;
    let root = xml::expect_root(&doc, "krt")?;
    xml::check_attrs(root, &["version"])?;
    let version: u32 = xml::req_parsed(root, "version")?;
    if version != KRT_VERSION {
        return Err(KrtError::Version { found: version });
    }
    let children = xml::children(root)?;
    let program = match children.as_slice() {
        [p] if p.tag_name().name() == "program" => *p,
        _ => return Err(schema_error(root, "<krt> must contain exactly one <program>").into()),
    };
    xml::check_attrs(program, &[])?;

    let mut explicit = HashSet::new();
    for node in program.descendants().filter(|n| n.is_element()) {
        if let Some(id) = node.attribute("id") {
            explicit.insert(id.to_string());
        }
    }
    let mut reader = Reader {
        vertices: BTreeMap::new(),
        explicit,
        next_auto: 0,
        duplicates: Vec::new(),
    };
    let top = reader.sequence(program)?;
    let graph = ProgramGraph {
        vertices: reader.vertices,
        top,
        format_version: version,
    };
    let mut diags = reader.duplicates;
    diags.extend(graph.structure_diagnostics());
    if !diags.is_empty() {
        return Err(KrtError::Invariant(diags));
    }
    Ok(graph)
}

struct Reader {
    vertices: BTreeMap<VertexId, Vertex>,
    explicit: HashSet<String>,
    next_auto: usize,
    duplicates: Vec<Diagnostic>,
}

impl Reader {
    fn auto_id(&mut self) -> VertexId {
        loop {
            let candidate = format!("v{}", self.next_auto);
            self.next_auto += 1;
            if !self.explicit.contains(&candidate) {
                return VertexId(candidate);
            }
        }
    }

    fn sequence(&mut self, parent: Node<'_, '_>) -> Result<Vec<VertexId>, XmlError> {
        xml::children(parent)?.into_iter().map(|n| self.vertex(n)).collect()
    }

    fn vertex(&mut self, node: Node<'_, '_>) -> Result<VertexId, XmlError> {
        let tag = node.tag_name().name();
        let (extra, slot_tags): (&[&str], &[&str]) = match tag {
            "start" | "stop" | "break" | "parallel" => (&[], &[]),
            "action" => (&["object", "method", "interrupt"], &[]),
            "repeat" => (&["count"], &["body"]),
            "wait" => (&["ticks"], &[]),
            "while" | "event" => (&[], &["body"]),
            "if" => (&[], &["then"]),
            "ifelse" => (&[], &["then", "else"]),
            other => return Err(schema_error(node, format!("unknown element <{other}>"))),
        };
        let mut allowed = vec!["id", "x", "y"];
        allowed.extend_from_slice(extra);
        xml::check_attrs(node, &allowed)?;

        let id = match node.attribute("id") {
            Some("") => return Err(schema_error(node, "empty vertex id")),
            Some(raw) => VertexId::new(raw),
            None => self.auto_id(),
        };
        let position = match (xml::parse_attr::<i64>(node, "x")?, xml::parse_attr::<i64>(node, "y")?) {
            (Some(x), Some(y)) => Some((x, y)),
            (None, None) => None,
            _ => return Err(schema_error(node, "x and y must be given together")),
        };

        let children = xml::children(node)?;
        let takes_cond = matches!(tag, "while" | "event" | "if" | "ifelse");
        let mut rest = children.as_slice();
        let mut cond = None;
        let mut args = Vec::new();
        if takes_cond {
            match rest.first() {
                Some(c) if c.tag_name().name() == "cond" => {
                    cond = Some(read_cond(*c)?);
                    rest = &rest[1..];
                }
                _ => return Err(schema_error(node, format!("<{tag}> needs a <cond>"))),
            }
        }
        if tag == "action" {
            for child in rest {
                if child.tag_name().name() != "arg" {
                    return Err(schema_error(
                        *child,
                        format!("unexpected <{}> in <action>", child.tag_name().name()),
                    ));
                }
                args.push(read_arg(*child)?);
            }
            rest = &[];
        }

        let mut slots = Vec::new();
        if tag == "parallel" {
            for child in rest {
                if child.tag_name().name() != "branch" {
                    return Err(schema_error(
                        *child,
                        format!("unexpected <{}> in <parallel>", child.tag_name().name()),
                    ));
                }
                xml::check_attrs(*child, &[])?;
                slots.push(self.sequence(*child)?);
            }
        } else {
            if rest.len() != slot_tags.len() {
                return Err(schema_error(node, format!("<{tag}> expects slots {slot_tags:?}")));
            }
            for (child, want) in rest.iter().zip(slot_tags) {
                if child.tag_name().name() != *want {
                    return Err(schema_error(
                        *child,
                        format!("expected <{want}>, found <{}>", child.tag_name().name()),
                    ));
                }
                xml::check_attrs(*child, &[])?;
                slots.push(self.sequence(*child)?);
            }
        }

        let kind = match tag {
            "start" => VertexKind::Start,
            "stop" => VertexKind::Stop,
            "break" => VertexKind::Break,
            "parallel" => VertexKind::Parallel,
            "action" => VertexKind::Action {
                call: Call::new(xml::ident_attr(node, "object")?, xml::ident_attr(node, "method")?, args),
                interrupt: xml::parse_bool(node, "interrupt")?.unwrap_or(false),
            },
            "repeat" => VertexKind::Repetition {
                count: xml::req_parsed(node, "count")?,
            },
            "wait" => VertexKind::Wait {
                ticks: xml::req_parsed(node, "ticks")?,
            },
            "while" => VertexKind::While {
                cond: cond.expect("read above"),
            },
            "event" => VertexKind::Event {
                cond: cond.expect("read above"),
            },
            "if" => VertexKind::IfThen {
                cond: cond.expect("read above"),
            },
            _ => VertexKind::IfThenElse {
                cond: cond.expect("read above"),
            },
        };

        if self.vertices.contains_key(&id) {
            self.duplicates
                .push(Diagnostic::new(DiagCode::OwnedTwice, "vertex owned twice").on_vertex(id.as_str()));
        } else {
            self.vertices.insert(
                id.clone(),
                Vertex {
                    id: id.clone(),
                    kind,
                    slots,
                    position,
                },
            );
        }
        Ok(id)
    }
}

fn read_cond(node: Node<'_, '_>) -> Result<Expr, XmlError> {
    xml::check_attrs(node, &[])?;
    match xml::children(node)?.as_slice() {
        [inner] => read_expr(*inner),
        _ => Err(schema_error(node, "<cond> must hold exactly one expression")),
    }
}

fn read_arg(node: Node<'_, '_>) -> Result<Expr, XmlError> {
    xml::check_attrs(node, &["int"])?;
    let children = xml::children(node)?;
    match (xml::parse_attr::<u32>(node, "int")?, children.as_slice()) {
        (Some(v), []) => Ok(Expr::int(v)),
        (None, [c]) if c.tag_name().name() == "cond" => read_cond(*c),
        _ => Err(schema_error(node, "<arg> must carry either int=\"…\" or one <cond>")),
    }
}

fn read_expr(node: Node<'_, '_>) -> Result<Expr, XmlError> {
    let tag = node.tag_name().name();
    let children = xml::children(node)?;
    match tag {
        "int" => {
            xml::check_attrs(node, &["value"])?;
            if !children.is_empty() {
                return Err(schema_error(node, "<int> takes no children"));
            }
            Ok(Expr::int(xml::req_parsed(node, "value")?))
        }
        "call" => {
            xml::check_attrs(node, &["object", "method"])?;
            let args = children
                .iter()
                .map(|c| {
                    if c.tag_name().name() == "arg" {
                        read_arg(*c)
                    } else {
                        Err(schema_error(*c, "<call> may only contain <arg>"))
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Expr::call(
                xml::ident_attr(node, "object")?,
                xml::ident_attr(node, "method")?,
                args,
            ))
        }
        "not" => {
            xml::check_attrs(node, &[])?;
            match children.as_slice() {
                [inner] => Ok(Expr::not(read_expr(*inner)?)),
                _ => Err(schema_error(node, "<not> takes exactly one operand")),
            }
        }
        "and" | "or" => {
            xml::check_attrs(node, &[])?;
            match children.as_slice() {
                [l, r] => {
                    let (l, r) = (read_expr(*l)?, read_expr(*r)?);
                    Ok(if tag == "and" { Expr::and(l, r) } else { Expr::or(l, r) })
                }
                _ => Err(schema_error(node, format!("<{tag}> takes exactly two operands"))),
            }
        }
        other => Err(schema_error(node, format!("unknown expression element <{other}>"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wait5() -> ProgramGraph {
        let mut g = ProgramGraph::new();
        g.append(VertexKind::Wait { ticks: 5 }).unwrap();
        g
    }

    #[test]
    fn wait_graph_document() {
        let text = save_krt(&wait5()).unwrap();
        let doc = roxmltree::Document::parse(&text).unwrap();
        let waits: Vec<_> = doc.descendants().filter(|n| n.has_tag_name("wait")).collect();
        assert_eq!(waits.len(), 1);
        assert_eq!(waits[0].attribute("ticks"), Some("5"));
        assert_eq!(load_krt(&text).unwrap(), wait5());
    }

    #[test]
    fn missing_start_is_refused() {
        let mut g = wait5();
        g.vertices.remove(&VertexId::new("start"));
        g.top.remove(0);
        let diags = save_krt(&g).unwrap_err();
        assert!(diags.iter().any(|d| d.code == DiagCode::MissingStart));
    }

    #[test]
    fn unknown_version() {
        let err = load_krt(r#"<krt version="99"><program><start/><stop/></program></krt>"#).unwrap_err();
        assert_eq!(err, KrtError::Version { found: 99 });
    }

    #[test]
    fn vertex_owned_twice() {
        let err = load_krt(
            r#"<krt version="1"><program>
                 <start/>
                 <repeat count="2"><body><wait id="w" ticks="1"/></body></repeat>
                 <repeat count="2"><body><wait id="w" ticks="1"/></body></repeat>
                 <stop/>
               </program></krt>"#,
        )
        .unwrap_err();
        match err {
            KrtError::Invariant(d) => assert_eq!(d[0].message, "vertex owned twice"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ids_are_optional() {
        let g = load_krt(
            r#"<krt version="1"><program>
                 <start/>
                 <repeat id="v0" count="3"><body>
                   <action object="wheel" method="Advance"><arg int="50"/></action>
                 </body></repeat>
                 <stop/>
               </program></krt>"#,
        )
        .unwrap();
        let ids: Vec<_> = g.vertices.keys().map(|k| k.as_str()).collect();
        assert_eq!(ids, ["v0", "v1", "v2", "v3"]);
    }

    #[test]
    fn conditions_and_geometry_round_trip() {
        let mut g = ProgramGraph::new();
        let cond = Expr::or(
            Expr::not(Expr::call("captor", "EqualTo", vec![Expr::int(7)])),
            Expr::and(
                Expr::call("flag", "IsTrue", vec![]),
                Expr::call("button", "IsPressed", vec![]),
            ),
        );
        let w = g.append(VertexKind::IfThenElse { cond }).unwrap();
        g.append_to(
            &w,
            1,
            VertexKind::Action {
                call: Call::new(
                    "motor",
                    "AbsoluteTurn",
                    vec![Expr::int(3), Expr::call("count", "Get", vec![])],
                ),
                interrupt: false,
            },
        )
        .unwrap();
        g.set_position(&w, -40, 120).unwrap();
        let text = save_krt(&g).unwrap();
        assert_eq!(load_krt(&text).unwrap(), g);
        assert_eq!(save_krt(&load_krt(&text).unwrap()).unwrap(), text);
    }

    #[test]
    fn schema_errors() {
        for doc in [
            r#"<krt version="1"><program><start/><jump/><stop/></program></krt>"#,
            r#"<krt version="1"><program><start/><while><body/></while><stop/></program></krt>"#,
            r#"<krt version="1"><program><start/><wait/><stop/></program></krt>"#,
            r#"<krt version="1"><program><start/><action object="a" method="b"><arg/></action><stop/></program></krt>"#,
            r#"<krt><program/></krt>"#,
        ] {
            assert!(matches!(load_krt(doc), Err(KrtError::Xml(_))), "{doc}");
        }
        assert!(matches!(
            load_krt("not xml"),
            Err(KrtError::Xml(XmlError::Malformed { .. }))
        ));
    }
}
