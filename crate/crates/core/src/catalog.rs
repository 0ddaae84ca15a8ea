//! Constructor and robot-object catalogs.
//!
//! Both catalogs are loaded from XML. The robot-object catalog is the type
//! authority for every `object.method(args)` call a program can make.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use roxmltree::Node;
use serde::Serialize;
use thiserror::Error;

use crate::xml::{self, schema_error, XmlError, XmlWriter};

/// Default bounds for integer parameters.
pub const INT_MIN: u32 = 0;
pub const INT_MAX: u32 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParamKind {
    Int,
    BoolExpr,
}

impl fmt::Display for ParamKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParamKind::Int => "int",
            ParamKind::BoolExpr => "bool-expr",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Range {
    pub min: u32,
    pub max: u32,
}

impl Range {
    pub const DEFAULT: Range = Range {
        min: INT_MIN,
        max: INT_MAX,
    };

    pub fn contains(&self, v: u32) -> bool {
        (self.min..=self.max).contains(&v)
    }

    pub fn clamp(&self, v: u32) -> u32 {
        v.clamp(self.min, self.max)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParamSpec {
    pub name: String,
    pub kind: ParamKind,
    /// Present iff `kind` is `Int`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub range: Option<Range>,
}

impl ParamSpec {
    pub fn int(name: &str) -> Self {
        ParamSpec {
            name: name.to_string(),
            kind: ParamKind::Int,
            range: Some(Range::DEFAULT),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ReturnType {
    Void,
    Int,
    Bool,
}

impl FromStr for ReturnType {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "void" => Ok(ReturnType::Void),
            "int" => Ok(ReturnType::Int),
            "bool" => Ok(ReturnType::Bool),
            _ => Err(()),
        }
    }
}

impl fmt::Display for ReturnType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReturnType::Void => "void",
            ReturnType::Int => "int",
            ReturnType::Bool => "bool",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MethodSpec {
    pub name: String,
    pub params: Vec<ParamSpec>,
    pub returns: ReturnType,
    pub pure: bool,
}

impl MethodSpec {
    fn synthesized(name: &str, params: Vec<ParamSpec>, returns: ReturnType) -> Self {
        MethodSpec {
            name: name.to_string(),
            params,
            returns,
            pure: returns != ReturnType::Void,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectKind {
    Actuator,
    Sensor,
    Variable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VarType {
    Integer,
    Boolean,
}

impl VarType {
    /// The fixed method surface every variable of this type exposes.
    pub fn methods(self) -> Vec<MethodSpec> {
        match self {
            VarType::Integer => vec![
                MethodSpec::synthesized("Set", vec![ParamSpec::int("value")], ReturnType::Void),
                MethodSpec::synthesized("Get", vec![], ReturnType::Int),
            ],
            VarType::Boolean => vec![
                MethodSpec::synthesized("SetTrue", vec![], ReturnType::Void),
                MethodSpec::synthesized("SetFalse", vec![], ReturnType::Void),
                MethodSpec::synthesized("IsTrue", vec![], ReturnType::Bool),
                MethodSpec::synthesized("IsFalse", vec![], ReturnType::Bool),
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ObjectSpec {
    pub name: String,
    pub kind: ObjectKind,
    #[serde(rename = "vartype", skip_serializing_if = "Option::is_none")]
    pub var_type: Option<VarType>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub methods: Vec<MethodSpec>,
}

impl ObjectSpec {
    pub fn method(&self, name: &str) -> Option<&MethodSpec> {
        self.methods.iter().find(|m| m.name == name)
    }

    pub fn display_label(&self) -> &str {
        self.label.as_deref().unwrap_or(&self.name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ConstructorKind {
    Repetition,
    While,
    IfThen,
    IfThenElse,
    Wait,
    Break,
    And,
    Or,
    Not,
    Parallelism,
    Branch,
    Interrupt,
}

impl ConstructorKind {
    pub const ALL: [ConstructorKind; 12] = [
        ConstructorKind::Repetition,
        ConstructorKind::While,
        ConstructorKind::IfThen,
        ConstructorKind::IfThenElse,
        ConstructorKind::Wait,
        ConstructorKind::Break,
        ConstructorKind::And,
        ConstructorKind::Or,
        ConstructorKind::Not,
        ConstructorKind::Parallelism,
        ConstructorKind::Branch,
        ConstructorKind::Interrupt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ConstructorKind::Repetition => "Repetition",
            ConstructorKind::While => "While",
            ConstructorKind::IfThen => "IfThen",
            ConstructorKind::IfThenElse => "IfThenElse",
            ConstructorKind::Wait => "Wait",
            ConstructorKind::Break => "Break",
            ConstructorKind::And => "And",
            ConstructorKind::Or => "Or",
            ConstructorKind::Not => "Not",
            ConstructorKind::Parallelism => "Parallelism",
            ConstructorKind::Branch => "Branch",
            ConstructorKind::Interrupt => "Interrupt",
        }
    }

    /// Nested instruction sequences a freshly placed block of this kind has.
    /// A parallel block starts with two branches; `Branch` adds more.
    pub fn body_slots(self) -> usize {
        match self {
            ConstructorKind::Repetition | ConstructorKind::While | ConstructorKind::IfThen => 1,
            ConstructorKind::IfThenElse | ConstructorKind::Parallelism => 2,
            _ => 0,
        }
    }

    pub fn takes_count(self) -> bool {
        matches!(self, ConstructorKind::Repetition | ConstructorKind::Wait)
    }

    pub fn takes_cond(self) -> bool {
        matches!(
            self,
            ConstructorKind::While | ConstructorKind::IfThen | ConstructorKind::IfThenElse
        )
    }

    fn default_label(self) -> &'static str {
        match self {
            ConstructorKind::Repetition => "Repetition",
            ConstructorKind::While => "While",
            ConstructorKind::IfThen => "If Then",
            ConstructorKind::IfThenElse => "If Then Else",
            ConstructorKind::Wait => "Wait",
            ConstructorKind::Break => "Break",
            ConstructorKind::And => "And",
            ConstructorKind::Or => "Or",
            ConstructorKind::Not => "No",
            ConstructorKind::Parallelism => "Parallelism",
            ConstructorKind::Branch => "Branch",
            ConstructorKind::Interrupt => "Interrupt",
        }
    }
}

impl FromStr for ConstructorKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        ConstructorKind::ALL.into_iter().find(|k| k.name() == s).ok_or(())
    }
}

impl fmt::Display for ConstructorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConstructorSpec {
    pub kind: ConstructorKind,
    pub label: String,
    pub body_slots: usize,
    pub takes_count: bool,
    pub takes_cond: bool,
}

impl ConstructorSpec {
    pub fn new(kind: ConstructorKind, label: Option<&str>) -> Self {
        ConstructorSpec {
            kind,
            label: label.unwrap_or(kind.default_label()).to_string(),
            body_slots: kind.body_slots(),
            takes_count: kind.takes_count(),
            takes_cond: kind.takes_cond(),
        }
    }

    /// The twelve standard constructors with their default labels.
    pub fn standard() -> Vec<ConstructorSpec> {
        ConstructorKind::ALL
            .into_iter()
            .map(|k| ConstructorSpec::new(k, None))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResolveError {
    #[error("unknown object: {object}")]
    UnknownObject { object: String },
    #[error("unknown method: {object}.{method}")]
    UnknownMethod { object: String, method: String },
    #[error("{object}.{method} expects {expected} argument(s), got {got}")]
    ArityMismatch {
        object: String,
        method: String,
        expected: usize,
        got: usize,
    },
    #[error("argument {} of {object}.{method} must be {expected}, got {got}", index + 1)]
    KindMismatch {
        object: String,
        method: String,
        index: usize,
        expected: ParamKind,
        got: ParamKind,
    },
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}:{source}", path.display())]
    Xml { path: PathBuf, source: XmlError },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Catalog {
    pub robot: String,
    pub constructors: Vec<ConstructorSpec>,
    pub objects: Vec<ObjectSpec>,
    #[serde(skip)]
    pub sources: Vec<PathBuf>,
}

impl Catalog {
    pub fn new(robot: &str, constructors: Vec<ConstructorSpec>, objects: Vec<ObjectSpec>) -> Self {
        Catalog {
            robot: robot.to_string(),
            constructors,
            objects,
            sources: Vec::new(),
        }
    }

    /// Builds a catalog from in-memory documents. Without a constructors
    /// document the standard twelve are used.
    pub fn from_xml(constructors: Option<&str>, robot_objects: &str) -> Result<Catalog, XmlError> {
        let constructors = match constructors {
            Some(text) => load_constructors(text)?,
            None => ConstructorSpec::standard(),
        };
        let (robot, objects) = load_robot(robot_objects)?;
        Ok(Catalog::new(&robot, constructors, objects))
    }

    pub fn load_files(constructors: Option<&Path>, robot_objects: &Path) -> Result<Catalog, CatalogError> {
        let read = |path: &Path| {
            std::fs::read_to_string(path).map_err(|source| CatalogError::Io {
                path: path.to_path_buf(),
                source,
            })
        };
        let mut sources = Vec::new();
        let constructor_specs = match constructors {
            Some(path) => {
                sources.push(path.to_path_buf());
                load_constructors(&read(path)?).map_err(|source| CatalogError::Xml {
                    path: path.to_path_buf(),
                    source,
                })?
            }
            None => ConstructorSpec::standard(),
        };
        sources.push(robot_objects.to_path_buf());
        let (robot, objects) = load_robot(&read(robot_objects)?).map_err(|source| CatalogError::Xml {
            path: robot_objects.to_path_buf(),
            source,
        })?;
        let mut catalog = Catalog::new(&robot, constructor_specs, objects);
        catalog.sources = sources;
        Ok(catalog)
    }

    pub fn object(&self, name: &str) -> Option<&ObjectSpec> {
        self.objects.iter().find(|o| o.name == name)
    }

    /// Finds the method `object.method` and checks the argument kinds
    /// against its parameters.
    pub fn resolve_call(
        &self,
        object: &str,
        method: &str,
        arg_kinds: &[ParamKind],
    ) -> Result<&MethodSpec, ResolveError> {
        let obj = self.object(object).ok_or_else(|| ResolveError::UnknownObject {
            object: object.to_string(),
        })?;
        let spec = obj.method(method).ok_or_else(|| ResolveError::UnknownMethod {
            object: object.to_string(),
            method: method.to_string(),
        })?;
        if spec.params.len() != arg_kinds.len() {
            return Err(ResolveError::ArityMismatch {
                object: object.to_string(),
                method: method.to_string(),
                expected: spec.params.len(),
                got: arg_kinds.len(),
            });
        }
        for (index, (param, &got)) in spec.params.iter().zip(arg_kinds).enumerate() {
            if param.kind != got {
                return Err(ResolveError::KindMismatch {
                    object: object.to_string(),
                    method: method.to_string(),
                    index,
                    expected: param.kind,
                    got,
                });
            }
        }
        Ok(spec)
    }

    pub fn constructors_xml(&self) -> String {
        let mut w = XmlWriter::new();
        if self.constructors.is_empty() {
            w.empty("constructors", &[]);
            return w.finish();
        }
        w.start("constructors", &[]);
        for c in &self.constructors {
            w.empty(
                "constructor",
                &[("kind", c.kind.name().to_string()), ("label", c.label.clone())],
            );
        }
        w.end("constructors");
        w.finish()
    }

    pub fn robot_objects_xml(&self) -> String {
        let mut w = XmlWriter::new();
        w.start("robot", &[("name", self.robot.clone())]);
        for obj in &self.objects {
            let mut attrs = vec![("name", obj.name.clone())];
            attrs.push((
                "kind",
                match obj.kind {
                    ObjectKind::Actuator => "actuator",
                    ObjectKind::Sensor => "sensor",
                    ObjectKind::Variable => "variable",
                }
                .to_string(),
            ));
            if let Some(vt) = obj.var_type {
                attrs.push((
                    "vartype",
                    match vt {
                        VarType::Integer => "integer",
                        VarType::Boolean => "boolean",
                    }
                    .to_string(),
                ));
            }
            if let Some(label) = &obj.label {
                attrs.push(("label", label.clone()));
            }
            if obj.kind == ObjectKind::Variable || obj.methods.is_empty() {
                w.empty("object", &attrs);
                continue;
            }
            w.start("object", &attrs);
            for m in &obj.methods {
                let attrs = [
                    ("name", m.name.clone()),
                    ("returns", m.returns.to_string()),
                    ("pure", m.pure.to_string()),
                ];
                if m.params.is_empty() {
                    w.empty("method", &attrs);
                    continue;
                }
                w.start("method", &attrs);
                for p in &m.params {
                    match (p.kind, p.range) {
                        (ParamKind::Int, Some(r)) => w.empty(
                            "param",
                            &[
                                ("name", p.name.clone()),
                                ("type", "int".to_string()),
                                ("min", r.min.to_string()),
                                ("max", r.max.to_string()),
                            ],
                        ),
                        _ => w.empty("param", &[("name", p.name.clone()), ("type", "bool".to_string())]),
                    }
                }
                w.end("method");
            }
            w.end("object");
        }
        w.end("robot");
        w.finish()
    }
}

/// Reads a constructors document. Repeated kinds are kept as aliases, in
/// document order.
pub fn load_constructors(text: &str) -> Result<Vec<ConstructorSpec>, XmlError> {
    let doc = xml::parse(text)?;
    let root = xml::expect_root(&doc, "constructors")?;
    xml::check_attrs(root, &[])?;
    let mut out = Vec::new();
    for node in xml::children(root)? {
        if node.tag_name().name() != "constructor" {
            return Err(schema_error(
                node,
                format!("unknown element <{}>", node.tag_name().name()),
            ));
        }
        xml::check_attrs(node, &["kind", "label", "icon"])?;
        let raw = xml::req_attr(node, "kind")?;
        let kind: ConstructorKind = raw
            .parse()
            .map_err(|_| schema_error(node, format!("unknown constructor kind: {raw}")))?;
        out.push(ConstructorSpec::new(kind, node.attribute("label")));
    }
    Ok(out)
}

pub fn load_robot_objects(text: &str) -> Result<Vec<ObjectSpec>, XmlError> {
    load_robot(text).map(|(_, objects)| objects)
}

/// Reads a robot-objects document, returning the robot name and its objects.
pub fn load_robot(text: &str) -> Result<(String, Vec<ObjectSpec>), XmlError> {
    let doc = xml::parse(text)?;
    let root = xml::expect_root(&doc, "robot")?;
    xml::check_attrs(root, &["name"])?;
    let robot = xml::ident_attr(root, "name")?.to_string();
    let mut seen = HashSet::new();
    let mut objects = Vec::new();
    for node in xml::children(root)? {
        if node.tag_name().name() != "object" {
            return Err(schema_error(
                node,
                format!("unknown element <{}>", node.tag_name().name()),
            ));
        }
        let obj = read_object(node)?;
        if !seen.insert(obj.name.clone()) {
            return Err(schema_error(node, format!("duplicate object: {}", obj.name)));
        }
        objects.push(obj);
    }
    Ok((robot, objects))
}

fn read_object(node: Node<'_, '_>) -> Result<ObjectSpec, XmlError> {
    xml::check_attrs(node, &["name", "kind", "vartype", "label", "icon"])?;
    let name = xml::ident_attr(node, "name")?.to_string();
    let kind = match xml::req_attr(node, "kind")? {
        "actuator" => ObjectKind::Actuator,
        "sensor" => ObjectKind::Sensor,
        "variable" => ObjectKind::Variable,
        other => {
            return Err(schema_error(node, format!("unknown object kind: {other}")));
        }
    };
    let label = node.attribute("label").map(str::to_string);
    let children = xml::children(node)?;

    if kind == ObjectKind::Variable {
        let var_type = match xml::req_attr(node, "vartype")? {
            "integer" => VarType::Integer,
            "boolean" => VarType::Boolean,
            other => {
                return Err(schema_error(node, format!("unknown variable type: {other}")));
            }
        };
        if let Some(child) = children.first() {
            return Err(schema_error(*child, format!("variable {name} cannot declare methods")));
        }
        return Ok(ObjectSpec {
            name,
            kind,
            var_type: Some(var_type),
            label,
            methods: var_type.methods(),
        });
    }
    if node.attribute("vartype").is_some() {
        return Err(schema_error(node, "vartype is only allowed on variables"));
    }

    let mut methods: Vec<MethodSpec> = Vec::new();
    for child in children {
        if child.tag_name().name() != "method" {
            return Err(schema_error(
                child,
                format!("unknown element <{}>", child.tag_name().name()),
            ));
        }
        let method = read_method(child, &name, kind)?;
        if methods.iter().any(|m| m.name == method.name) {
            return Err(schema_error(child, format!("duplicate method: {name}.{}", method.name)));
        }
        methods.push(method);
    }
    Ok(ObjectSpec {
        name,
        kind,
        var_type: None,
        label,
        methods,
    })
}

fn read_method(node: Node<'_, '_>, object: &str, kind: ObjectKind) -> Result<MethodSpec, XmlError> {
    xml::check_attrs(node, &["name", "returns", "pure", "label"])?;
    let name = xml::ident_attr(node, "name")?.to_string();
    let returns: ReturnType = match node.attribute("returns") {
        Some(_) => xml::req_parsed(node, "returns")?,
        None if kind == ObjectKind::Actuator => ReturnType::Void,
        None => ReturnType::Bool,
    };
    let pure = xml::parse_bool(node, "pure")?;
    let pure = match kind {
        ObjectKind::Actuator => {
            if returns != ReturnType::Void {
                return Err(schema_error(
                    node,
                    format!("actuator method {object}.{name} must return void, not {returns}"),
                ));
            }
            if pure == Some(true) {
                return Err(schema_error(
                    node,
                    format!("actuator method {object}.{name} cannot be pure"),
                ));
            }
            false
        }
        _ => {
            if returns == ReturnType::Void {
                return Err(schema_error(
                    node,
                    format!("sensor method {object}.{name} must return bool or int"),
                ));
            }
            if pure == Some(false) {
                return Err(schema_error(
                    node,
                    format!("sensor method {object}.{name} must be pure"),
                ));
            }
            true
        }
    };

    let mut params = Vec::new();
    for child in xml::children(node)? {
        if child.tag_name().name() != "param" {
            return Err(schema_error(
                child,
                format!("unknown element <{}>", child.tag_name().name()),
            ));
        }
        xml::check_attrs(child, &["name", "type", "min", "max"])?;
        let pname = xml::ident_attr(child, "name")?.to_string();
        let param = match xml::req_attr(child, "type")? {
            "int" => {
                let min: i64 = xml::parse_attr(child, "min")?.unwrap_or(INT_MIN as i64);
                let max: i64 = xml::parse_attr(child, "max")?.unwrap_or(INT_MAX as i64);
                if min < INT_MIN as i64 || max > INT_MAX as i64 {
                    return Err(schema_error(
                        child,
                        format!("parameter {pname} range [{min},{max}] lies outside [0,100]"),
                    ));
                }
                if min > max {
                    return Err(schema_error(
                        child,
                        format!("parameter {pname} has empty range [{min},{max}]"),
                    ));
                }
                ParamSpec {
                    name: pname,
                    kind: ParamKind::Int,
                    range: Some(Range {
                        min: min as u32,
                        max: max as u32,
                    }),
                }
            }
            "bool" => {
                if child.attribute("min").is_some() || child.attribute("max").is_some() {
                    return Err(schema_error(child, "bool parameters take no range"));
                }
                ParamSpec {
                    name: pname,
                    kind: ParamKind::BoolExpr,
                    range: None,
                }
            }
            other => {
                return Err(schema_error(child, format!("unknown parameter type: {other}")));
            }
        };
        params.push(param);
    }
    Ok(MethodSpec {
        name,
        params,
        returns,
        pure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const CARRIER: &str = include_str!("../../../assets/carrier.xml");
    const CONSTRUCTORS: &str = include_str!("../../../assets/constructors.xml");

    fn carrier() -> Catalog {
        Catalog::from_xml(Some(CONSTRUCTORS), CARRIER).unwrap()
    }

    #[test]
    fn shipped_constructors_are_the_standard_twelve() {
        let specs = load_constructors(CONSTRUCTORS).unwrap();
        let kinds: Vec<_> = specs.iter().map(|c| c.kind).collect();
        assert_eq!(kinds, ConstructorKind::ALL.to_vec());
    }

    #[test]
    fn empty_constructors_document() {
        assert!(load_constructors("<constructors/>").unwrap().is_empty());
    }

    #[test]
    fn unknown_constructor_kind_is_rejected() {
        let err = load_constructors(r#"<constructors><constructor kind="GoSub"/></constructors>"#).unwrap_err();
        assert_eq!(err.message(), "unknown constructor kind: GoSub");
    }

    #[test]
    fn aliases_keep_document_order() {
        let specs = load_constructors(
            r#"<constructors>
                 <constructor kind="Wait" label="Pause"/>
                 <constructor kind="Repetition"/>
                 <constructor kind="Wait" label="Sleep"/>
               </constructors>"#,
        )
        .unwrap();
        let labels: Vec<_> = specs.iter().map(|c| c.label.as_str()).collect();
        assert_eq!(labels, ["Pause", "Repetition", "Sleep"]);
    }

    #[test]
    fn malformed_xml_has_position() {
        let err = load_constructors("<constructors>\n<constructor kind=\"Wait\">\n</constructors>").unwrap_err();
        assert!(matches!(err, XmlError::Malformed { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn wheel_methods() {
        let cat = carrier();
        let wheel = cat.object("wheel").unwrap();
        assert_eq!(wheel.kind, ObjectKind::Actuator);
        let names: Vec<_> = wheel.methods.iter().map(|m| m.name.as_str()).collect();
        assert_eq!(names, ["Advance", "Reverse", "Stop"]);
        assert_eq!(wheel.methods[0].params, vec![ParamSpec::int("speed")]);
    }

    #[test]
    fn boolean_variable_methods_are_synthesized() {
        let objs =
            load_robot_objects(r#"<robot name="r"><object name="n" kind="variable" vartype="boolean"/></robot>"#)
                .unwrap();
        let names: Vec<_> = objs[0].methods.iter().map(|m| m.name.as_str()).collect();
        assert_eq!(names, ["SetTrue", "SetFalse", "IsTrue", "IsFalse"]);
    }

    #[test]
    fn duplicate_object() {
        let err = load_robot_objects(
            r#"<robot name="r">
                 <object name="wheel" kind="actuator"/>
                 <object name="wheel" kind="actuator"/>
               </robot>"#,
        )
        .unwrap_err();
        assert_eq!(err.message(), "duplicate object: wheel");
    }

    #[test]
    fn actuator_must_return_void() {
        let err = load_robot_objects(
            r#"<robot name="r"><object name="m" kind="actuator">
                 <method name="Speed" returns="int"/>
               </object></robot>"#,
        )
        .unwrap_err();
        assert!(err.message().contains("must return void"), "{err}");
    }

    #[test]
    fn param_range_outside_bounds() {
        let err = load_robot_objects(
            r#"<robot name="r"><object name="m" kind="actuator">
                 <method name="Turn"><param name="speed" type="int" min="0" max="250"/></method>
               </object></robot>"#,
        )
        .unwrap_err();
        assert!(err.message().contains("outside [0,100]"), "{err}");
    }

    #[test]
    fn unknown_elements_are_rejected() {
        let err = load_robot_objects(
            r#"<robot name="r"><object name="m" kind="actuator"><methd name="X"/></object></robot>"#,
        )
        .unwrap_err();
        assert!(err.message().contains("unknown element <methd>"), "{err}");
    }

    #[test]
    fn resolve_examples() {
        let cat = carrier();
        let adv = cat.resolve_call("wheel", "Advance", &[ParamKind::Int]).unwrap();
        assert_eq!((adv.returns, adv.pure), (ReturnType::Void, false));
        assert_eq!(
            cat.resolve_call("wheel", "Advance", &[]).unwrap_err(),
            ResolveError::ArityMismatch {
                object: "wheel".into(),
                method: "Advance".into(),
                expected: 1,
                got: 0
            }
        );
        let eq = cat.resolve_call("captor", "EqualTo", &[ParamKind::Int]).unwrap();
        assert_eq!((eq.returns, eq.pure), (ReturnType::Bool, true));
        assert!(matches!(
            cat.resolve_call("nope", "X", &[]),
            Err(ResolveError::UnknownObject { .. })
        ));
        assert!(matches!(
            cat.resolve_call("wheel", "Fly", &[]),
            Err(ResolveError::UnknownMethod { .. })
        ));
    }

    #[test]
    fn integer_variable_set_kinds() {
        let cat = carrier();
        assert!(cat.resolve_call("count", "Set", &[ParamKind::Int]).is_ok());
        assert!(matches!(
            cat.resolve_call("count", "Set", &[ParamKind::BoolExpr]),
            Err(ResolveError::KindMismatch { index: 0, .. })
        ));
    }

    #[test]
    fn sensors_are_pure_and_valued() {
        for obj in carrier().objects.iter().filter(|o| o.kind == ObjectKind::Sensor) {
            for m in &obj.methods {
                assert!(m.pure && m.returns != ReturnType::Void, "{}.{}", obj.name, m.name);
            }
        }
    }

    #[test]
    fn xml_round_trip() {
        let cat = carrier();
        let again = Catalog::from_xml(Some(&cat.constructors_xml()), &cat.robot_objects_xml()).unwrap();
        assert_eq!(cat, again);
    }
}
