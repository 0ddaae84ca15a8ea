use std::collections::BTreeSet;
use std::path::Path;

use kitrobot_core::catalog::Catalog;
use kitrobot_core::lll::{parse, print_canonical, typecheck, Expr, Instr, InstrKind};

const FILES: &[&str] = &[
    "action",
    "interrupt",
    "repeat",
    "while",
    "if",
    "ifelse",
    "event",
    "parallel",
    "wait",
    "break",
    "conds",
    "multiarg",
];

fn read(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(format!("{name}.lll"));
    std::fs::read_to_string(path).unwrap()
}

fn features(block: &[Instr], out: &mut BTreeSet<&'static str>) {
    for i in block {
        match &i.kind {
            InstrKind::Action(c) | InstrKind::Interrupt(c) => {
                out.insert(if matches!(i.kind, InstrKind::Action(_)) {
                    "action"
                } else {
                    "interrupt"
                });
                if c.args.len() > 1 {
                    out.insert("multiarg");
                }
            }
            InstrKind::Repeat { body, .. } => {
                out.insert("repeat");
                features(body, out);
            }
            InstrKind::While { cond, body } => {
                out.insert("while");
                conds(cond, out);
                features(body, out);
            }
            InstrKind::If { cond, then, otherwise } => {
                out.insert(if otherwise.is_some() { "ifelse" } else { "if" });
                conds(cond, out);
                features(then, out);
                if let Some(o) = otherwise {
                    features(o, out);
                }
            }
            InstrKind::Event { cond, body } => {
                out.insert("event");
                conds(cond, out);
                features(body, out);
            }
            InstrKind::Parallel(branches) => {
                out.insert("parallel");
                for b in branches {
                    features(b, out);
                }
            }
            InstrKind::Wait(_) => {
                out.insert("wait");
            }
            InstrKind::Break => {
                out.insert("break");
            }
        }
    }
}

fn conds(e: &Expr, out: &mut BTreeSet<&'static str>) {
    match e {
        Expr::Not(x) => {
            out.insert("not");
            conds(x, out);
        }
        Expr::And(l, r) => {
            out.insert("and");
            conds(l, out);
            conds(r, out);
        }
        Expr::Or(l, r) => {
            out.insert("or");
            conds(l, out);
            conds(r, out);
        }
        _ => {}
    }
}

#[test]
fn goldens_reprint_byte_identically() {
    for name in FILES {
        let text = read(name);
        let program = parse(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(print_canonical(&program), text, "{name}");
    }
}

#[test]
fn goldens_typecheck_against_the_carrier() {
    let catalog = Catalog::from_xml(None, include_str!("../../../assets/carrier.xml")).unwrap();
    for name in FILES {
        let program = parse(&read(name)).unwrap();
        assert!(typecheck(&program, &catalog).is_empty(), "{name}");
    }
}

#[test]
fn goldens_cover_every_production() {
    let mut seen = BTreeSet::new();
    for name in FILES {
        features(&parse(&read(name)).unwrap().body, &mut seen);
    }
    let want: BTreeSet<&str> = [
        "action",
        "interrupt",
        "repeat",
        "while",
        "if",
        "ifelse",
        "event",
        "parallel",
        "wait",
        "break",
        "and",
        "or",
        "not",
        "multiarg",
    ]
    .into();
    assert_eq!(seen, want);
}
