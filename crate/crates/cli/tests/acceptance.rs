//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use kitrobot_client::{Client, NewSession};
use kitrobot_core::catalog::Catalog;
use kitrobot_core::codegen::{ast_of, compile_graph};
use kitrobot_core::diag::DiagCode;
use kitrobot_core::graph::{load_krt, save_krt, validate_graph};
use kitrobot_core::lll::{parse, print_canonical, typecheck, Expr, Instr, InstrKind};
use kitrobot_core::scenario::{Scenario, Setup};
use kitrobot_core::testkit::{demo_programs, graph_of, GenConfig, ProgramGen, RefMachine, ScriptedDevices};
use kitrobot_core::vm::{
    load_program, to_jsonl, DeviceCall, DeviceFault, Devices, EventKind, LoadError, MachineState, TraceRecord,
    TraceValue, Value,
};
use kitrobot_core::world::WorldState;
use serde_json::Value as Json;
use sha2::{Digest, Sha256};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn assets() -> PathBuf {
    root().join("assets")
}

fn core_golden(name: &str) -> String {
    std::fs::read_to_string(root().join("crates/core/tests/golden").join(name)).unwrap()
}

fn carrier() -> Catalog {
    Catalog::load_files(None, &assets().join("carrier.xml")).unwrap()
}

fn instr_count(block: &[Instr]) -> usize {
    block
        .iter()
        .map(|i| {
            1 + match &i.kind {
                InstrKind::Repeat { body, .. } | InstrKind::While { body, .. } | InstrKind::Event { body, .. } => {
                    instr_count(body)
                }
                InstrKind::If { then, otherwise, .. } => {
                    instr_count(then) + otherwise.as_deref().map_or(0, instr_count)
                }
                InstrKind::Parallel(branches) => branches.iter().map(|b| instr_count(b)).sum(),
                _ => 0,
            }
        })
        .sum()
}

fn grammar_round_trip() -> Check {
    let catalog = carrier();
    let mut gen = ProgramGen::new(&catalog, 1000, GenConfig::default());
    let start = Instant::now();
    for n in 0..1000 {
        let p = gen.program();
        let text = print_canonical(&p);
        ensure!(parse(&text).as_ref() == Ok(&p), "case {n} failed: {text}");
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    Ok(format!("1000/1000 in {elapsed:.2?}"))
}

fn productions(block: &[Instr], out: &mut BTreeSet<&'static str>) {
    fn expr(e: &Expr, out: &mut BTreeSet<&'static str>) {
        match e {
            Expr::Not(x) => {
                out.insert("not");
                expr(x, out);
            }
            Expr::And(l, r) | Expr::Or(l, r) => {
                out.insert(if matches!(e, Expr::And(..)) { "and" } else { "or" });
                expr(l, out);
                expr(r, out);
            }
            _ => {}
        }
    }
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
                productions(body, out);
            }
            InstrKind::While { cond, body } => {
                out.insert("while");
                expr(cond, out);
                productions(body, out);
            }
            InstrKind::If { cond, then, otherwise } => {
                out.insert(if otherwise.is_some() { "ifelse" } else { "if" });
                expr(cond, out);
                productions(then, out);
                if let Some(o) = otherwise {
                    productions(o, out);
                }
            }
            InstrKind::Event { cond, body } => {
                out.insert("event");
                expr(cond, out);
                productions(body, out);
            }
            InstrKind::Parallel(branches) => {
                out.insert("parallel");
                for b in branches {
                    productions(b, out);
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

fn grammar_coverage() -> Check {
    let files = [
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
    let mut seen = BTreeSet::new();
    for name in files {
        let text = core_golden(&format!("{name}.lll"));
        let p = parse(&text).map_err(|e| format!("{name}: {e}"))?;
        ensure!(print_canonical(&p) == text, "{name} does not reprint byte-identically");
        productions(&p.body, &mut seen);
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
    ensure!(seen == want, "missing {:?}", want.difference(&seen).collect::<Vec<_>>());
    Ok(format!("{} golden files cover {} productions", files.len(), want.len()))
}

fn compile_retraction() -> Check {
    let catalog = carrier();
    let mut gen = ProgramGen::new(&catalog, 500, GenConfig::default());
    for n in 0..500 {
        let g = gen.graph();
        let code = compile_graph(&g, &catalog).map_err(|d| format!("case {n}: {d:?}"))?;
        ensure!(parse(&code).as_ref() == Ok(&ast_of(&g)), "case {n}: {code}");
    }
    Ok("500/500".into())
}

fn krt_round_trip() -> Check {
    let catalog = carrier();
    let mut gen = ProgramGen::new(&catalog, 501, GenConfig::default());
    for n in 0..500 {
        let g = gen.graph();
        let text = save_krt(&g).map_err(|d| format!("case {n}: {d:?}"))?;
        ensure!(load_krt(&text).as_ref() == Ok(&g), "case {n}");
    }
    Ok("500/500".into())
}

fn range_enforcement() -> Check {
    let catalog = carrier();
    let shared = Arc::new(catalog.clone());
    let mut gen = ProgramGen::new(&catalog, 200, GenConfig::default());
    for n in 0..200 {
        let p = gen.out_of_range();
        let text = print_canonical(&p);
        let diags = typecheck(&parse(&text).unwrap(), &catalog);
        ensure!(
            diags.len() == 1 && diags[0].code == DiagCode::RangeViolation,
            "case {n} {text}: {diags:?}"
        );
        let from_graph = validate_graph(&graph_of(&p), &catalog);
        ensure!(
            from_graph.len() == 1 && from_graph[0].code == DiagCode::RangeViolation,
            "case {n} graph: {from_graph:?}"
        );
        match load_program(&text, shared.clone(), "c1") {
            Err(LoadError::Typecheck(d)) if d.len() == 1 => {}
            other => return Err(format!("case {n} reached the VM: {:?}", other.map(|_| ()))),
        }
    }
    Ok("200/200 with exactly one range diagnostic, none executed".into())
}

fn vm_oracle() -> Check {
    let catalog = carrier();
    let shared = Arc::new(catalog.clone());
    let mut gen = ProgramGen::new(&catalog, 300, GenConfig::default());
    let mut largest = 0;
    for case in 0..300u64 {
        let p = gen.program();
        largest = largest.max(instr_count(&p.body));
        ensure!(
            instr_count(&p.body) <= 40,
            "case {case} has {} instructions",
            instr_count(&p.body)
        );
        let mut vm = MachineState::new(p.clone(), shared.clone(), "r1");
        vm.run(&mut ScriptedDevices::new(&catalog, case), 200);
        let expected = RefMachine::new(&p, &catalog, "r1").run(&mut ScriptedDevices::new(&catalog, case), 200);
        ensure!(
            to_jsonl(vm.trace()) == to_jsonl(&expected),
            "case {case}: {}",
            print_canonical(&p)
        );
    }
    Ok(format!(
        "300/300 identical traces, largest program {largest} instructions"
    ))
}

/// Every sensor reads false; every action succeeds.
struct Quiet;

impl Devices for Quiet {
    fn act(&mut self, _: &DeviceCall<'_>) -> Result<(), DeviceFault> {
        Ok(())
    }

    fn sense(&self, _: &DeviceCall<'_>) -> Result<Value, DeviceFault> {
        Ok(Value::Bool(false))
    }
}

fn aborted(trace: &[TraceRecord]) -> Vec<(u64, u32)> {
    trace
        .iter()
        .filter(|r| r.kind == EventKind::BranchAborted)
        .filter_map(|r| match r.value {
            Some(TraceValue::Value(Value::Int(i))) => Some((r.tick, i)),
            _ => None,
        })
        .collect()
}

fn interrupt_suite() -> Check {
    let catalog = carrier();
    let cases: Vec<Json> = serde_json::from_str(&core_golden("interrupts.json")).unwrap();
    ensure!(cases.len() == 10, "{} cases", cases.len());
    let mut total = 0;
    for case in &cases {
        let name = case["name"].as_str().unwrap();
        let program = parse(case["program"].as_str().unwrap()).unwrap();
        let max = case["max_ticks"].as_u64().unwrap();
        let want: Vec<(u64, u32)> = serde_json::from_value(case["aborted"].clone()).unwrap();
        let mut vm = MachineState::new(program.clone(), Arc::new(catalog.clone()), "c1");
        vm.run(&mut Quiet, max);
        ensure!(aborted(vm.trace()) == want, "{name}: got {:?}", aborted(vm.trace()));
        let end = vm.trace().last().unwrap();
        let outcome = serde_json::to_value(&end.value).unwrap();
        ensure!(
            Json::from(vec![Json::from(end.tick), outcome]) == case["end"],
            "{name}: ended {:?}",
            end
        );
        let reference = RefMachine::new(&program, &catalog, "c1").run(&mut Quiet, max);
        ensure!(reference == vm.trace(), "{name}: reference differs");
        total += want.len();
    }
    Ok(format!("10/10 cases, {total} branch-aborted records as expected"))
}

fn demo_setup() -> Setup {
    Setup::from_files(&assets().join("demo-world.xml"), &demo_programs(&assets())).unwrap()
}

fn mission_done(w: &WorldState) -> bool {
    w.store("A").is_some_and(|s| s.count == 0) && w.store("B").is_some_and(|s| s.count == 5)
}

fn demo_golden() -> Json {
    serde_json::from_str(&core_golden("demo.json")).unwrap()
}

fn determinism() -> Check {
    let golden = demo_golden();
    let budget = golden["mission_tick"].as_u64().unwrap();
    let mut reference = Scenario::with(demo_setup(), 10_000, |p| {
        RefMachine::new(&p.program, &p.catalog, &p.agent)
    });
    let mut first = None;
    reference.run_observed(|w, t| {
        if first.is_none() && mission_done(w) {
            first = Some(t);
        }
    });
    ensure!(
        first == Some(budget),
        "reference mission tick {first:?}, golden {budget}"
    );

    let start = Instant::now();
    let mut traces = Vec::new();
    for run in 0..5 {
        let mut s = Scenario::new(demo_setup(), budget);
        let stock = s.world().stock();
        let mut broken = None;
        s.run_observed(|w, t| {
            if broken.is_none() && w.stock() != stock {
                broken = Some(t);
            }
        });
        ensure!(broken.is_none(), "run {run}: conservation broken at tick {broken:?}");
        ensure!(
            mission_done(s.world()),
            "run {run}: mission incomplete at tick {budget}"
        );
        traces.push(to_jsonl(s.trace()));
    }
    let elapsed = start.elapsed();
    ensure!(traces.windows(2).all(|w| w[0] == w[1]), "traces differ between runs");
    let digest = hex::encode(Sha256::digest(traces[0].as_bytes()));
    ensure!(
        Some(digest.as_str()) == golden["trace_sha256"].as_str(),
        "trace sha256 {digest} does not match the golden"
    );
    ensure!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    Ok(format!(
        "5 identical runs, mission at tick {budget}, sha256 {}, {elapsed:.2?}",
        &digest[..12]
    ))
}

fn cli_service_parity() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("cli.jsonl");
    let programs = demo_programs(&assets());
    let mut args = vec![
        "scenario".to_string(),
        "--world".into(),
        assets().join("demo-world.xml").display().to_string(),
        "--max-ticks".into(),
        "200".into(),
        "--trace".into(),
        trace.display().to_string(),
    ];
    for (agent, _) in &programs {
        let file = match agent.as_str() {
            "L" => "loader.lll",
            "U" => "unloader.lll",
            _ => "carrier.lll",
        };
        args.push("--program".into());
        args.push(format!("{agent}={}", assets().join("programs").join(file).display()));
    }
    let out = Command::new(env!("CARGO_BIN_EXE_kitrobot"))
        .args(&args)
        .output()
        .unwrap();
    ensure!(
        out.status.success(),
        "cli exited {:?}: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    let cli = std::fs::read(&trace).unwrap();

    let rt = tokio::runtime::Runtime::new().unwrap();
    let session = rt.block_on(async {
        let mut config = kitrobot_service::Config::new(assets().join("carrier.xml"));
        config.world = Some(assets().join("demo-world.xml"));
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let addr = listener.local_addr().unwrap();
        tokio::spawn(async move { kitrobot_service::serve(listener, &config).await });
        let req = NewSession {
            world: None,
            programs: programs.iter().cloned().collect::<BTreeMap<_, _>>(),
            max_ticks: Some(200),
        };
        Client::new(&format!("http://{addr}")).run_session(&req, 7).await
    });
    let session = to_jsonl(&session.map_err(|e| e.to_string())?);
    ensure!(
        session.as_bytes() == cli.as_slice(),
        "session trace differs from the cli trace"
    );
    Ok(format!(
        "{} records, {} bytes identical",
        session.lines().count(),
        cli.len()
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("grammar round-trip", grammar_round_trip),
        ("grammar coverage", grammar_coverage),
        ("compile-parse retraction", compile_retraction),
        ("krt round-trip", krt_round_trip),
        ("range enforcement", range_enforcement),
        ("vm oracle equivalence", vm_oracle),
        ("interrupt semantics", interrupt_suite),
        ("determinism", determinism),
        ("cli/service parity", cli_service_parity),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match result {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
