use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};

use kitrobot_cli::run_cli;
use kitrobot_core::catalog::Catalog;
use kitrobot_core::graph::save_krt;
use kitrobot_core::lll::print_canonical;
use kitrobot_core::testkit::{GenConfig, ProgramGen};

fn assets() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../assets")
}

fn asset(name: &str) -> String {
    assets().join(name).display().to_string()
}

fn kitrobot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kitrobot"))
        .args(args)
        .env("KITROBOT_NO_COLOR", "1")
        .output()
        .unwrap()
}

fn in_process(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("kitrobot").chain(args.iter().copied());
    let code = run_cli(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

struct Server(Child, String);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn serve() -> Server {
    let mut child = Command::new(env!("CARGO_BIN_EXE_kitrobot"))
        .args([
            "serve",
            "--port",
            "0",
            "--catalog",
            &asset("carrier.xml"),
            "--world",
            &asset("demo-world.xml"),
        ])
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stderr.take().unwrap())
        .read_line(&mut line)
        .unwrap();
    let url = line.trim().strip_prefix("listening on ").unwrap().to_string();
    Server(child, url)
}

#[test]
fn compile_prints_canonical_code() {
    let dir = tempfile::tempdir().unwrap();
    let krt = dir.path().join("wait5.krt");
    std::fs::write(
        &krt,
        r#"<krt version="1"><program><start id="s"/><wait id="w" ticks="5"/><stop id="e"/></program></krt>"#,
    )
    .unwrap();
    let out = kitrobot(&["compile", krt.to_str().unwrap(), "--catalog", &asset("carrier.xml")]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert_eq!(text(&out.stdout).trim_end(), "WAIT(5);");

    let dest = dir.path().join("out.lll");
    let out = kitrobot(&[
        "compile",
        krt.to_str().unwrap(),
        "--catalog",
        &asset("carrier.xml"),
        "--constructors",
        &asset("constructors.xml"),
        "-o",
        dest.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(dest).unwrap().trim_end(), "WAIT(5);");
}

#[test]
fn check_reports_range_violations() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.lll");
    std::fs::write(&bad, "wheel.Advance(150);").unwrap();
    let out = kitrobot(&["check", bad.to_str().unwrap(), "--catalog", &asset("carrier.xml")]);
    assert_eq!(out.status.code(), Some(1));
    let err = text(&out.stderr);
    assert!(err.contains("must be between 0 and 100"), "{err}");
    assert!(err.contains("bad.lll:1:15"), "{err}");
    assert!(!err.contains('\x1b'));
    assert!(out.stdout.is_empty());
}

#[test]
fn syntax_errors_are_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.lll");
    std::fs::write(&bad, "WAIT(3").unwrap();
    let (code, _, err) = in_process(&["fmt", bad.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("bad.lll:1:"), "{err}");
}

#[test]
fn run_on_a_budget_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let prog = dir.path().join("loop.lll");
    std::fs::write(&prog, "*[done.IsFalse()](wheel.Advance(10););").unwrap();
    let trace = dir.path().join("t.jsonl");
    let out = kitrobot(&[
        "run",
        prog.to_str().unwrap(),
        "--catalog",
        &asset("carrier.xml"),
        "--world",
        &asset("demo-world.xml"),
        "--agent",
        "c1",
        "--max-ticks",
        "5",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let written = std::fs::read_to_string(trace).unwrap();
    let last = written.lines().last().unwrap();
    assert!(
        last.contains(r#""kind":"program-end""#) && last.contains("tick-budget-exhausted"),
        "{last}"
    );
    assert!(text(&out.stderr).contains("c1: tick budget exhausted at tick 5"));
}

#[test]
fn runtime_faults_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let prog = dir.path().join("p.lll");
    std::fs::write(&prog, "wheel.Advance(10);").unwrap();
    let (code, out, err) = in_process(&[
        "run",
        prog.to_str().unwrap(),
        "--catalog",
        &asset("carrier.xml"),
        "--world",
        &asset("demo-world.xml"),
        "--agent",
        "L",
        "--max-ticks",
        "5",
    ]);
    assert_eq!(code, 3, "{err}");
    assert!(out.contains("action-aborted"));
    assert!(err.contains("L: failed"), "{err}");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(kitrobot(&[]).status.code(), Some(2));
    assert_eq!(kitrobot(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(kitrobot(&["fmt", "/no/such/file.lll"]).status.code(), Some(2));
    assert_eq!(kitrobot(&["check", "x.lll"]).status.code(), Some(2));
    let out = kitrobot(&[
        "scenario",
        "--world",
        &asset("demo-world.xml"),
        "--program",
        "c1",
        "--max-ticks",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let (code, _, err) = in_process(&[
        "scenario",
        "--world",
        &asset("demo-world.xml"),
        "--program",
        &format!("nobody={}", asset("programs/carrier.lll")),
        "--max-ticks",
        "3",
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("nobody"));
    assert_eq!(kitrobot(&["--help"]).status.code(), Some(0));
}

#[test]
fn fmt_is_idempotent() {
    let catalog = Catalog::from_xml(None, include_str!("../../../assets/carrier.xml")).unwrap();
    let mut gen = ProgramGen::new(&catalog, 41, GenConfig::default());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.lll");
    for _ in 0..50 {
        let loose = print_canonical(&gen.program()).replace(';', "; ").replace('(', "( ");
        std::fs::write(&path, &loose).unwrap();
        let (code, once, _) = in_process(&["fmt", path.to_str().unwrap()]);
        assert_eq!(code, 0);
        std::fs::write(&path, &once).unwrap();
        let (_, twice, _) = in_process(&["fmt", path.to_str().unwrap()]);
        assert_eq!(once, twice);
    }
}

#[test]
fn compiled_output_always_checks() {
    let catalog = Catalog::from_xml(None, include_str!("../../../assets/carrier.xml")).unwrap();
    let mut gen = ProgramGen::new(&catalog, 17, GenConfig::default());
    let dir = tempfile::tempdir().unwrap();
    let krt = dir.path().join("g.krt");
    let lll = dir.path().join("g.lll");
    for _ in 0..50 {
        std::fs::write(&krt, save_krt(&gen.graph()).unwrap()).unwrap();
        let (code, _, err) = in_process(&[
            "compile",
            krt.to_str().unwrap(),
            "--catalog",
            &asset("carrier.xml"),
            "-o",
            lll.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "{err}");
        let (code, _, err) = in_process(&["check", lll.to_str().unwrap(), "--catalog", &asset("carrier.xml")]);
        assert_eq!(code, 0, "{err}");
    }
}

#[test]
fn server_mode_matches_local_mode() {
    let server = serve();
    let dir = tempfile::tempdir().unwrap();
    let krt = dir.path().join("g.krt");
    std::fs::write(
        &krt,
        r#"<krt version="1"><program><start id="s"/><repeat id="r" count="3"><body><action id="a" object="wheel" method="Advance"><arg int="50"/></action></body></repeat><stop id="e"/></program></krt>"#,
    )
    .unwrap();
    let remote = kitrobot(&["compile", krt.to_str().unwrap(), "--server", &server.1]);
    let local = kitrobot(&["compile", krt.to_str().unwrap(), "--catalog", &asset("carrier.xml")]);
    assert_eq!(remote.status.code(), Some(0), "{}", text(&remote.stderr));
    assert_eq!(text(&remote.stdout), "3*(wheel.Advance(50););\n");
    assert_eq!(remote.stdout, local.stdout);

    let bad = dir.path().join("bad.lll");
    std::fs::write(&bad, "wheel.Advance(150);").unwrap();
    let out = kitrobot(&[
        "scenario",
        "--world",
        &asset("demo-world.xml"),
        "--program",
        &format!("c1={}", bad.display()),
        "--max-ticks",
        "5",
        "--server",
        &server.1,
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("bad.lll:1:15"), "{}", text(&out.stderr));
}
