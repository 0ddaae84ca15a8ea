//! The `kitrobot` command line.
//!
//! Exit codes: 0 success, 1 diagnostics, 2 usage or I/O error, 3 runtime
//! fault. A run that hits its tick budget is a success.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use kitrobot_client::{Client, ClientError, NewSession};
use kitrobot_core::catalog::Catalog;
use kitrobot_core::codegen::compile_graph;
use kitrobot_core::diag::Diagnostic;
use kitrobot_core::graph::{load_krt, KrtError};
use kitrobot_core::lll::{parse_named, print_canonical, typecheck, Program};
use kitrobot_core::scenario::{AgentProgram, Scenario, ScenarioError, Setup};
use kitrobot_core::vm::{to_jsonl, EventKind, Outcome, TraceRecord, TraceValue};
use kitrobot_core::world::world_from_spec;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DIAGNOSTICS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_FAULT: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "kitrobot", version, about = "Compile, check and run KitRobot programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compile a .krt program graph to canonical program text.
    Compile {
        file: PathBuf,
        #[arg(long)]
        catalog: Option<PathBuf>,
        #[arg(long)]
        constructors: Option<PathBuf>,
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
        /// Compile on a running service instead of locally.
        #[arg(long)]
        server: Option<String>,
    },
    /// Parse and type-check a program.
    Check {
        file: PathBuf,
        #[arg(long)]
        catalog: PathBuf,
    },
    /// Print a program in canonical form.
    Fmt { file: PathBuf },
    /// Run one agent's program in a world.
    Run {
        file: PathBuf,
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long)]
        world: PathBuf,
        #[arg(long)]
        agent: String,
        #[arg(long)]
        max_ticks: u64,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run several agents' programs together in a world.
    Scenario {
        #[arg(long)]
        world: PathBuf,
        /// `agent=file.lll`, once per agent.
        #[arg(long = "program", value_parser = agent_file, required = true)]
        programs: Vec<(String, PathBuf)>,
        #[arg(long)]
        max_ticks: u64,
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Run as a session on a running service instead of locally.
        #[arg(long)]
        server: Option<String>,
        /// Ticks per step request when using a server.
        #[arg(long, default_value_t = 1000)]
        chunk: u64,
    },
    /// Start the HTTP service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long)]
        constructors: Option<PathBuf>,
        #[arg(long)]
        world: Option<PathBuf>,
        #[arg(long)]
        allow_origin: Option<String>,
    },
}

fn agent_file(s: &str) -> Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((agent, file)) if !agent.is_empty() && !file.is_empty() => Ok((agent.to_string(), PathBuf::from(file))),
        _ => Err(format!("expected AGENT=FILE, got {s:?}")),
    }
}

/// Why a command stopped early. Messages go to stderr.
enum Stop {
    Usage(String),
    Diagnostics(Vec<String>),
    Fault,
}

type Res = Result<(), Stop>;

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
    color: bool,
}

impl Io<'_> {
    fn error_label(&self) -> &'static str {
        if self.color {
            "\x1b[1;31merror\x1b[0m"
        } else {
            "error"
        }
    }
}

fn read(path: &Path) -> Result<String, Stop> {
    std::fs::read_to_string(path).map_err(|e| Stop::Usage(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Res {
    std::fs::write(path, text).map_err(|e| Stop::Usage(format!("cannot write {}: {e}", path.display())))
}

fn render(diags: &[Diagnostic], name: &str, text: &str) -> Stop {
    Stop::Diagnostics(diags.iter().map(|d| d.render(name, text)).collect())
}

/// Runs the command line and returns the process exit code.
pub fn run_cli<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let color = std::env::var_os("KITROBOT_NO_COLOR").is_none() && std::io::stderr().is_terminal();
    let mut io = Io { out, err, color };
    let result = dispatch(cli.command, &mut io);
    let label = io.error_label();
    match result {
        Ok(()) => EXIT_OK,
        Err(Stop::Usage(msg)) => {
            let _ = writeln!(io.err, "{label}: {msg}");
            EXIT_USAGE
        }
        Err(Stop::Diagnostics(lines)) => {
            for line in lines {
                let _ = writeln!(io.err, "{label}: {line}");
            }
            EXIT_DIAGNOSTICS
        }
        Err(Stop::Fault) => EXIT_FAULT,
    }
}

fn dispatch(command: Command, io: &mut Io<'_>) -> Res {
    match command {
        Command::Compile {
            file,
            catalog,
            constructors,
            output,
            server,
        } => compile(
            io,
            &file,
            catalog.as_deref(),
            constructors.as_deref(),
            output.as_deref(),
            server.as_deref(),
        ),
        Command::Check { file, catalog } => check(&file, &catalog),
        Command::Fmt { file } => fmt(io, &file),
        Command::Run {
            file,
            catalog,
            world,
            agent,
            max_ticks,
            trace,
        } => run(io, &file, &catalog, &world, &agent, max_ticks, trace.as_deref()),
        Command::Scenario {
            world,
            programs,
            max_ticks,
            trace,
            server,
            chunk,
        } => scenario(
            io,
            &world,
            &programs,
            max_ticks,
            trace.as_deref(),
            server.as_deref(),
            chunk,
        ),
        Command::Serve {
            port,
            host,
            catalog,
            constructors,
            world,
            allow_origin,
        } => {
            let mut config = kitrobot_service::Config::new(catalog);
            config.constructors = constructors;
            config.world = world;
            config.allow_origin = allow_origin;
            serve(io, &host, port, config)
        }
    }
}

fn runtime() -> Result<tokio::runtime::Runtime, Stop> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Stop::Usage(format!("cannot start runtime: {e}")))
}

fn load_catalog(constructors: Option<&Path>, robot: &Path) -> Result<Catalog, Stop> {
    Catalog::load_files(constructors, robot).map_err(|e| match e {
        kitrobot_core::catalog::CatalogError::Io { .. } => Stop::Usage(e.to_string()),
        kitrobot_core::catalog::CatalogError::Xml { .. } => Stop::Diagnostics(vec![e.to_string()]),
    })
}

fn emit(io: &mut Io<'_>, output: Option<&Path>, text: &str) -> Res {
    match output {
        Some(path) => write_file(path, text),
        None => io
            .out
            .write_all(text.as_bytes())
            .map_err(|e| Stop::Usage(format!("cannot write output: {e}"))),
    }
}

fn compile(
    io: &mut Io<'_>,
    file: &Path,
    catalog: Option<&Path>,
    constructors: Option<&Path>,
    output: Option<&Path>,
    server: Option<&str>,
) -> Res {
    let text = read(file)?;
    let name = file.display().to_string();
    let code = match server {
        Some(url) => runtime()?
            .block_on(Client::new(url).compile(&text))
            .map_err(|e| client_stop(e, |d| render(d, &name, &text)))?,
        None => {
            let catalog = catalog.ok_or_else(|| Stop::Usage("--catalog is required without --server".into()))?;
            let catalog = load_catalog(constructors, catalog)?;
            let graph = load_krt(&text).map_err(|e| match e {
                KrtError::Invariant(diags) => render(&diags, &name, &text),
                other => Stop::Diagnostics(vec![format!("{name}: {other}")]),
            })?;
            compile_graph(&graph, &catalog).map_err(|d| render(&d, &name, &text))?
        }
    };
    emit(io, output, &format!("{code}\n"))
}

fn client_stop(e: ClientError, on_invalid: impl FnOnce(&[Diagnostic]) -> Stop) -> Stop {
    match e {
        ClientError::Invalid {
            diagnostics, message, ..
        } if diagnostics.is_empty() => Stop::Diagnostics(vec![message]),
        ClientError::Invalid { diagnostics, .. } => on_invalid(&diagnostics),
        ClientError::Status { status, message } if status.as_u16() == 400 => Stop::Diagnostics(vec![message]),
        other => Stop::Usage(other.to_string()),
    }
}

fn parse_checked(file: &Path, text: &str, catalog: Option<&Catalog>) -> Result<Program, Stop> {
    let name = file.display().to_string();
    let program = parse_named(text, &name).map_err(|e| render(&[e.to_diagnostic()], &name, text))?;
    if let Some(catalog) = catalog {
        let diags = typecheck(&program, catalog);
        if !diags.is_empty() {
            return Err(render(&diags, &name, text));
        }
    }
    Ok(program)
}

fn check(file: &Path, catalog: &Path) -> Res {
    let text = read(file)?;
    let catalog = load_catalog(None, catalog)?;
    parse_checked(file, &text, Some(&catalog)).map(|_| ())
}

fn fmt(io: &mut Io<'_>, file: &Path) -> Res {
    let text = read(file)?;
    let program = parse_checked(file, &text, None)?;
    emit(io, None, &format!("{}\n", print_canonical(&program)))
}

fn summarize(io: &mut Io<'_>, trace: &[TraceRecord]) -> Res {
    let mut failed = false;
    for r in trace.iter().filter(|r| r.kind == EventKind::ProgramEnd) {
        let outcome = match &r.value {
            Some(TraceValue::Outcome(o)) => *o,
            _ => continue,
        };
        failed |= outcome == Outcome::Failed;
        let word = match outcome {
            Outcome::Completed => "completed",
            Outcome::TickBudgetExhausted => "tick budget exhausted",
            Outcome::Failed => "failed",
        };
        let _ = match (&r.object, &r.method) {
            (Some(o), Some(m)) => writeln!(io.err, "{}: {word} at tick {} ({o}.{m})", r.agent, r.tick),
            _ => writeln!(io.err, "{}: {word} at tick {}", r.agent, r.tick),
        };
    }
    if failed {
        Err(Stop::Fault)
    } else {
        Ok(())
    }
}

fn run(
    io: &mut Io<'_>,
    file: &Path,
    catalog: &Path,
    world: &Path,
    agent: &str,
    max_ticks: u64,
    trace: Option<&Path>,
) -> Res {
    let text = read(file)?;
    let catalog = Arc::new(load_catalog(None, catalog)?);
    let program = parse_checked(file, &text, Some(&catalog))?;
    let world_text = read(world)?;
    let world =
        world_from_spec(&world_text).map_err(|e| Stop::Diagnostics(vec![format!("{}: {e}", world.display())]))?;
    if world.role(agent).is_none() {
        return Err(Stop::Usage(format!("no agent named {agent} in the world")));
    }
    let setup = Setup {
        world,
        programs: vec![AgentProgram {
            agent: agent.to_string(),
            program,
            catalog,
        }],
    };
    let mut s = Scenario::new(setup, max_ticks);
    let records = s.run().to_vec();
    emit(io, trace, &to_jsonl(&records))?;
    summarize(io, &records)
}

fn scenario(
    io: &mut Io<'_>,
    world: &Path,
    programs: &[(String, PathBuf)],
    max_ticks: u64,
    trace: Option<&Path>,
    server: Option<&str>,
    chunk: u64,
) -> Res {
    let mut texts = Vec::new();
    let mut files = BTreeMap::new();
    for (agent, path) in programs {
        texts.push((agent.clone(), read(path)?));
        files.insert(agent.clone(), path.clone());
    }
    let render_for = |agent: &str, diags: &[Diagnostic]| {
        let text = texts
            .iter()
            .find(|(a, _)| a == agent)
            .map(|(_, t)| t.as_str())
            .unwrap_or("");
        let name = files
            .get(agent)
            .map(|p| p.display().to_string())
            .unwrap_or_else(|| agent.to_string());
        render(diags, &name, text)
    };
    let records = match server {
        Some(url) => {
            let mut map = BTreeMap::new();
            for (agent, text) in &texts {
                if map.insert(agent.clone(), text.clone()).is_some() {
                    return Err(Stop::Usage(format!("two programs given for agent {agent}")));
                }
            }
            let req = NewSession {
                world: Some(read(world)?),
                programs: map,
                max_ticks: Some(max_ticks),
            };
            runtime()?
                .block_on(Client::new(url).run_session(&req, chunk))
                .map_err(|e| match e {
                    ClientError::Invalid {
                        agent: Some(agent),
                        diagnostics,
                        message,
                    } if !diagnostics.is_empty() || message.is_empty() => render_for(&agent, &diagnostics),
                    other => client_stop(other, |d| Stop::Diagnostics(d.iter().map(|d| d.to_string()).collect())),
                })?
        }
        None => {
            let setup = Setup::from_files(world, &texts).map_err(|e| match e {
                ScenarioError::Program { agent, diagnostics, .. } => render_for(&agent, &diagnostics),
                e
                @ (ScenarioError::Io { .. } | ScenarioError::UnknownAgent(_) | ScenarioError::DuplicateProgram(_)) => {
                    Stop::Usage(e.to_string())
                }
                e => Stop::Diagnostics(vec![format!("{}: {e}", world.display())]),
            })?;
            Scenario::new(setup, max_ticks).run().to_vec()
        }
    };
    emit(io, trace, &to_jsonl(&records))?;
    summarize(io, &records)
}

fn serve(io: &mut Io<'_>, host: &str, port: u16, config: kitrobot_service::Config) -> Res {
    let rt = runtime()?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind((host, port))
            .await
            .map_err(|e| Stop::Usage(format!("cannot listen on {host}:{port}: {e}")))?;
        if let Ok(addr) = listener.local_addr() {
            let _ = writeln!(io.err, "listening on http://{addr}");
            let _ = io.err.flush();
        }
        kitrobot_service::serve(listener, &config)
            .await
            .map_err(|e| Stop::Usage(format!("server error: {e}")))
    })
}
