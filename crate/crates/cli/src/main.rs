//! `moo`: transform, explain, run, run distributed, check equivalence.

use std::path::{Path, PathBuf};
use std::process::{Child, Command, ExitCode};
use std::sync::atomic::AtomicBool;
use std::sync::Arc;
use std::{fs, thread};
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

use moo_core::distrib::{self, DeployOptions, DistOutcome, Manifest, TransportKind};
use moo_core::interp::{self, BuiltinTable, ErrorKind, Limits, LocalHooks, RunFailure, Trace};
use moo_core::minioo::{self, CheckedProgram};
use moo_core::xform::{self, TransformOutput};

const OK: u8 = 0;
const FRONT: u8 = 1;
const RUNTIME: u8 = 2;
const TRANSPORT: u8 = 3;
const MISMATCH: u8 = 4;

#[derive(Parser)]
#[command(name = "moo", version, about = "Componentise MiniOO programs and run them locally or across nodes")]
#[command(after_help = "Exit codes: 0 ok, 1 front-end error, 2 runtime error, 3 transport failure, 4 trace mismatch.")]
struct Cli {
    /// Extra detail on stderr.
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write the componentised program and its transformability report.
    Transform {
        input: PathBuf,
        /// Output directory; receives <stem>.moo and <stem>.report.json.
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated proxy protocols; empty for a purely local build.
        #[arg(long, default_value = "RAF", value_delimiter = ',')]
        protocols: Vec<String>,
    },
    /// List transformable and non-transformable classes with reasons.
    Explain { input: PathBuf },
    /// Run a program (original or transformed) in one address space.
    Run {
        input: PathBuf,
        #[arg(long, default_value_t = interp::DEFAULT_STEP_BUDGET)]
        step_budget: u64,
    },
    /// Run a program across the nodes of a deployment manifest.
    RunDist {
        /// Original input is transformed first.
        input: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, value_enum, default_value_t = Transport::Loopback)]
        transport: Transport,
        /// `threads` runs every node here; `processes` spawns one process per non-entry node (TCP, fixed ports).
        #[arg(long, value_enum, default_value_t = Harness::Threads)]
        harness: Harness,
        /// Serve as this single node of a multi-process deployment.
        #[arg(long)]
        node: Option<String>,
        #[arg(long, default_value_t = interp::DEFAULT_STEP_BUDGET)]
        step_budget: u64,
    },
    /// Compare traces of the original, the transformed program and, with a manifest, a distributed run.
    CheckEquiv {
        input: PathBuf,
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Use this transformed program instead of transforming the input.
        #[arg(long)]
        transformed: Option<PathBuf>,
        #[arg(long, default_value = "RAF", value_delimiter = ',')]
        protocols: Vec<String>,
        #[arg(long, default_value_t = interp::DEFAULT_STEP_BUDGET)]
        step_budget: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Transport {
    Loopback,
    Tcp,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Harness {
    Threads,
    Processes,
}

struct Failure(u8, String);

type Res<T> = Result<T, Failure>;

fn front(msg: impl std::fmt::Display) -> Failure {
    Failure(FRONT, msg.to_string())
}

fn read(path: &Path) -> Res<String> {
    fs::read_to_string(path).map_err(|e| front(format!("{}: {e}", path.display())))
}

fn compile(path: &Path) -> Res<CheckedProgram> {
    let src = read(path)?;
    minioo::compile(&src).map_err(|e| front(format!("{}:{e}", path.display())))
}

fn transform(p: &CheckedProgram, protocols: &[String]) -> Res<TransformOutput> {
    let protocols: Vec<String> = protocols.iter().filter(|s| !s.is_empty()).cloned().collect();
    xform::transform_program(p, &protocols).map_err(front)
}

/// The transformed program, transforming original input.
fn transformed(p: CheckedProgram, protocols: &[String]) -> Res<CheckedProgram> {
    if p.is_transformed() {
        return Ok(p);
    }
    let text = transform(&p, protocols)?.text();
    minioo::compile(&text).map_err(|e| Failure(FRONT, format!("transformed program: {e}")))
}

fn limits(step_budget: u64) -> Limits {
    Limits { step_budget, ..Limits::default() }
}

fn print_trace(t: &[String]) {
    for line in t {
        println!("{line}");
    }
}

fn runtime_code(kind: ErrorKind) -> u8 {
    if kind == ErrorKind::Transport {
        TRANSPORT
    } else {
        RUNTIME
    }
}

fn run_local(p: &CheckedProgram, step_budget: u64) -> Result<Trace, RunFailure> {
    interp::run_program(Arc::new(p.clone()), &mut LocalHooks, Arc::new(BuiltinTable::standard()), limits(step_budget))
}

fn cmd_transform(input: &Path, out: &Path, protocols: &[String], verbose: bool) -> Res<()> {
    let p = compile(input)?;
    let t = transform(&p, protocols)?;
    let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    fs::create_dir_all(out).map_err(|e| front(format!("{}: {e}", out.display())))?;
    let moo = out.join(format!("{stem}.moo"));
    let report = out.join(format!("{stem}.report.json"));
    fs::write(&moo, t.text()).map_err(|e| front(format!("{}: {e}", moo.display())))?;
    fs::write(&report, t.report().to_json() + "\n").map_err(|e| front(format!("{}: {e}", report.display())))?;
    if verbose {
        eprintln!("wrote {} and {}", moo.display(), report.display());
        eprintln!("{} transformable, {} not", t.set.transformable.len(), t.set.non_transformable.len());
    }
    Ok(())
}

fn cmd_explain(input: &Path) -> Res<()> {
    let p = compile(input)?;
    let set = xform::compute_transformable_set(&p);
    println!("transformable:");
    for c in &set.transformable {
        println!("  {c}");
    }
    println!("non-transformable:");
    for c in &set.non_transformable {
        println!("  {c}");
        for j in &set.reasons[c] {
            println!("    {j}");
        }
    }
    Ok(())
}

fn cmd_run(input: &Path, step_budget: u64, verbose: bool) -> Res<()> {
    let p = compile(input)?;
    match run_local(&p, step_budget) {
        Ok(t) => {
            print_trace(&t);
            if verbose {
                eprintln!("{} lines", t.len());
            }
            Ok(())
        }
        Err(f) => {
            print_trace(&f.trace);
            Err(Failure(runtime_code(f.error.kind), format!("{}:{}", input.display(), f.error)))
        }
    }
}

fn manifest(path: &Path) -> Res<Manifest> {
    Manifest::parse(&read(path)?).map_err(|e| front(format!("{}: {e}", path.display())))
}

fn deploy_error(e: distrib::DeployError) -> Failure {
    match e {
        distrib::DeployError::Transport(t) => Failure(TRANSPORT, t.to_string()),
        distrib::DeployError::Runtime(r) => Failure(runtime_code(r.kind), r.to_string()),
        other => front(other),
    }
}

fn report_nodes(out: &DistOutcome) {
    for r in out.nodes.values() {
        eprintln!(
            "node {}: served {}, instances {:?}, exported {:?}, singletons {:?}, clinit {:?}{}",
            r.node,
            r.served,
            r.instances,
            r.exported,
            r.singletons,
            r.clinit_runs,
            if r.crashed { ", crashed" } else { "" }
        );
    }
}

struct Children(Vec<Child>);

impl Drop for Children {
    fn drop(&mut self) {
        for c in &mut self.0 {
            let _ = c.kill();
            let _ = c.wait();
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_run_dist(
    input: &Path,
    manifest_path: &Path,
    transport: Transport,
    harness: Harness,
    node: Option<&str>,
    step_budget: u64,
    verbose: bool,
) -> Res<()> {
    let m = manifest(manifest_path)?;
    let p = Arc::new(transformed(compile(input)?, std::slice::from_ref(&m.protocol))?);
    let mut opts = DeployOptions { limits: limits(step_budget), ..DeployOptions::default() };
    opts.transport = match transport {
        Transport::Loopback => TransportKind::Loopback,
        Transport::Tcp => TransportKind::Tcp,
    };
    let never = Arc::new(AtomicBool::new(false));
    let out = if let Some(id) = node {
        distrib::run_node_process(p, &m, id, &opts, never).map_err(deploy_error)?
    } else if harness == Harness::Processes {
        let exe = std::env::current_exe().map_err(|e| front(e.to_string()))?;
        let mut children = Children(Vec::new());
        for n in m.nodes.iter().filter(|n| n.id != m.entry) {
            let child = Command::new(&exe)
                .arg("run-dist")
                .arg(input)
                .arg("--manifest")
                .arg(manifest_path)
                .arg("--node")
                .arg(&n.id)
                .arg("--step-budget")
                .arg(step_budget.to_string())
                .spawn()
                .map_err(|e| Failure(TRANSPORT, format!("spawn node {}: {e}", n.id)))?;
            children.0.push(child);
        }
        // Peers retry their dials, so the nodes need no ordering beyond this grace period.
        thread::sleep(Duration::from_millis(100));
        let entry = m.entry.clone();
        distrib::run_node_process(p, &m, &entry, &opts, never).map_err(deploy_error)?
    } else {
        distrib::run_deployment(p, &m, &opts).map_err(deploy_error)?
    };
    print_trace(&out.marked_trace());
    if verbose {
        report_nodes(&out);
    }
    match out.error {
        None => Ok(()),
        Some(e) => Err(Failure(runtime_code(e.kind), format!("{}:{e}", input.display()))),
    }
}

/// The trace plus a final line naming the error, if the run failed.
fn observed(r: Result<Trace, RunFailure>) -> Trace {
    match r {
        Ok(t) => t,
        Err(f) => {
            let mut t = f.trace;
            t.push(format!("!error: {}", f.error.kind.label()));
            t
        }
    }
}

fn print_diff(a_name: &str, a: &[String], b_name: &str, b: &[String]) {
    println!("--- {a_name}");
    println!("+++ {b_name}");
    for i in 0..a.len().max(b.len()) {
        match (a.get(i), b.get(i)) {
            (Some(x), Some(y)) if x == y => println!("  {x}"),
            (x, y) => {
                if let Some(x) = x {
                    println!("- {x}");
                }
                if let Some(y) = y {
                    println!("+ {y}");
                }
            }
        }
    }
}

fn cmd_check_equiv(
    input: &Path,
    manifest_path: Option<&Path>,
    transformed_path: Option<&Path>,
    protocols: &[String],
    step_budget: u64,
    verbose: bool,
) -> Res<()> {
    let p = compile(input)?;
    let t = match transformed_path {
        Some(path) => compile(path)?,
        None => transformed(p.clone(), protocols)?,
    };
    let mut runs: Vec<(String, Trace)> = Vec::new();
    if !p.is_transformed() {
        runs.push(("original".into(), observed(run_local(&p, step_budget))));
    }
    runs.push(("transformed-local".into(), observed(run_local(&t, step_budget))));
    if let Some(mp) = manifest_path {
        let m = manifest(mp)?;
        let opts = DeployOptions { limits: limits(step_budget), ..DeployOptions::default() };
        let out = distrib::run_deployment(Arc::new(t), &m, &opts).map_err(deploy_error)?;
        if verbose {
            report_nodes(&out);
        }
        let mut trace = out.marked_trace();
        if let Some(e) = out.error.filter(|e| e.kind != ErrorKind::Transport) {
            trace.push(format!("!error: {}", e.kind.label()));
        }
        runs.push(("distributed".into(), trace));
    }
    let (base_name, base) = &runs[0];
    let mut equal = true;
    for (name, trace) in &runs[1..] {
        if !interp::trace_equal(base, trace) {
            equal = false;
            print_diff(base_name, base, name, trace);
        }
    }
    if verbose {
        for (name, trace) in &runs {
            eprintln!("{name}: {} lines", trace.len());
        }
    }
    if equal {
        println!("equivalent ({})", runs.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>().join(", "));
        Ok(())
    } else {
        Err(Failure(MISMATCH, "traces differ".into()))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { FRONT } else { OK });
        }
    };
    let v = cli.verbose;
    let r = match &cli.cmd {
        Cmd::Transform { input, out, protocols } => cmd_transform(input, out, protocols, v),
        Cmd::Explain { input } => cmd_explain(input),
        Cmd::Run { input, step_budget } => cmd_run(input, *step_budget, v),
        Cmd::RunDist { input, manifest, transport, harness, node, step_budget } => {
            cmd_run_dist(input, manifest, *transport, *harness, node.as_deref(), *step_budget, v)
        }
        Cmd::CheckEquiv { input, manifest, transformed, protocols, step_budget } => {
            cmd_check_equiv(input, manifest.as_deref(), transformed.as_deref(), protocols, *step_budget, v)
        }
    };
    match r {
        Ok(()) => ExitCode::from(OK),
        Err(Failure(code, msg)) => {
            eprintln!("{msg}");
            ExitCode::from(code)
        }
    }
}
