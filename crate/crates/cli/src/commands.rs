//! The `run`, `verify` and `oracle` subcommands. Each returns the process
//! exit code; the code depends only on the verdict.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Subcommand};
use serde::Serialize;
use serde_json::Value;

use gridex_core::engine::{
    random_towerless, run, write_trace, Adversary, RandomAdversary, RunLimits, ScriptedAdversary, SequentialAdversary,
    SynchronousAdversary, TraceEvent, TraceHeader, Verdict,
};
use gridex_core::protocols::{observer_for, protocol_by_name, SabotagedGeneral3};
use gridex_core::verifier::full_tower::full_tower_analysis;
use gridex_core::verifier::impossibility::{search_protocol_space, DEFAULT_CLASS_CAP};
use gridex_core::verifier::tower_walk::tower_walk_bound;
use gridex_core::verifier::{verify, Outcome, VerifyOptions, DEFAULT_BUDGET};
use gridex_core::{Configuration, EngineState, Error, GridDims, Model, Multiplicity, Protocol, SchedulerAction};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;

#[derive(Debug, Clone, Args)]
pub struct InstanceArgs {
    /// Grid dimensions, e.g. 3x4.
    #[arg(long)]
    pub grid: GridDims,
    #[arg(long)]
    pub protocol: String,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value = "weak")]
    pub mode: Multiplicity,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    /// Initial configuration, e.g. "0,0;1,0;2,0". Sampled from --seed when omitted.
    #[arg(long)]
    pub initial: Option<String>,
    #[arg(long, default_value = "atom")]
    pub model: Model,
    /// random, sequential, synchronous or script:FILE.
    #[arg(long, default_value = "random")]
    pub adversary: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100_000)]
    pub max_steps: u64,
    /// Write the execution as newline-delimited JSON.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[arg(long)]
    pub model: Model,
    /// Maximum number of abstract states.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: usize,
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Where to write a counterexample trace.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Worker threads (all cores by default).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Skip symmetry reduction.
    #[arg(long)]
    pub no_canonicalize: bool,
    /// Verify a deliberately broken variant (self-test of the verifier).
    #[arg(long, hide = true)]
    pub sabotage: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum OracleCommand {
    /// Longest class-simple walk of one robot around an immobile 2-tower on (3,3).
    TowerWalk {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Destination orbits of a k-tower on (3,3).
    FullTower {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Model-checks every deterministic protocol of a tiny instance.
    Impossibility {
        #[arg(long)]
        grid: GridDims,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = DEFAULT_CLASS_CAP)]
        cap: usize,
        #[arg(long, default_value = "strong")]
        mode: Multiplicity,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// The adversary named on the command line.
pub fn adversary_from(spec: &str, seed: u64) -> anyhow::Result<Box<dyn Adversary>> {
    if let Some(path) = spec.strip_prefix("script:") {
        let file = File::open(path).with_context(|| format!("cannot open script {path}"))?;
        return Ok(Box::new(ScriptedAdversary::new(read_script(BufReader::new(file))?)));
    }
    Ok(match spec {
        "random" => Box::new(RandomAdversary::new(seed)),
        "sequential" => Box::<SequentialAdversary>::default(),
        "synchronous" => Box::<SynchronousAdversary>::default(),
        other => anyhow::bail!("unknown adversary {other:?} (random, sequential, synchronous or script:FILE)"),
    })
}

/// Reads scheduler actions, one JSON value per line. Trace files are
/// accepted too: their header is skipped and each event contributes its
/// action.
pub fn read_script(r: impl BufRead) -> anyhow::Result<Vec<SchedulerAction>> {
    let mut out = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let v: Value = serde_json::from_str(&line).with_context(|| format!("script line {}", n + 1))?;
        if v.get("grid").is_some() {
            continue;
        }
        let action = v.get("action").cloned().unwrap_or(v);
        out.push(serde_json::from_value(action).with_context(|| format!("script line {}", n + 1))?);
    }
    Ok(out)
}

pub fn resolve_protocol(instance: &InstanceArgs) -> gridex_core::Result<Arc<dyn Protocol>> {
    protocol_by_name(&instance.protocol, instance.grid, instance.k)
}

/// The initial configuration given on the command line, or one sampled by seed.
pub fn initial_configuration(grid: GridDims, k: usize, initial: Option<&str>, seed: u64) -> gridex_core::Result<Configuration> {
    let c = match initial {
        Some(s) => Configuration::parse(grid, s)?,
        None => random_towerless(grid, k, seed)?,
    };
    if c.robot_count() as usize != k {
        return Err(Error::InvalidConfiguration(format!("{c} holds {} robots, expected {k}", c.robot_count())));
    }
    if !c.is_towerless() {
        return Err(Error::InvalidConfiguration(format!("{c} contains a tower")));
    }
    Ok(c)
}

pub fn trace_header(instance: &InstanceArgs, model: Model, initial: &Configuration, seed: u64) -> TraceHeader {
    TraceHeader {
        grid: instance.grid.to_string(),
        k: instance.k,
        protocol: instance.protocol.clone(),
        model,
        mode: instance.mode,
        initial: initial.to_string(),
        seed: Some(seed),
    }
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> anyhow::Result<()>) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

fn save_trace(path: &Path, header: &TraceHeader, events: &[TraceEvent]) -> anyhow::Result<()> {
    write_file(path, |w| Ok(write_trace(w, header, events)?))
}

fn usage(err: impl std::fmt::Display) -> i32 {
    eprintln!("error: {err}");
    EXIT_USAGE
}

pub fn cmd_run(args: &RunArgs) -> i32 {
    match run_inner(args) {
        Ok(verdict) => {
            if verdict.success() {
                EXIT_OK
            } else {
                EXIT_FAILED
            }
        }
        Err(e) => usage(format!("{e:#}")),
    }
}

fn run_inner(args: &RunArgs) -> anyhow::Result<Verdict> {
    let protocol = resolve_protocol(&args.instance)?;
    let grid = args.instance.grid;
    let initial = initial_configuration(grid, args.instance.k, args.initial.as_deref(), args.seed)?;
    let mut adversary = adversary_from(&args.adversary, args.seed)?;
    let mut state = EngineState::init(&initial, protocol, args.model, args.instance.mode)?;
    let outcome = run(&mut state, adversary.as_mut(), RunLimits { max_steps: args.max_steps })?;
    if let Some(path) = &args.trace {
        save_trace(path, &trace_header(&args.instance, args.model, &initial, args.seed), &outcome.events)?;
    }
    let v = outcome.verdict;
    println!(
        "{} on {} ({} robots, {}): initial {initial}, {} steps, visited {}/{}, explored={} quiescent={}{}",
        args.instance.protocol,
        grid,
        args.instance.k,
        args.model,
        state.step_count(),
        state.visited_count(),
        grid.node_count(),
        v.explored,
        v.quiescent,
        if v.timed_out { " (step limit reached)" } else { "" }
    );
    Ok(v)
}

pub fn cmd_verify(args: &VerifyArgs) -> i32 {
    match verify_inner(args) {
        Ok(code) => code,
        Err(e) => usage(format!("{e:#}")),
    }
}

fn verify_inner(args: &VerifyArgs) -> anyhow::Result<i32> {
    let inst = &args.instance;
    let mut protocol = resolve_protocol(inst)?;
    let mut observer = observer_for(&inst.protocol);
    if args.sabotage {
        anyhow::ensure!(inst.protocol == "general3", "only general3 has a sabotaged variant");
        protocol = Arc::new(SabotagedGeneral3);
        observer = None;
    }
    let options = VerifyOptions {
        budget: args.budget,
        canonicalize: !args.no_canonicalize,
        jobs: args.jobs,
        initials: None,
        observer,
    };
    let report = verify(inst.grid, protocol, inst.k, args.model, inst.mode, &options)?;
    if let Some(path) = &args.report {
        write_file(path, |w| Ok(serde_json::to_writer_pretty(w, &report)?))?;
    }
    println!(
        "{} on {} ({} robots, {}, {}): {:?}, {} states, {} edges, {} initial classes, {} ms",
        report.protocol,
        report.grid,
        report.k,
        report.model,
        report.mode,
        report.outcome,
        report.states,
        report.edges,
        report.initial_classes,
        report.elapsed_ms
    );
    for v in report.observer_violations.iter().take(5) {
        println!("phase violation: {v}");
    }
    let code = match report.outcome {
        Outcome::Inconclusive => EXIT_INCONCLUSIVE,
        _ if report.passed() => EXIT_OK,
        _ => EXIT_FAILED,
    };
    if let Some(cx) = &report.counterexample {
        let path = args.trace.clone().unwrap_or_else(|| match &args.report {
            Some(r) => r.with_extension("counterexample.jsonl"),
            None => PathBuf::from("counterexample.jsonl"),
        });
        let initial = Configuration::parse(inst.grid, &cx.initial)?;
        let mut header = trace_header(inst, args.model, &initial, 0);
        header.protocol = report.protocol.clone();
        save_trace(&path, &header, &cx.trace)?;
        println!("counterexample ({:?}, {} events): {}", cx.kind, cx.trace.len(), path.display());
    }
    Ok(code)
}

#[derive(Debug, Serialize)]
struct Certificate<T: Serialize> {
    oracle: &'static str,
    command: String,
    elapsed_ms: u128,
    holds: bool,
    result: T,
}

fn emit<T: Serialize>(cert: &Certificate<T>, out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(path) => write_file(path, |w| {
            serde_json::to_writer_pretty(&mut *w, cert)?;
            writeln!(w)?;
            Ok(())
        }),
        None => {
            println!("{}", serde_json::to_string_pretty(cert)?);
            Ok(())
        }
    }
}

pub fn cmd_oracle(cmd: &OracleCommand, command_line: String) -> i32 {
    match oracle_inner(cmd, command_line) {
        Ok(code) => code,
        Err(e) => match e.downcast_ref::<Error>() {
            Some(Error::CapExceeded(msg)) => {
                eprintln!("error: instance too large for enumeration: {msg}");
                EXIT_INCONCLUSIVE
            }
            _ => usage(format!("{e:#}")),
        },
    }
}

fn oracle_inner(cmd: &OracleCommand, command: String) -> anyhow::Result<i32> {
    let started = Instant::now();
    let code = |holds: bool| if holds { EXIT_OK } else { EXIT_FAILED };
    match cmd {
        OracleCommand::TowerWalk { out } => {
            let r = tower_walk_bound(GridDims::new(3, 3)?)?;
            let holds = r.max_new_visited <= 4;
            eprintln!(
                "tower walk on {}: at most {} new nodes ({} classes), bound 4 {}",
                r.grid,
                r.max_new_visited,
                r.class_count,
                if holds { "holds" } else { "VIOLATED" }
            );
            let cert =
                Certificate { oracle: "tower-walk", command, elapsed_ms: started.elapsed().as_millis(), holds, result: r };
            emit(&cert, out.as_deref())?;
            Ok(code(holds))
        }
        OracleCommand::FullTower { k, out } => {
            let r = full_tower_analysis(*k)?;
            let holds = r.max_new_nodes <= 1;
            eprintln!("{}-tower on 3x3: at most {} new node(s)", r.k, r.max_new_nodes);
            let cert =
                Certificate { oracle: "full-tower", command, elapsed_ms: started.elapsed().as_millis(), holds, result: r };
            emit(&cert, out.as_deref())?;
            Ok(code(holds))
        }
        OracleCommand::Impossibility { grid, k, cap, mode, out } => {
            let r = search_protocol_space(*grid, *k, *mode, *cap)?;
            let verdict = if r.no_correct_protocol {
                "no correct protocol exists".to_string()
            } else if r.correct_protocols.is_empty() {
                format!("no protocol proven correct, {} inconclusive", r.inconclusive)
            } else {
                format!("{} correct protocol(s)", r.correct_protocols.len())
            };
            eprintln!("{k} robots on {grid}: {} view classes, {} protocols, {verdict}", r.view_classes.len(), r.protocols);
            let conclusive = r.inconclusive == 0 || !r.correct_protocols.is_empty();
            let cert = Certificate {
                oracle: "impossibility",
                command,
                elapsed_ms: started.elapsed().as_millis(),
                holds: r.no_correct_protocol,
                result: r,
            };
            emit(&cert, out.as_deref())?;
            Ok(if conclusive { EXIT_OK } else { EXIT_INCONCLUSIVE })
        }
    }
}
