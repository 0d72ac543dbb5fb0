//! Acceptance suite: one PASS/FAIL line per criterion, with the wall-time
//! limits pinned below. Runs without the libtest harness so the lines are
//! never captured.

use std::io::Write;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use gridex_core::config::towerless_configurations;
use gridex_core::engine::{
    random_towerless, read_trace, replay, run, write_trace, Adversary, Pending, RandomAdversary, RunLimits, TraceHeader,
};
use gridex_core::protocols::{classify_setup, protocol_by_name, protocol_for, SetupCase};
use gridex_core::{
    Automorphism, Configuration, EngineState, GridDims, Model, Multiplicity, NodeCoord, Protocol, SchedulerAction,
};

const GRID23_LIMIT: Duration = Duration::from_secs(10);
const FIVE33_LIMIT: Duration = Duration::from_secs(300);
const GENERAL3_LIMIT: Duration = Duration::from_secs(600);
const TOWER_WALK_LIMIT: Duration = Duration::from_secs(10);
const IMPOSSIBILITY_LIMIT: Duration = Duration::from_secs(600);
const RANDOM_SCHEDULES: u64 = 10_000;
const PROPERTY_SEEDS: u64 = 1_000;
const THRESHOLD_CONFIGS: usize = 10_000;

type Check = anyhow::Result<String>;

fn grid(a: usize, b: usize) -> GridDims {
    GridDims::new(a, b).unwrap()
}

fn gridex(args: &[&str]) -> anyhow::Result<(i32, String)> {
    let o = Command::new(env!("CARGO_BIN_EXE_gridex")).args(args).output()?;
    let code = o.status.code().ok_or_else(|| anyhow::anyhow!("killed by a signal"))?;
    Ok((code, String::from_utf8_lossy(&o.stdout).into_owned()))
}

fn report(dir: &Path, args: &[&str]) -> anyhow::Result<(i32, Value)> {
    let path = dir.join("report.json");
    let mut full = args.to_vec();
    full.extend(["--report", path.to_str().unwrap()]);
    let (code, _) = gridex(&full)?;
    Ok((code, serde_json::from_slice(&std::fs::read(&path)?)?))
}

fn within(started: Instant, limit: Duration) -> anyhow::Result<Duration> {
    let t = started.elapsed();
    anyhow::ensure!(t < limit, "took {t:.2?}, limit {limit:?}");
    Ok(t)
}

/// Exhaustive pass with every initial configuration explored and covered.
fn exhaustive(dir: &Path, g: &str, protocol: &str, k: &str, model: &str, initials: usize) -> anyhow::Result<()> {
    let args = ["verify", "--grid", g, "--protocol", protocol, "--k", k, "--model", model];
    let (code, r) = report(dir, &args)?;
    anyhow::ensure!(code == 0, "{protocol} on {g} {model}: exit {code}, outcome {}", r["outcome"]);
    let per = r["per_initial"].as_array().unwrap();
    anyhow::ensure!(per.len() == initials, "{} initials, expected {initials}", per.len());
    anyhow::ensure!(per.iter().all(|v| v["explored"] == true && v["terminates_under_fairness"] == true));
    anyhow::ensure!(r["min_quiescent_visited"] == Value::from(g_nodes(g)), "a quiescent state leaves nodes unvisited");
    anyhow::ensure!(r["observer_violation_count"] == 0, "phase violations: {}", r["observer_violations"]);
    Ok(())
}

fn g_nodes(g: &str) -> usize {
    g.parse::<GridDims>().unwrap().node_count()
}

fn grid23(dir: &Path) -> Check {
    let started = Instant::now();
    for model in ["atom", "corda"] {
        exhaustive(dir, "2x3", "grid23", "3", model, 20)?;
    }
    let t = within(started, GRID23_LIMIT)?;
    Ok(format!("20 initials, atom and corda, all 6 nodes, {t:.2?}"))
}

fn five33(dir: &Path) -> Check {
    let started = Instant::now();
    for model in ["atom", "corda"] {
        exhaustive(dir, "3x3", "five33", "5", model, 126)?;
    }
    let t = within(started, FIVE33_LIMIT)?;
    Ok(format!("126 initials, atom and corda, all 9 nodes, {t:.2?}"))
}

fn randomized_corda(g: GridDims) -> anyhow::Result<()> {
    let p = protocol_by_name("general3", g, 3)?;
    for seed in 0..RANDOM_SCHEDULES {
        let c = random_towerless(g, 3, seed)?;
        let mut s = EngineState::init(&c, p.clone(), Model::Corda, Multiplicity::Weak)?;
        let mut adversary = RandomAdversary::new(seed);
        let mut previous = s.config().clone();
        let mut oriented = false;
        for _ in 0..1_000_000 {
            if s.is_quiescent()? {
                break;
            }
            let a = adversary.choose(&s)?.expect("random adversary always acts");
            s.step(&a)?;
            if !oriented && !s.config().is_towerless() {
                anyhow::ensure!(classify_setup(&previous)? == SetupCase::SetUpDone, "{g} seed {seed}: early tower");
                anyhow::ensure!(classify_setup(s.config())? == SetupCase::Oriented, "{g} seed {seed}: not oriented");
                oriented = true;
            }
            previous = s.config().clone();
        }
        anyhow::ensure!(s.is_quiescent()? && s.explored(), "{g} seed {seed}: not explored and quiescent");
    }
    Ok(())
}

fn orientation_in_one_move(g: GridDims) -> anyhow::Result<usize> {
    let p = protocol_by_name("general3", g, 3)?;
    let mut lines = 0;
    for c in towerless_configurations(g, 3) {
        if classify_setup(&c)? != SetupCase::SetUpDone {
            continue;
        }
        lines += 1;
        let s = EngineState::init(&c, p.clone(), Model::Atom, Multiplicity::Weak)?;
        for a in s.enabled_actions()?.expand() {
            let mut t = s.clone();
            t.step(&a)?;
            if t.config() != &c {
                anyhow::ensure!(classify_setup(t.config())? == SetupCase::Oriented, "{c} on {g}");
            }
        }
    }
    Ok(lines)
}

fn general3(dir: &Path) -> Check {
    let started = Instant::now();
    for g in ["1x4", "1x5", "2x4", "3x4", "2x5"] {
        exhaustive(dir, g, "general3", "3", "atom", binomial(g_nodes(g), 3))?;
    }
    for g in ["2x4", "3x4"] {
        exhaustive(dir, g, "general3", "3", "corda", binomial(g_nodes(g), 3))?;
    }
    for g in [grid(3, 5), grid(4, 4)] {
        randomized_corda(g)?;
    }
    let mut lines = 0;
    for (a, b) in [(1, 4), (1, 5), (2, 4), (3, 4), (2, 5), (3, 5), (4, 4)] {
        lines += orientation_in_one_move(grid(a, b))?;
    }
    let t = within(started, GENERAL3_LIMIT)?;
    Ok(format!(
        "atom on 5 grids, corda on 2 grids, {RANDOM_SCHEDULES} random corda schedules on 3x5 and 4x4, \
         no early tower, {lines} set-up lines orient in one move, {t:.2?}"
    ))
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn tower_walk() -> Check {
    let started = Instant::now();
    let (code, out) = gridex(&["oracle", "tower-walk"])?;
    let t = within(started, TOWER_WALK_LIMIT)?;
    anyhow::ensure!(code == 0, "exit {code}");
    let cert: Value = serde_json::from_str(&out)?;
    let r = &cert["result"];
    let max = r["max_new_visited"].as_u64().unwrap();
    anyhow::ensure!(max <= 4, "a walk visits {max} new nodes");
    anyhow::ensure!(max == 4, "golden maximum is 4, found {max}");
    anyhow::ensure!(r["witness_walk"].as_array().unwrap().len() > max as usize, "witness too short");
    Ok(format!("max new visited {max} (bound 4), witness tower {}, {t:.2?}", r["witness_tower"]))
}

fn impossibility() -> Check {
    let mut parts = Vec::new();
    for (g, classes, protocols) in [("1x3", 5, 48), ("2x2", 3, 12)] {
        let started = Instant::now();
        let (code, out) = gridex(&["oracle", "impossibility", "--grid", g, "--k", "2"])?;
        let t = within(started, IMPOSSIBILITY_LIMIT)?;
        anyhow::ensure!(code == 0, "{g}: exit {code}");
        let cert: Value = serde_json::from_str(&out)?;
        anyhow::ensure!(cert["holds"] == true, "{g}: some protocol explores");
        let r = &cert["result"];
        anyhow::ensure!(r["view_classes"].as_array().unwrap().len() == classes && r["protocols"] == protocols);
        anyhow::ensure!(r["inconclusive"] == 0);
        parts.push(format!("{g}: none of {protocols} protocols explores ({t:.2?})"));
    }
    Ok(parts.join(", "))
}

fn protocol(g: GridDims, k: usize) -> Arc<dyn Protocol> {
    protocol_by_name(protocol_for(g, k).unwrap(), g, k).unwrap()
}

fn instances() -> [(GridDims, usize); 5] {
    [(grid(3, 4), 3), (grid(2, 3), 3), (grid(3, 3), 5), (grid(2, 5), 3), (grid(4, 4), 3)]
}

fn random_configuration(rng: &mut ChaCha8Rng) -> Configuration {
    let g = grid(rng.gen_range(1..=4), rng.gen_range(1..=5));
    loop {
        let counts: Vec<u32> = (0..g.node_count()).map(|_| rng.gen_range(0..4)).collect();
        if counts.iter().any(|&n| n > 0) {
            return Configuration::from_counts(g, counts).unwrap();
        }
    }
}

fn threshold_and_canonical_forms() -> anyhow::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in 0..THRESHOLD_CONFIGS {
        let c = random_configuration(&mut rng);
        let strong = c.observe(Multiplicity::Strong);
        for (w, s) in c.observe(Multiplicity::Weak).iter().zip(&strong) {
            anyhow::ensure!(*w == s.threshold(), "weak view of {c} is not the threshold");
        }
        if n % 5 == 0 {
            let cf = c.canonical_form();
            anyhow::ensure!(c.apply(&cf.witness) == cf.representative);
            anyhow::ensure!(cf.representative.canonical_form().representative == cf.representative, "not idempotent");
            for f in c.grid().automorphisms() {
                anyhow::ensure!(c.apply(&f).canonical_form().representative == cf.representative, "not invariant");
            }
        }
    }
    Ok(())
}

fn sequential_corda_is_singleton_atom() -> anyhow::Result<()> {
    for seed in 0..PROPERTY_SEEDS {
        let (g, k) = instances()[seed as usize % instances().len()];
        let c = random_towerless(g, k, seed)?;
        let mut atom = EngineState::init(&c, protocol(g, k), Model::Atom, Multiplicity::Weak)?;
        let mut corda = EngineState::init(&c, protocol(g, k), Model::Corda, Multiplicity::Weak)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..60 {
            let r = rng.gen_range(0..k);
            let options = atom.decision_for(r)?.targets().len();
            let t = if options == 0 { 0 } else { rng.gen_range(0..options) };
            atom.step(&SchedulerAction::Activate { robots: vec![r], tie_breaks: vec![t] })?;
            corda.step(&SchedulerAction::Look { robot: r })?;
            if corda.robots()[r].pending != Pending::Idle {
                corda.step(&SchedulerAction::Move { robot: r, tie_break: t })?;
            }
            anyhow::ensure!(atom.config() == corda.config() && atom.visited() == corda.visited(), "seed {seed}");
        }
    }
    Ok(())
}

fn mapped_tie(orig: &[NodeCoord], image: &[NodeCoord], t: usize, g: GridDims, f: &Automorphism) -> usize {
    let want = f.apply(g, orig[t]);
    image.iter().position(|&v| v == want).expect("image decision is the mapped decision")
}

fn stored(s: &EngineState, r: usize) -> Vec<NodeCoord> {
    match &s.robots()[r].pending {
        Pending::Computed { targets, .. } => targets.clone(),
        Pending::Idle => Vec::new(),
    }
}

fn runs_are_equivariant() -> anyhow::Result<()> {
    for seed in 0..PROPERTY_SEEDS {
        let (g, k) = instances()[seed as usize % instances().len()];
        let model = if seed % 2 == 0 { Model::Atom } else { Model::Corda };
        let group = g.automorphisms();
        let f = group[seed as usize % group.len()];
        let c = random_towerless(g, k, seed)?;
        let mut orig = EngineState::init(&c, protocol(g, k), model, Multiplicity::Weak)?;
        let mut image = EngineState::init(&c.apply(&f), protocol(g, k), model, Multiplicity::Weak)?;
        let ids: Vec<usize> = orig
            .robots()
            .iter()
            .map(|s| image.robots().iter().position(|t| t.pos == f.apply(g, s.pos)).unwrap())
            .collect();
        let mut adversary = RandomAdversary::new(seed);
        for _ in 0..80 {
            let Some(a) = adversary.choose(&orig)? else { break };
            let b = match &a {
                SchedulerAction::Activate { robots, tie_breaks } => {
                    let mut ties = Vec::new();
                    for (&r, &t) in robots.iter().zip(tie_breaks) {
                        let o = orig.decision_for(r)?;
                        let i = image.decision_for(ids[r])?;
                        ties.push(if o.targets().is_empty() { 0 } else { mapped_tie(o.targets(), i.targets(), t, g, &f) });
                    }
                    SchedulerAction::Activate { robots: robots.iter().map(|&r| ids[r]).collect(), tie_breaks: ties }
                }
                SchedulerAction::Look { robot } => SchedulerAction::Look { robot: ids[*robot] },
                SchedulerAction::Move { robot, tie_break } => SchedulerAction::Move {
                    robot: ids[*robot],
                    tie_break: mapped_tie(&stored(&orig, *robot), &stored(&image, ids[*robot]), *tie_break, g, &f),
                },
            };
            orig.step(&a)?;
            image.step(&b)?;
            anyhow::ensure!(image.config() == &orig.config().apply(&f), "seed {seed}: configurations diverge");
        }
    }
    Ok(())
}

fn decision_orbits_during_verification() -> anyhow::Result<usize> {
    let mut checked = 0;
    for (g, name, k) in [(grid(2, 3), "grid23", 3), (grid(3, 3), "five33", 5), (grid(3, 4), "general3", 3)] {
        for model in [Model::Atom, Model::Corda] {
            let p = protocol_by_name(name, g, k)?;
            let options = gridex_core::verifier::VerifyOptions::default();
            let r = gridex_core::verifier::verify(g, p, k, model, Multiplicity::Weak, &options)?;
            anyhow::ensure!(r.passed(), "{name} {model}");
            checked += r.decisions_checked;
        }
    }
    Ok(checked)
}

fn traces_replay() -> anyhow::Result<()> {
    for seed in 0..200u64 {
        let (g, k) = instances()[seed as usize % instances().len()];
        let model = if seed % 3 == 0 { Model::Atom } else { Model::Corda };
        let c = random_towerless(g, k, seed)?;
        let mut s = EngineState::init(&c, protocol(g, k), model, Multiplicity::Weak)?;
        let fresh = s.clone();
        let out = run(&mut s, &mut RandomAdversary::new(seed), RunLimits { max_steps: 400 })?;
        let header = TraceHeader {
            grid: g.to_string(),
            k,
            protocol: s.protocol().name().to_string(),
            model,
            mode: Multiplicity::Weak,
            initial: c.to_string(),
            seed: Some(seed),
        };
        let mut bytes = Vec::new();
        write_trace(&mut bytes, &header, &out.events)?;
        let (h, events) = read_trace(bytes.as_slice())?;
        let mut again = Vec::new();
        write_trace(&mut again, &h, &events)?;
        anyhow::ensure!(again == bytes, "seed {seed}: trace bytes differ");
        let mut replayed = fresh;
        replay(&mut replayed, &events)?;
        anyhow::ensure!(replayed == s, "seed {seed}: replay differs");
    }
    Ok(())
}

fn properties() -> Check {
    let started = Instant::now();
    threshold_and_canonical_forms()?;
    runs_are_equivariant()?;
    sequential_corda_is_singleton_atom()?;
    let checked = decision_orbits_during_verification()?;
    traces_replay()?;
    Ok(format!(
        "{THRESHOLD_CONFIGS} threshold configs, {PROPERTY_SEEDS} equivariant runs, {PROPERTY_SEEDS} sequential runs, \
         {checked} decisions orbit-checked, 200 replays, {:.2?}",
        started.elapsed()
    ))
}

fn main() -> ExitCode {
    let dir = tempfile::tempdir().expect("temporary directory");
    let criteria: Vec<(&str, Box<dyn Fn() -> Check>)> = vec![
        ("grid23 exhaustive atom+corda on 2x3", Box::new(|| grid23(dir.path()))),
        ("five33 exhaustive atom+corda on 3x3", Box::new(|| five33(dir.path()))),
        ("general3 exhaustive, randomized and phase checks", Box::new(|| general3(dir.path()))),
        ("tower-walk bound on 3x3", Box::new(tower_walk)),
        ("two-robot impossibility on 1x3 and 2x2", Box::new(impossibility)),
        ("property suites", Box::new(properties)),
    ];
    let mut out = std::io::stdout().lock();
    let mut failed = 0;
    for (name, check) in &criteria {
        let line = match check() {
            Ok(detail) => format!("PASS {name}: {detail}"),
            Err(e) => {
                failed += 1;
                format!("FAIL {name}: {e:#}")
            }
        };
        writeln!(out, "{line}").unwrap();
    }
    writeln!(out, "acceptance: {} passed, {failed} failed", criteria.len() - failed).unwrap();
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
