//! Exhaustive verification of exploration with termination.
//!
//! Every execution from every towerless initial configuration is explored
//! on a state graph reduced by grid symmetry. A protocol fails if some
//! reachable quiescent state leaves a node unvisited, or if some fair
//! infinite execution never reaches quiescence.

mod fairness;
mod state;

pub mod full_tower;
pub mod impossibility;
pub mod tower_walk;

use std::collections::VecDeque;
use std::sync::atomic::Ordering;
use std::sync::Arc;
use std::time::Instant;

use indexmap::IndexSet;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{towerless_configurations, Configuration, Multiplicity};
use crate::engine::{EngineState, Model, Protocol, TraceEvent};
use crate::error::{Error, Result};
use crate::grid::GridDims;

pub use state::{EdgeInfo, EdgeObserver};
use state::{AEdge, AState, Explorer};

pub const DEFAULT_BUDGET: usize = 10_000_000;

#[derive(Clone)]
pub struct VerifyOptions {
    /// Maximum number of abstract states before giving up.
    pub budget: usize,
    /// Merge states equivalent under grid automorphisms.
    pub canonicalize: bool,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
    /// Restricts the initial configurations (all towerless ones by default).
    pub initials: Option<Vec<Configuration>>,
    /// Called on every configuration-changing edge.
    pub observer: Option<Arc<EdgeObserver>>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { budget: DEFAULT_BUDGET, canonicalize: true, jobs: None, initials: None, observer: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Counterexample,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureKind {
    /// A quiescent configuration with unvisited nodes.
    UnexploredQuiescent,
    /// A fair execution that never becomes quiescent.
    Livelock,
}

#[derive(Debug, Clone, Serialize)]
pub struct InitialVerdict {
    pub initial: String,
    /// No reachable quiescent state leaves a node unvisited.
    pub explored: bool,
    /// No fair execution avoids quiescence forever.
    pub terminates_under_fairness: bool,
}

impl InitialVerdict {
    pub fn ok(&self) -> bool {
        self.explored && self.terminates_under_fairness
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Counterexample {
    pub kind: FailureKind,
    pub initial: String,
    pub trace: Vec<TraceEvent>,
    /// For livelocks, the index in `trace` where the repeated loop begins.
    pub loop_start: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub grid: GridDims,
    pub k: usize,
    pub protocol: String,
    pub model: Model,
    pub mode: Multiplicity,
    pub outcome: Outcome,
    pub states: usize,
    pub edges: usize,
    /// Largest BFS distance from an initial state.
    pub max_depth: usize,
    pub initial_classes: usize,
    pub decisions_checked: usize,
    pub fair_components: usize,
    pub quiescent_states: usize,
    /// Fewest visited nodes over reachable quiescent states.
    pub min_quiescent_visited: Option<usize>,
    pub per_initial: Vec<InitialVerdict>,
    pub counterexample: Option<Counterexample>,
    pub observer_violations: Vec<String>,
    pub observer_violation_count: usize,
    pub elapsed_ms: u128,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.outcome == Outcome::Pass && self.observer_violation_count == 0
    }
}

struct Graph {
    states: IndexSet<AState>,
    offsets: Vec<usize>,
    succ: Vec<u32>,
    quiescent: Vec<bool>,
    depth: Vec<u32>,
    complete: bool,
}

impl Graph {
    fn successors(&self, id: u32) -> &[u32] {
        let id = id as usize;
        &self.succ[self.offsets[id]..self.offsets[id + 1]]
    }
}

fn explore(ex: &Explorer, roots: &[AState], budget: usize) -> Result<Graph> {
    let mut states: IndexSet<AState> = IndexSet::new();
    let mut depth = Vec::new();
    for r in roots {
        if states.insert(r.clone()) {
            depth.push(0);
        }
    }
    let mut offsets = vec![0usize];
    let mut succ = Vec::new();
    let mut quiescent = Vec::new();
    let mut done = 0usize;
    let mut complete = true;
    const CHUNK: usize = 4096;
    while done < states.len() {
        if states.len() > budget {
            complete = false;
            break;
        }
        let hi = (done + CHUNK).min(states.len());
        let expanded: Vec<Result<(bool, Vec<AState>)>> = (done..hi)
            .into_par_iter()
            .map(|id| {
                let exp = ex.expand(&states[id])?;
                let mut next: Vec<AState> = exp.edges.into_iter().map(|e| e.next).collect();
                next.sort_unstable();
                next.dedup();
                Ok((exp.quiescent, next))
            })
            .collect();
        for (offset, item) in expanded.into_iter().enumerate() {
            let (q, next) = item?;
            let id = done + offset;
            quiescent.push(q);
            for n in next {
                let (nid, fresh) = states.insert_full(n);
                if fresh {
                    depth.push(depth[id] + 1);
                }
                succ.push(nid as u32);
            }
            offsets.push(succ.len());
        }
        done = hi;
    }
    Ok(Graph { states, offsets, succ, quiescent, depth, complete })
}

/// Strongly connected components of the non-quiescent part of the graph
/// that contain at least one edge.
fn cyclic_components(g: &Graph) -> Vec<Vec<u32>> {
    let n = g.quiescent.len();
    let mut index = vec![u32::MAX; n];
    let mut low = vec![0u32; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<u32> = Vec::new();
    let mut out = Vec::new();
    let mut counter = 0u32;
    for root in 0..n as u32 {
        if index[root as usize] != u32::MAX || g.quiescent[root as usize] {
            continue;
        }
        let mut call: Vec<(u32, usize)> = vec![(root, 0)];
        index[root as usize] = counter;
        low[root as usize] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root as usize] = true;
        while let Some(&mut (v, ref mut next)) = call.last_mut() {
            let succ = g.successors(v);
            if *next < succ.len() {
                let w = succ[*next];
                *next += 1;
                if (w as usize) >= n || g.quiescent[w as usize] {
                    continue;
                }
                if index[w as usize] == u32::MAX {
                    index[w as usize] = counter;
                    low[w as usize] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w as usize] = true;
                    call.push((w, 0));
                } else if on_stack[w as usize] {
                    low[v as usize] = low[v as usize].min(index[w as usize]);
                }
            } else {
                call.pop();
                if let Some(&(p, _)) = call.last() {
                    low[p as usize] = low[p as usize].min(low[v as usize]);
                }
                if low[v as usize] == index[v as usize] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w as usize] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    let cyclic = comp.len() > 1 || g.successors(v).contains(&v);
                    if cyclic {
                        comp.reverse();
                        out.push(comp);
                    }
                }
            }
        }
    }
    out
}

/// Shortest path of state ids from `from` to any state satisfying `goal`,
/// optionally confined to `allowed` states.
fn shortest_path(g: &Graph, from: u32, goal: impl Fn(u32) -> bool, allowed: impl Fn(u32) -> bool) -> Option<Vec<u32>> {
    let n = g.quiescent.len();
    let mut prev = vec![u32::MAX; n];
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([from]);
    seen[from as usize] = true;
    while let Some(v) = queue.pop_front() {
        if goal(v) {
            let mut path = vec![v];
            let mut cur = v;
            while cur != from {
                cur = prev[cur as usize];
                path.push(cur);
            }
            path.reverse();
            return Some(path);
        }
        for &w in g.successors(v) {
            if (w as usize) < n && !seen[w as usize] && allowed(w) {
                seen[w as usize] = true;
                prev[w as usize] = v;
                queue.push_back(w);
            }
        }
    }
    None
}

/// The edge from `from` leading to state `to`.
fn edge_between(ex: &Explorer, g: &Graph, from: u32, to: u32) -> Result<AEdge> {
    let target = &g.states[to as usize];
    ex.expand(&g.states[from as usize])?
        .edges
        .into_iter()
        .find(|e| e.next == *target)
        .ok_or_else(|| Error::SchedulerContract("missing edge on reconstructed path".into()))
}

fn replay_abstract(
    ex: &Explorer,
    g: &Graph,
    initial: &Configuration,
    steps: &[(u32, AEdge)],
) -> Result<Vec<TraceEvent>> {
    let mut engine = EngineState::init(initial, ex.protocol.clone(), ex.model, ex.mode)?;
    let mut events = Vec::with_capacity(steps.len());
    for (from, edge) in steps {
        let action = ex.concretize(&engine, &g.states[*from as usize], &edge.action)?;
        events.push(engine.step(&action)?);
    }
    Ok(events)
}

/// Explores all executions of `protocol` with `k` robots on `grid`.
pub fn verify(
    grid: GridDims,
    protocol: Arc<dyn Protocol>,
    k: usize,
    model: Model,
    mode: Multiplicity,
    options: &VerifyOptions,
) -> Result<VerificationReport> {
    match options.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Unsupported(format!("cannot start worker pool: {e}")))?
            .install(|| verify_inner(grid, protocol, k, model, mode, options)),
        None => verify_inner(grid, protocol, k, model, mode, options),
    }
}

fn verify_inner(
    grid: GridDims,
    protocol: Arc<dyn Protocol>,
    k: usize,
    model: Model,
    mode: Multiplicity,
    options: &VerifyOptions,
) -> Result<VerificationReport> {
    let started = Instant::now();
    if k == 0 || k > 8 || k > grid.node_count() {
        return Err(Error::Unsupported(format!("the verifier handles 1 to 8 robots on at most {} nodes", grid.node_count())));
    }
    let ex = Explorer::new(grid, protocol.clone(), model, mode, options.canonicalize, options.observer.clone())?;
    let initials = match &options.initials {
        Some(list) => list.clone(),
        None => towerless_configurations(grid, k),
    };
    for c in &initials {
        if c.grid() != grid || c.robot_count() as usize != k || !c.is_towerless() {
            return Err(Error::InvalidConfiguration(format!("{c} is not a towerless {k}-robot configuration of {grid}")));
        }
    }
    let roots: Vec<AState> = initials.iter().map(|c| ex.initial(c)).collect();
    let g = explore(&ex, &roots, options.budget)?;
    let expanded = g.quiescent.len();
    let all_nodes: u64 = if grid.node_count() == 64 { u64::MAX } else { (1u64 << grid.node_count()) - 1 };

    let mut unexplored = vec![false; g.states.len()];
    for id in 0..expanded {
        if g.quiescent[id] && g.states[id].visited != all_nodes {
            unexplored[id] = true;
        }
    }
    let mut livelocked = vec![false; g.states.len()];
    let mut fair: Vec<(Vec<u32>, Vec<(u32, AEdge)>)> = Vec::new();
    if g.complete {
        for comp in cyclic_components(&g) {
            if let Some(cycle) = fairness::fair_cycle(&ex, &g.states, &comp)? {
                for &id in &comp {
                    livelocked[id as usize] = true;
                }
                fair.push((comp, cycle));
            }
        }
    }
    let bad: Vec<bool> = unexplored.iter().zip(&livelocked).map(|(a, b)| *a || *b).collect();

    let mut reverse: Vec<Vec<u32>> = vec![Vec::new(); g.states.len()];
    for v in 0..expanded as u32 {
        for &w in g.successors(v) {
            reverse[w as usize].push(v);
        }
    }
    let can_reach = |targets: &[bool]| {
        let mut reach = targets.to_vec();
        let mut queue: VecDeque<u32> = (0..reach.len() as u32).filter(|&v| reach[v as usize]).collect();
        while let Some(v) = queue.pop_front() {
            for &u in &reverse[v as usize] {
                if !reach[u as usize] {
                    reach[u as usize] = true;
                    queue.push_back(u);
                }
            }
        }
        reach
    };
    let reach_unexplored = can_reach(&unexplored);
    let reach_livelock = can_reach(&livelocked);
    let doomed: Vec<bool> = reach_unexplored.iter().zip(&reach_livelock).map(|(a, b)| *a || *b).collect();

    let root_ids: Vec<u32> = roots.iter().map(|r| g.states.get_index_of(r).expect("root inserted") as u32).collect();
    let per_initial: Vec<InitialVerdict> = initials
        .iter()
        .zip(&root_ids)
        .map(|(c, &id)| InitialVerdict {
            initial: c.to_string(),
            explored: !reach_unexplored[id as usize],
            terminates_under_fairness: !reach_livelock[id as usize],
        })
        .collect();
    let mut classes = root_ids.clone();
    classes.sort_unstable();
    classes.dedup();

    let failing = initials.iter().zip(&root_ids).find(|(_, &id)| doomed[id as usize]);
    let counterexample = match failing {
        None => None,
        Some((init, &root)) => {
            let path = shortest_path(&g, root, |v| bad[v as usize], |_| true).expect("doomed root reaches a bad state");
            let last = *path.last().expect("nonempty path");
            let mut steps = Vec::new();
            for w in path.windows(2) {
                steps.push((w[0], edge_between(&ex, &g, w[0], w[1])?));
            }
            let (kind, loop_steps) = if g.quiescent[last as usize] {
                (FailureKind::UnexploredQuiescent, None)
            } else {
                let (comp, cycle) = fair.iter().find(|(c, _)| c.contains(&last)).expect("bad non-quiescent is fair");
                let base = comp[0];
                let within = shortest_path(&g, last, |v| v == base, |v| comp.contains(&v)).expect("component connected");
                for w in within.windows(2) {
                    steps.push((w[0], edge_between(&ex, &g, w[0], w[1])?));
                }
                (FailureKind::Livelock, Some(cycle.clone()))
            };
            let loop_start = loop_steps.as_ref().map(|_| steps.len());
            if let Some(cycle) = loop_steps {
                steps.extend(cycle);
            }
            let trace = replay_abstract(&ex, &g, init, &steps)?;
            Some(Counterexample { kind, initial: init.to_string(), trace, loop_start })
        }
    };

    let outcome = if counterexample.is_some() {
        Outcome::Counterexample
    } else if !g.complete {
        Outcome::Inconclusive
    } else {
        Outcome::Pass
    };
    let violations = ex.violations.read().expect("violations poisoned").clone();
    Ok(VerificationReport {
        grid,
        k,
        protocol: protocol.name().to_string(),
        model,
        mode,
        outcome,
        states: g.states.len(),
        edges: g.succ.len(),
        max_depth: g.depth.iter().copied().max().unwrap_or(0) as usize,
        initial_classes: classes.len(),
        decisions_checked: ex.decisions_checked(),
        fair_components: fair.len(),
        quiescent_states: (0..expanded).filter(|&id| g.quiescent[id]).count(),
        min_quiescent_visited: (0..expanded)
            .filter(|&id| g.quiescent[id])
            .map(|id| g.states[id].visited.count_ones() as usize)
            .min(),
        per_initial,
        counterexample,
        observer_violations: violations,
        observer_violation_count: ex.violation_count.load(Ordering::Relaxed),
        elapsed_ms: started.elapsed().as_millis(),
    })
}
