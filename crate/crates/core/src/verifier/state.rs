//! Symmetry-reduced abstract states and their successor relation.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, RwLock};

use smallvec::SmallVec;

use crate::config::{Configuration, Multiplicity, ObservedLabel};
use crate::engine::{EngineState, Model, Pending, Protocol, SchedulerAction};
use crate::error::{Error, Result};
use crate::grid::{GridDims, NodeCoord, Topology};

/// Robot position plus the target mask of its pending move (0 when idle).
pub(crate) type Slot = (u8, u64);

/// Robots sorted by slot content plus the visited-node mask. Robots are
/// anonymous here; fairness bookkeeping follows them through slot maps.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) struct AState {
    pub robots: SmallVec<[Slot; 8]>,
    pub visited: u64,
}

/// An action expressed on the slots and node indices of a canonical state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum AAction {
    Activate { slots: Vec<u8>, targets: Vec<Option<u8>> },
    Look { slot: u8 },
    Move { slot: u8, target: u8 },
}

#[derive(Debug, Clone)]
pub(crate) struct AEdge {
    pub action: AAction,
    pub next: AState,
    /// `pi[s]` is the slot in `next` of the robot occupying slot `s` here.
    pub pi: SmallVec<[u8; 8]>,
    /// Slots whose robot completes an activation on this edge.
    pub served: u8,
}

pub(crate) struct Expansion {
    pub quiescent: bool,
    pub edges: Vec<AEdge>,
}

/// Configuration-level view of one edge, handed to transition observers.
#[derive(Debug, Clone)]
pub struct EdgeInfo {
    pub before: Configuration,
    pub after: Configuration,
    /// `(from, to)` of every robot that moved.
    pub moves: Vec<(NodeCoord, NodeCoord)>,
}

pub type EdgeObserver = dyn Fn(&EdgeInfo) -> std::result::Result<(), String> + Send + Sync;

pub(crate) struct Explorer {
    pub topo: Arc<Topology>,
    pub grid: GridDims,
    pub protocol: Arc<dyn Protocol>,
    pub model: Model,
    pub mode: Multiplicity,
    pub canonicalize: bool,
    cache: RwLock<HashMap<(Vec<u8>, u8), u64>>,
    pub observer: Option<Arc<EdgeObserver>>,
    pub violations: RwLock<Vec<String>>,
    pub violation_count: AtomicUsize,
}

fn map_mask(perm: &[usize], mask: u64) -> u64 {
    let mut out = 0;
    let mut m = mask;
    while m != 0 {
        let b = m.trailing_zeros() as usize;
        out |= 1 << perm[b];
        m &= m - 1;
    }
    out
}

fn bits(mask: u64) -> impl Iterator<Item = u8> {
    let mut m = mask;
    std::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let b = m.trailing_zeros() as u8;
            m &= m - 1;
            Some(b)
        }
    })
}

impl Explorer {
    pub fn new(
        grid: GridDims,
        protocol: Arc<dyn Protocol>,
        model: Model,
        mode: Multiplicity,
        canonicalize: bool,
        observer: Option<Arc<EdgeObserver>>,
    ) -> Result<Self> {
        if grid.node_count() > 64 {
            return Err(Error::Unsupported(format!("the verifier handles at most 64 nodes, {grid} has more")));
        }
        Ok(Explorer {
            topo: grid.topology(),
            grid,
            protocol,
            model,
            mode,
            canonicalize,
            cache: RwLock::new(HashMap::new()),
            observer,
            violations: RwLock::new(Vec::new()),
            violation_count: AtomicUsize::new(0),
        })
    }

    /// Number of distinct views whose decision was computed and validated.
    pub fn decisions_checked(&self) -> usize {
        self.cache.read().expect("decision cache poisoned").len()
    }

    fn counts(&self, robots: &[Slot]) -> Vec<u32> {
        let mut c = vec![0u32; self.topo.n()];
        for &(p, _) in robots {
            c[p as usize] += 1;
        }
        c
    }

    pub fn configuration(&self, robots: &[Slot]) -> Configuration {
        Configuration::from_counts(self.grid, self.counts(robots)).expect("counts match grid")
    }

    /// Target mask decided by a robot at `pos`; the decision is validated
    /// against the view's symmetries the first time the view is met.
    fn decide(&self, counts: &[u32], pos: u8) -> Result<u64> {
        let labels: Vec<u8> = counts.iter().map(|&c| ObservedLabel::from_count(c, self.mode).code() as u8).collect();
        let key = (labels, pos);
        if let Some(&m) = self.cache.read().expect("decision cache poisoned").get(&key) {
            return Ok(m);
        }
        let config = Configuration::from_counts(self.grid, counts.to_vec())?;
        let view = config.view_of(self.grid.coord(pos as usize), self.mode)?;
        let raw = self.protocol.decide(&view);
        let decision = view.decision_orbit(raw.targets()).map_err(|e| match e {
            Error::OrbitClosure(m) | Error::InvalidConfiguration(m) => {
                Error::OrbitClosure(format!("{} in configuration {config}: {m}", self.protocol.name()))
            }
            other => Error::OrbitClosure(format!("{} in configuration {config}: {other}", self.protocol.name())),
        })?;
        let mask = decision.targets().iter().fold(0u64, |m, &t| m | 1 << self.grid.index(t));
        self.cache.write().expect("decision cache poisoned").insert(key, mask);
        Ok(mask)
    }

    /// Smallest image of `raw` under the group (or `raw` sorted when
    /// canonicalization is off). Returns the state, the slot of every raw
    /// robot and the index of the automorphism used.
    pub fn canon(&self, raw: &[Slot], visited: u64) -> (AState, SmallVec<[u8; 8]>, usize) {
        let mut best: Option<(AState, SmallVec<[u8; 8]>, usize)> = None;
        let group = if self.canonicalize { self.topo.perms.len() } else { 1 };
        for g in 0..group {
            let perm = &self.topo.perms[g];
            let mut mapped: SmallVec<[(Slot, u8); 8]> = raw
                .iter()
                .enumerate()
                .map(|(r, &(p, m))| ((perm[p as usize] as u8, map_mask(perm, m)), r as u8))
                .collect();
            mapped.sort_unstable();
            let state = AState { robots: mapped.iter().map(|&(s, _)| s).collect(), visited: map_mask(perm, visited) };
            if best.as_ref().map_or(true, |(b, _, _)| state < *b) {
                let mut slot_of = SmallVec::from_elem(0u8, raw.len());
                for (slot, &(_, r)) in mapped.iter().enumerate() {
                    slot_of[r as usize] = slot as u8;
                }
                best = Some((state, slot_of, g));
            }
        }
        best.expect("identity is always present")
    }

    pub fn initial(&self, c: &Configuration) -> AState {
        let raw: Vec<Slot> =
            c.occupied().into_iter().map(|v| (self.grid.index(v) as u8, 0)).collect();
        let visited = raw.iter().fold(0u64, |m, &(p, _)| m | 1 << p);
        self.canon(&raw, visited).0
    }

    fn observe(&self, before: &[Slot], after: &[Slot]) {
        let Some(obs) = &self.observer else { return };
        let moves: Vec<(NodeCoord, NodeCoord)> = before
            .iter()
            .zip(after)
            .filter(|(a, b)| a.0 != b.0)
            .map(|(a, b)| (self.grid.coord(a.0 as usize), self.grid.coord(b.0 as usize)))
            .collect();
        if moves.is_empty() {
            return;
        }
        let info = EdgeInfo { before: self.configuration(before), after: self.configuration(after), moves };
        if let Err(msg) = obs(&info) {
            if self.violation_count.fetch_add(1, Ordering::Relaxed) < 20 {
                self.violations.write().expect("violations poisoned").push(msg);
            }
        }
    }

    fn edge(&self, s: &AState, raw: SmallVec<[Slot; 8]>, visited: u64, action: AAction, served: u8) -> AEdge {
        self.observe(&s.robots, &raw);
        let (next, pi, _) = self.canon(&raw, visited);
        AEdge { action, next, pi, served }
    }

    pub fn expand(&self, s: &AState) -> Result<Expansion> {
        let counts = self.counts(&s.robots);
        let k = s.robots.len();
        let mut edges = Vec::new();
        match self.model {
            Model::Atom => {
                let mut decisions = Vec::with_capacity(k);
                for &(p, _) in &s.robots {
                    decisions.push(self.decide(&counts, p)?);
                }
                let movers: Vec<u8> = (0..k as u8).filter(|&r| decisions[r as usize] != 0).collect();
                if movers.is_empty() {
                    return Ok(Expansion { quiescent: true, edges });
                }
                let stayers: Vec<u8> = (0..k as u8).filter(|&r| decisions[r as usize] == 0).collect();
                let stay_mask = stayers.iter().fold(0u8, |m, &r| m | 1 << r);
                if !stayers.is_empty() {
                    edges.push(self.edge(
                        s,
                        s.robots.clone(),
                        s.visited,
                        AAction::Activate { slots: stayers.clone(), targets: vec![None; stayers.len()] },
                        stay_mask,
                    ));
                }
                // Stayers join every activation: it changes nothing but
                // counts toward fairness.
                for subset in 1u32..(1 << movers.len()) {
                    let picked: Vec<u8> =
                        movers.iter().enumerate().filter(|(n, _)| subset >> n & 1 == 1).map(|(_, &r)| r).collect();
                    let options: Vec<Vec<u8>> = picked.iter().map(|&r| bits(decisions[r as usize]).collect()).collect();
                    let mut ties = vec![0usize; picked.len()];
                    loop {
                        let mut raw = s.robots.clone();
                        let mut visited = s.visited;
                        for (n, &r) in picked.iter().enumerate() {
                            let t = options[n][ties[n]];
                            raw[r as usize].0 = t;
                            visited |= 1 << t;
                        }
                        let mut slots = picked.clone();
                        let mut targets: Vec<Option<u8>> =
                            picked.iter().enumerate().map(|(n, _)| Some(options[n][ties[n]])).collect();
                        slots.extend(&stayers);
                        targets.extend(stayers.iter().map(|_| None));
                        let served = picked.iter().fold(stay_mask, |m, &r| m | 1 << r);
                        edges.push(self.edge(s, raw, visited, AAction::Activate { slots, targets }, served));
                        let mut n = 0;
                        while n < picked.len() {
                            ties[n] += 1;
                            if ties[n] < options[n].len() {
                                break;
                            }
                            ties[n] = 0;
                            n += 1;
                        }
                        if n == picked.len() {
                            break;
                        }
                    }
                }
            }
            Model::Corda => {
                let mut quiescent = true;
                for r in 0..k {
                    let (p, pending) = s.robots[r];
                    if pending == 0 {
                        let d = self.decide(&counts, p)?;
                        if d == 0 {
                            edges.push(self.edge(s, s.robots.clone(), s.visited, AAction::Look { slot: r as u8 }, 1 << r));
                        } else {
                            quiescent = false;
                            let mut raw = s.robots.clone();
                            raw[r].1 = d;
                            edges.push(self.edge(s, raw, s.visited, AAction::Look { slot: r as u8 }, 0));
                        }
                    } else {
                        quiescent = false;
                        for t in bits(pending) {
                            let mut raw = s.robots.clone();
                            raw[r] = (t, 0);
                            edges.push(self.edge(
                                s,
                                raw,
                                s.visited | 1 << t,
                                AAction::Move { slot: r as u8, target: t },
                                1 << r,
                            ));
                        }
                    }
                }
                if quiescent {
                    return Ok(Expansion { quiescent: true, edges: Vec::new() });
                }
            }
        }
        Ok(Expansion { quiescent: false, edges })
    }

    /// Slots of a concrete engine state, in robot-id order.
    pub fn raw_of(&self, e: &EngineState) -> (SmallVec<[Slot; 8]>, u64) {
        let raw = e
            .robots()
            .iter()
            .map(|r| {
                let mask = match &r.pending {
                    Pending::Idle => 0,
                    Pending::Computed { targets, .. } => {
                        targets.iter().fold(0u64, |m, &t| m | 1 << self.grid.index(t))
                    }
                };
                (self.grid.index(r.pos) as u8, mask)
            })
            .collect();
        let visited = e.visited().iter().fold(0u64, |m, &v| m | 1 << self.grid.index(v));
        (raw, visited)
    }

    /// Translates an abstract action taken from `expected` into a concrete
    /// scheduler action for `e`, whose abstraction must equal `expected`.
    pub fn concretize(&self, e: &EngineState, expected: &AState, action: &AAction) -> Result<SchedulerAction> {
        let (raw, visited) = self.raw_of(e);
        let (state, slot_of, g) = self.canon(&raw, visited);
        if state != *expected {
            return Err(Error::SchedulerContract("trace reconstruction left the abstract path".into()));
        }
        let perm = &self.topo.perms[g];
        let robot_of = |slot: u8| slot_of.iter().position(|&s| s == slot).expect("slot map is a bijection");
        let node_back = |t: u8| perm.iter().position(|&p| p == t as usize).expect("permutation");
        Ok(match action {
            AAction::Look { slot } => SchedulerAction::Look { robot: robot_of(*slot) },
            AAction::Move { slot, target } => {
                let r = robot_of(*slot);
                let Pending::Computed { targets, .. } = &e.robots()[r].pending else {
                    return Err(Error::SchedulerContract("abstract move on an idle robot".into()));
                };
                let to = self.grid.coord(node_back(*target));
                let tie_break = targets.iter().position(|&t| t == to).expect("target in pending set");
                SchedulerAction::Move { robot: r, tie_break }
            }
            AAction::Activate { slots, targets } => {
                let mut robots = Vec::new();
                let mut tie_breaks = Vec::new();
                for (&slot, t) in slots.iter().zip(targets) {
                    let r = robot_of(slot);
                    robots.push(r);
                    tie_breaks.push(match t {
                        None => 0,
                        Some(t) => {
                            let to = self.grid.coord(node_back(*t));
                            let d = e.decision_for(r)?;
                            d.targets().iter().position(|&x| x == to).expect("target among decided targets")
                        }
                    });
                }
                SchedulerAction::Activate { robots, tie_breaks }
            }
        })
    }
}
