//! Look-Compute-Move semantics under the ATOM and CORDA schedulers.
//!
//! ATOM: an activated robot performs a whole cycle within one step; robots
//! activated together look at the same configuration and move together.
//! CORDA: the adversary schedules `Look` (observation plus computation) and
//! `Move` separately, so a robot may move on an outdated observation.

use std::fmt;
use std::io::{BufRead, Write};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{Configuration, Multiplicity};
use crate::error::{Error, Result};
use crate::grid::{GridDims, NodeCoord};
use crate::view::{Decision, View};

/// A deterministic, oblivious robot program: a function of the current view.
pub trait Protocol: Send + Sync {
    fn name(&self) -> &str;
    fn decide(&self, view: &View) -> Decision;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Atom,
    Corda,
}

impl std::str::FromStr for Model {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "atom" => Ok(Model::Atom),
            "corda" => Ok(Model::Corda),
            _ => Err(Error::Parse(format!("unknown model {s:?} (expected atom or corda)"))),
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Atom => "atom",
            Model::Corda => "corda",
        })
    }
}

/// Per-robot cycle state. A Stay decision returns the robot straight to idle.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "lowercase")]
pub enum Pending {
    Idle,
    Computed { targets: Vec<NodeCoord>, snapshot_step: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RobotSlot {
    pub pos: NodeCoord,
    pub pending: Pending,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum SchedulerAction {
    /// ATOM: the listed robots each run a full cycle; `tie_breaks[n]` picks
    /// the destination of `robots[n]` among its sorted targets.
    Activate { robots: Vec<usize>, tie_breaks: Vec<usize> },
    /// CORDA: observe and compute.
    Look { robot: usize },
    /// CORDA: execute the stored decision.
    Move { robot: usize, tie_break: usize },
}

/// What an activated robot would do under ATOM.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AtomChoice {
    pub robot: usize,
    /// Number of destinations to pick from; 0 when the robot would stay.
    pub options: usize,
}

/// Enabled scheduler actions. ATOM activations are kept compact: any nonempty
/// subset of `choices` may be activated, each with a tie-break below its
/// `options` (or 0 when it has none).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum EnabledActions {
    Atom { choices: Vec<AtomChoice> },
    Corda { actions: Vec<SchedulerAction> },
}

impl EnabledActions {
    /// Number of actions before expanding ATOM tie-breaks.
    pub fn len_before_tie_breaks(&self) -> usize {
        match self {
            EnabledActions::Atom { choices } => (1usize << choices.len()) - 1,
            EnabledActions::Corda { actions } => actions.len(),
        }
    }

    pub fn contains(&self, action: &SchedulerAction) -> bool {
        match (self, action) {
            (EnabledActions::Atom { choices }, SchedulerAction::Activate { robots, tie_breaks }) => {
                if robots.is_empty() || robots.len() != tie_breaks.len() {
                    return false;
                }
                let mut seen = robots.clone();
                seen.sort_unstable();
                seen.dedup();
                if seen.len() != robots.len() {
                    return false;
                }
                robots.iter().zip(tie_breaks).all(|(&r, &t)| {
                    choices.iter().any(|c| c.robot == r && (t < c.options || (c.options == 0 && t == 0)))
                })
            }
            (EnabledActions::Corda { actions }, a) => actions.contains(a),
            _ => false,
        }
    }

    /// Every concrete action, with ATOM subsets and tie-breaks expanded.
    pub fn expand(&self) -> Vec<SchedulerAction> {
        match self {
            EnabledActions::Corda { actions } => actions.clone(),
            EnabledActions::Atom { choices } => {
                let mut out = Vec::new();
                for mask in 1usize..(1 << choices.len()) {
                    let picked: Vec<&AtomChoice> =
                        choices.iter().enumerate().filter(|(n, _)| mask >> n & 1 == 1).map(|(_, c)| c).collect();
                    let mut ties = vec![0usize; picked.len()];
                    loop {
                        out.push(SchedulerAction::Activate {
                            robots: picked.iter().map(|c| c.robot).collect(),
                            tie_breaks: ties.clone(),
                        });
                        // odometer over tie-break indices
                        let mut n = 0;
                        while n < picked.len() {
                            ties[n] += 1;
                            if ties[n] < picked[n].options.max(1) {
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
                out
            }
        }
    }
}

/// One applied scheduler action and its outcome.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub step: u64,
    pub action: SchedulerAction,
    pub config: Vec<[usize; 3]>,
    pub visited: Vec<[usize; 2]>,
    pub quiescent: bool,
}

/// Complete state of one execution.
#[derive(Clone)]
pub struct EngineState {
    protocol: Arc<dyn Protocol>,
    model: Model,
    mode: Multiplicity,
    config: Configuration,
    robots: Vec<RobotSlot>,
    visited: Vec<bool>,
    step: u64,
}

impl fmt::Debug for EngineState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EngineState")
            .field("protocol", &self.protocol.name())
            .field("model", &self.model)
            .field("config", &self.config.to_string())
            .field("robots", &self.robots)
            .field("step", &self.step)
            .finish()
    }
}

impl PartialEq for EngineState {
    fn eq(&self, other: &Self) -> bool {
        self.protocol.name() == other.protocol.name()
            && self.model == other.model
            && self.mode == other.mode
            && self.config == other.config
            && self.robots == other.robots
            && self.visited == other.visited
            && self.step == other.step
    }
}

impl EngineState {
    /// Places one robot on each occupied node of a towerless configuration.
    /// Robot ids follow row-major node order.
    pub fn init(initial: &Configuration, protocol: Arc<dyn Protocol>, model: Model, mode: Multiplicity) -> Result<Self> {
        let grid = initial.grid();
        let k = initial.robot_count() as usize;
        if k > grid.node_count() {
            return Err(Error::InvalidConfiguration(format!("{k} robots exceed the {} nodes", grid.node_count())));
        }
        if !initial.is_towerless() {
            return Err(Error::InvalidConfiguration("initial configuration must be towerless".into()));
        }
        let robots: Vec<RobotSlot> =
            initial.occupied().into_iter().map(|pos| RobotSlot { pos, pending: Pending::Idle }).collect();
        let visited = initial.counts().iter().map(|&c| c > 0).collect();
        Ok(EngineState { protocol, model, mode, config: initial.clone(), robots, visited, step: 0 })
    }

    pub fn grid(&self) -> GridDims {
        self.config.grid()
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn mode(&self) -> Multiplicity {
        self.mode
    }

    pub fn protocol(&self) -> &Arc<dyn Protocol> {
        &self.protocol
    }

    pub fn config(&self) -> &Configuration {
        &self.config
    }

    pub fn robots(&self) -> &[RobotSlot] {
        &self.robots
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn visited(&self) -> Vec<NodeCoord> {
        let g = self.grid();
        (0..self.visited.len()).filter(|&n| self.visited[n]).map(|n| g.coord(n)).collect()
    }

    pub fn visited_count(&self) -> usize {
        self.visited.iter().filter(|&&b| b).count()
    }

    pub fn explored(&self) -> bool {
        self.visited.iter().all(|&b| b)
    }

    /// The decision robot `robot` would compute on the current configuration.
    pub fn decision_for(&self, robot: usize) -> Result<Decision> {
        let view = self.config.view_of(self.robots[robot].pos, self.mode)?;
        let decision = self.protocol.decide(&view);
        view.decision_orbit(decision.targets())
    }

    pub fn enabled_actions(&self) -> Result<EnabledActions> {
        match self.model {
            Model::Atom => {
                let mut choices = Vec::with_capacity(self.robots.len());
                for r in 0..self.robots.len() {
                    choices.push(AtomChoice { robot: r, options: self.decision_for(r)?.targets().len() });
                }
                Ok(EnabledActions::Atom { choices })
            }
            Model::Corda => {
                let mut actions = Vec::new();
                for (r, slot) in self.robots.iter().enumerate() {
                    match &slot.pending {
                        Pending::Idle => actions.push(SchedulerAction::Look { robot: r }),
                        Pending::Computed { targets, .. } => {
                            actions.extend((0..targets.len()).map(|t| SchedulerAction::Move { robot: r, tie_break: t }))
                        }
                    }
                }
                Ok(EnabledActions::Corda { actions })
            }
        }
    }

    /// No move pending and every robot computes Stay.
    pub fn is_quiescent(&self) -> Result<bool> {
        if self.robots.iter().any(|r| r.pending != Pending::Idle) {
            return Ok(false);
        }
        for r in 0..self.robots.len() {
            if !self.decision_for(r)?.is_stay() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn relocate(&mut self, robot: usize, to: NodeCoord) {
        let from = self.robots[robot].pos;
        self.config.move_robot(from, to);
        self.robots[robot].pos = to;
        let idx = self.grid().index(to);
        self.visited[idx] = true;
    }

    /// Applies one scheduler action, returning the recorded event.
    pub fn step(&mut self, action: &SchedulerAction) -> Result<TraceEvent> {
        let bad = |msg: String| Err(Error::SchedulerContract(msg));
        match (self.model, action) {
            (Model::Atom, SchedulerAction::Activate { robots, tie_breaks }) => {
                if !self.enabled_actions()?.contains(action) {
                    return bad(format!("activation {robots:?} / {tie_breaks:?} is not enabled"));
                }
                // everyone looks at the same snapshot, then all moves apply
                let mut moves = Vec::new();
                for (&r, &t) in robots.iter().zip(tie_breaks) {
                    if let Decision::Move(targets) = self.decision_for(r)? {
                        moves.push((r, targets[t]));
                    }
                }
                for (r, to) in moves {
                    self.relocate(r, to);
                }
            }
            (Model::Corda, SchedulerAction::Look { robot }) => {
                let Some(slot) = self.robots.get(*robot) else {
                    return bad(format!("no robot {robot}"));
                };
                if slot.pending != Pending::Idle {
                    return bad(format!("robot {robot} has a pending move and cannot look"));
                }
                if let Decision::Move(targets) = self.decision_for(*robot)? {
                    self.robots[*robot].pending = Pending::Computed { targets, snapshot_step: self.step };
                }
            }
            (Model::Corda, SchedulerAction::Move { robot, tie_break }) => {
                let Some(slot) = self.robots.get(*robot) else {
                    return bad(format!("no robot {robot}"));
                };
                let Pending::Computed { targets, .. } = &slot.pending else {
                    return bad(format!("robot {robot} has no pending move"));
                };
                let Some(&to) = targets.get(*tie_break) else {
                    return bad(format!("tie-break {tie_break} out of range for robot {robot}"));
                };
                self.robots[*robot].pending = Pending::Idle;
                self.relocate(*robot, to);
            }
            (model, a) => return bad(format!("action {a:?} is not valid under {model}")),
        }
        self.step += 1;
        Ok(TraceEvent {
            step: self.step,
            action: action.clone(),
            config: self.config.to_triples(),
            visited: self.visited().into_iter().map(|v| [v.x, v.y]).collect(),
            quiescent: self.is_quiescent()?,
        })
    }
}

/// Chooses the next scheduler action; `None` ends the run.
pub trait Adversary {
    fn choose(&mut self, state: &EngineState) -> Result<Option<SchedulerAction>>;
}

/// Uniformly random choices from a seeded generator.
pub struct RandomAdversary {
    rng: ChaCha8Rng,
}

impl RandomAdversary {
    pub fn new(seed: u64) -> Self {
        RandomAdversary { rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl Adversary for RandomAdversary {
    fn choose(&mut self, state: &EngineState) -> Result<Option<SchedulerAction>> {
        Ok(match state.enabled_actions()? {
            EnabledActions::Corda { actions } => actions.choose(&mut self.rng).cloned(),
            EnabledActions::Atom { choices } => {
                let mut picked: Vec<&AtomChoice> = Vec::new();
                while picked.is_empty() {
                    picked = choices.iter().filter(|_| self.rng.gen_bool(0.5)).collect();
                }
                Some(SchedulerAction::Activate {
                    robots: picked.iter().map(|c| c.robot).collect(),
                    tie_breaks: picked.iter().map(|c| self.rng.gen_range(0..c.options.max(1))).collect(),
                })
            }
        })
    }
}

/// One robot at a time, round robin; under CORDA each Look is immediately
/// followed by the robot's Move.
#[derive(Default)]
pub struct SequentialAdversary {
    next: usize,
}

impl Adversary for SequentialAdversary {
    fn choose(&mut self, state: &EngineState) -> Result<Option<SchedulerAction>> {
        let k = state.robots().len();
        if let Some((r, _)) = state.robots().iter().enumerate().find(|(_, s)| s.pending != Pending::Idle) {
            return Ok(Some(SchedulerAction::Move { robot: r, tie_break: 0 }));
        }
        let r = self.next % k;
        self.next += 1;
        Ok(Some(match state.model() {
            Model::Atom => SchedulerAction::Activate { robots: vec![r], tie_breaks: vec![0] },
            Model::Corda => SchedulerAction::Look { robot: r },
        }))
    }
}

/// Every robot acts in every round. Under CORDA all robots look before any
/// of them moves.
#[derive(Default)]
pub struct SynchronousAdversary {
    looks_left: Vec<usize>,
}

impl Adversary for SynchronousAdversary {
    fn choose(&mut self, state: &EngineState) -> Result<Option<SchedulerAction>> {
        let k = state.robots().len();
        if state.model() == Model::Atom {
            return Ok(Some(SchedulerAction::Activate { robots: (0..k).collect(), tie_breaks: vec![0; k] }));
        }
        if let Some(r) = self.looks_left.pop() {
            return Ok(Some(SchedulerAction::Look { robot: r }));
        }
        if let Some(r) = state.robots().iter().position(|s| s.pending != Pending::Idle) {
            return Ok(Some(SchedulerAction::Move { robot: r, tie_break: 0 }));
        }
        self.looks_left = (1..k).rev().collect();
        Ok(Some(SchedulerAction::Look { robot: 0 }))
    }
}

/// Replays a fixed list of actions.
pub struct ScriptedAdversary {
    actions: std::vec::IntoIter<SchedulerAction>,
}

impl ScriptedAdversary {
    pub fn new(actions: Vec<SchedulerAction>) -> Self {
        ScriptedAdversary { actions: actions.into_iter() }
    }

    /// Reads one JSON action per line; blank lines are skipped.
    pub fn from_reader(r: impl BufRead) -> Result<Self> {
        let mut actions = Vec::new();
        for line in r.lines() {
            let line = line?;
            if !line.trim().is_empty() {
                actions.push(serde_json::from_str(&line)?);
            }
        }
        Ok(ScriptedAdversary::new(actions))
    }
}

impl Adversary for ScriptedAdversary {
    fn choose(&mut self, _state: &EngineState) -> Result<Option<SchedulerAction>> {
        Ok(self.actions.next())
    }
}

/// Delegates every choice to a callback (interactive front ends).
pub struct CallbackAdversary<F>(pub F);

impl<F> Adversary for CallbackAdversary<F>
where
    F: FnMut(&EngineState) -> Option<SchedulerAction>,
{
    fn choose(&mut self, state: &EngineState) -> Result<Option<SchedulerAction>> {
        Ok((self.0)(state))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunLimits {
    pub max_steps: u64,
}

impl Default for RunLimits {
    fn default() -> Self {
        RunLimits { max_steps: 100_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub explored: bool,
    pub quiescent: bool,
    pub timed_out: bool,
}

impl Verdict {
    pub fn success(&self) -> bool {
        self.explored && self.quiescent
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub events: Vec<TraceEvent>,
    pub verdict: Verdict,
}

/// Steps until quiescence, adversary exhaustion or `max_steps`.
pub fn run(state: &mut EngineState, adversary: &mut dyn Adversary, limits: RunLimits) -> Result<RunOutcome> {
    let mut events = Vec::new();
    let mut quiescent = state.is_quiescent()?;
    while !quiescent && state.step_count() < limits.max_steps {
        let Some(action) = adversary.choose(state)? else { break };
        let ev = state.step(&action)?;
        quiescent = ev.quiescent;
        events.push(ev);
    }
    let timed_out = !quiescent && state.step_count() >= limits.max_steps;
    Ok(RunOutcome { events, verdict: Verdict { explored: state.explored(), quiescent, timed_out } })
}

/// First line of a trace file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub grid: String,
    pub k: usize,
    pub protocol: String,
    pub model: Model,
    pub mode: Multiplicity,
    pub initial: String,
    pub seed: Option<u64>,
}

pub fn write_trace(mut w: impl Write, header: &TraceHeader, events: &[TraceEvent]) -> Result<()> {
    serde_json::to_writer(&mut w, header)?;
    writeln!(w)?;
    for ev in events {
        serde_json::to_writer(&mut w, ev)?;
        writeln!(w)?;
    }
    Ok(())
}

pub fn read_trace(r: impl BufRead) -> Result<(TraceHeader, Vec<TraceEvent>)> {
    let mut lines = r.lines();
    let header_line = lines.next().ok_or_else(|| Error::Parse("empty trace".into()))??;
    let header: TraceHeader = serde_json::from_str(&header_line)?;
    let mut events = Vec::new();
    for line in lines {
        let line = line?;
        if !line.trim().is_empty() {
            events.push(serde_json::from_str(&line)?);
        }
    }
    Ok((header, events))
}

/// Re-executes the actions of `events` from `state`, checking that every
/// recorded configuration, visited set and quiescence flag is reproduced.
pub fn replay(state: &mut EngineState, events: &[TraceEvent]) -> Result<()> {
    for (n, ev) in events.iter().enumerate() {
        let got = state.step(&ev.action)?;
        if got != *ev {
            return Err(Error::SchedulerContract(format!("replay diverged at event {n}")));
        }
    }
    Ok(())
}

/// A uniformly random towerless configuration of `k` robots.
pub fn random_towerless(grid: GridDims, k: usize, seed: u64) -> Result<Configuration> {
    if k == 0 || k > grid.node_count() {
        return Err(Error::InvalidConfiguration(format!("cannot place {k} robots on {} nodes", grid.node_count())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes: Vec<NodeCoord> = grid.nodes().collect();
    let picked: Vec<NodeCoord> = nodes.choose_multiple(&mut rng, k).copied().collect();
    Configuration::from_nodes(grid, &picked)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Every robot stays forever.
    struct Still;
    impl Protocol for Still {
        fn name(&self) -> &str {
            "still"
        }
        fn decide(&self, _: &View) -> Decision {
            Decision::Stay
        }
    }

    /// Every robot moves to all free neighbors (symmetric by construction).
    struct Restless;
    impl Protocol for Restless {
        fn name(&self) -> &str {
            "restless"
        }
        fn decide(&self, v: &View) -> Decision {
            Decision::moving(v.grid().neighbors(v.self_node()).into_iter().filter(|&u| v.is_free(u)).collect())
        }
    }

    fn grid(a: usize, b: usize) -> GridDims {
        GridDims::new(a, b).unwrap()
    }

    fn state(s: &str, g: GridDims, p: Arc<dyn Protocol>, m: Model) -> EngineState {
        EngineState::init(&Configuration::parse(g, s).unwrap(), p, m, Multiplicity::Weak).unwrap()
    }

    #[test]
    fn init_checks() {
        let g = grid(2, 3);
        let s = state("0,0;2,0;1,1", g, Arc::new(Still), Model::Atom);
        assert_eq!(s.visited_count(), 3);
        assert!(s.robots().iter().all(|r| r.pending == Pending::Idle));
        assert_eq!(s.step_count(), 0);
        let tower = Configuration::parse(g, "0,0:2;1,1").unwrap();
        assert!(EngineState::init(&tower, Arc::new(Still), Model::Atom, Multiplicity::Weak).is_err());
    }

    #[test]
    fn full_occupation_is_quiescent_and_explored() {
        let g = grid(1, 3);
        let s = state("0,0;1,0;2,0", g, Arc::new(Still), Model::Corda);
        assert!(s.is_quiescent().unwrap());
        assert!(s.explored());
    }

    #[test]
    fn enabled_action_shapes() {
        let g = grid(3, 4);
        let s = state("0,0;3,0;1,2", g, Arc::new(Restless), Model::Corda);
        let EnabledActions::Corda { actions } = s.enabled_actions().unwrap() else { panic!() };
        assert_eq!(actions.len(), 3);
        assert!(actions.iter().all(|a| matches!(a, SchedulerAction::Look { .. })));

        let a = state("0,0;3,0;1,2", g, Arc::new(Restless), Model::Atom);
        assert_eq!(a.enabled_actions().unwrap().len_before_tie_breaks(), 7);
    }

    #[test]
    fn pending_move_expands_by_tie_break() {
        let g = grid(3, 4);
        let mut s = state("0,0;3,0;1,2", g, Arc::new(Restless), Model::Corda);
        s.step(&SchedulerAction::Look { robot: 0 }).unwrap();
        let EnabledActions::Corda { actions } = s.enabled_actions().unwrap() else { panic!() };
        let moves: Vec<_> = actions.iter().filter(|a| matches!(a, SchedulerAction::Move { robot: 0, .. })).collect();
        assert_eq!(moves.len(), 2);
        assert_eq!(actions.len(), 4);
        assert!(s.step(&SchedulerAction::Look { robot: 0 }).is_err());
    }

    #[test]
    fn outdated_move_applies_verbatim() {
        let g = grid(1, 5);
        // robot 0 at x=0 looks and plans x=1; robot 1 then moves from 2 to 1.
        let mut s = state("0,0;2,0", g, Arc::new(Restless), Model::Corda);
        s.step(&SchedulerAction::Look { robot: 0 }).unwrap();
        s.step(&SchedulerAction::Look { robot: 1 }).unwrap();
        s.step(&SchedulerAction::Move { robot: 1, tie_break: 0 }).unwrap();
        let ev = s.step(&SchedulerAction::Move { robot: 0, tie_break: 0 }).unwrap();
        assert_eq!(ev.config, vec![[1, 0, 2]]);
        assert!(matches!(s.robots()[0].pending, Pending::Idle));
    }

    #[test]
    fn stay_decision_returns_idle() {
        let g = grid(2, 3);
        let mut s = state("0,0;2,0;1,1", g, Arc::new(Still), Model::Corda);
        let before = s.config().clone();
        s.step(&SchedulerAction::Look { robot: 1 }).unwrap();
        assert_eq!(s.robots()[1].pending, Pending::Idle);
        assert_eq!(*s.config(), before);
        assert!(s.step(&SchedulerAction::Move { robot: 1, tie_break: 0 }).is_err());
    }

    #[test]
    fn atom_rejects_malformed_activations() {
        let g = grid(2, 3);
        let mut s = state("0,0;2,0;1,1", g, Arc::new(Restless), Model::Atom);
        assert!(s.step(&SchedulerAction::Activate { robots: vec![], tie_breaks: vec![] }).is_err());
        assert!(s.step(&SchedulerAction::Activate { robots: vec![0, 0], tie_breaks: vec![0, 0] }).is_err());
        assert!(s.step(&SchedulerAction::Activate { robots: vec![0], tie_breaks: vec![5] }).is_err());
        assert!(s.step(&SchedulerAction::Look { robot: 0 }).is_err());
        assert!(s.step(&SchedulerAction::Activate { robots: vec![0, 2], tie_breaks: vec![0, 1] }).is_ok());
    }

    #[test]
    fn oscillating_protocol_times_out() {
        let g = grid(1, 4);
        let mut s = state("0,0;3,0", g, Arc::new(Restless), Model::Atom);
        let out = run(&mut s, &mut SynchronousAdversary::default(), RunLimits { max_steps: 50 }).unwrap();
        assert!(out.verdict.timed_out);
        assert!(!out.verdict.quiescent);
        assert_eq!(out.events.len(), 50);
    }

    #[test]
    fn trace_round_trip_and_replay() {
        let g = grid(3, 4);
        let init = Configuration::parse(g, "0,0;3,0;1,2").unwrap();
        let mut s = EngineState::init(&init, Arc::new(Restless), Model::Corda, Multiplicity::Weak).unwrap();
        let out = run(&mut s, &mut RandomAdversary::new(7), RunLimits { max_steps: 40 }).unwrap();
        let header = TraceHeader {
            grid: g.to_string(),
            k: 3,
            protocol: "restless".into(),
            model: Model::Corda,
            mode: Multiplicity::Weak,
            initial: init.to_string(),
            seed: Some(7),
        };
        let mut buf = Vec::new();
        write_trace(&mut buf, &header, &out.events).unwrap();
        let (h2, ev2) = read_trace(buf.as_slice()).unwrap();
        assert_eq!(h2, header);
        assert_eq!(ev2, out.events);
        let mut again = EngineState::init(&init, Arc::new(Restless), Model::Corda, Multiplicity::Weak).unwrap();
        replay(&mut again, &ev2).unwrap();
        assert_eq!(again, s);
    }

    #[test]
    fn expand_counts_tie_breaks() {
        let e = EnabledActions::Atom {
            choices: vec![AtomChoice { robot: 0, options: 2 }, AtomChoice { robot: 1, options: 0 }],
        };
        // {0}: 2, {1}: 1, {0,1}: 2
        assert_eq!(e.expand().len(), 5);
        assert!(e.expand().iter().all(|a| e.contains(a)));
    }
}
