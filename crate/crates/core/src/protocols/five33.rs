//! Five robots on the `(3, 3)` grid.
//!
//! Preparation steers every towerless configuration, by its line-count
//! pattern, into one of four special configurations (or into the pair move
//! that builds a center tower directly). A special configuration builds a
//! single tower; from there a scripted walk moves one or two robots over the
//! nodes not yet covered while the tower and the anchors stay.

use std::sync::{Arc, OnceLock};

use serde::Serialize;

use super::geometry::{free_neighbors, free_on, push_moves, scripted, symmetrize, toward, weak, Moves};
use crate::config::Configuration;
use crate::engine::Protocol;
use crate::error::{Error, Result};
use crate::grid::{dist, GridDims, NodeCoord};
use crate::triple::{triple_classify, Line, TripleClass, TriplePattern};
use crate::verifier::{EdgeInfo, EdgeObserver};
use crate::view::{Decision, View};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Stage33 {
    /// A special configuration: its move builds the tower.
    Special,
    Preparation(TriplePattern),
    Exploration,
    Terminal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Plan33 {
    pub stage: Stage33,
    pub moves: Moves,
}

impl Plan33 {
    pub fn targets_of(&self, v: NodeCoord) -> Vec<NodeCoord> {
        self.moves.iter().filter(|(f, _)| *f == v).flat_map(|(_, t)| t.iter().copied()).collect()
    }
}

type Script = Vec<(Configuration, Moves)>;

fn n(x: usize, y: usize) -> NodeCoord {
    NodeCoord::new(x, y)
}

fn grid33() -> GridDims {
    GridDims::new(3, 3).expect("valid grid")
}

fn entry(spec: &str, moves: &[((usize, usize), &[(usize, usize)])]) -> (Configuration, Moves) {
    let c = Configuration::parse(grid33(), spec).expect("valid script entry");
    let moves = moves.iter().map(|&((x, y), ts)| (n(x, y), ts.iter().map(|&(a, b)| n(a, b)).collect())).collect();
    (c, moves)
}

/// The four towerless configurations whose move builds the tower.
fn specials() -> &'static Script {
    static S: OnceLock<Script> = OnceLock::new();
    S.get_or_init(|| {
        vec![
            // a full borderline, the center and one more middle-line robot
            entry("0,0;1,0;2,0;1,1;2,1", &[((2, 1), &[(1, 1)])]),
            // a full middle line, one corner next to it and the opposite side middle
            entry("0,0;1,0;1,1;1,2;2,1", &[((0, 0), &[(1, 0)])]),
            // the plus shape
            entry("1,0;0,1;1,1;2,1;1,2", &[((1, 1), &[(1, 0), (0, 1), (2, 1), (1, 2)])]),
            // a corner with both neighbors and the two far side middles
            entry("0,0;1,0;0,1;2,1;1,2", &[((0, 0), &[(1, 0), (0, 1)])]),
        ]
    })
}

/// Towerless configurations whose move overrides the line-count rule.
fn transits() -> &'static Script {
    static S: OnceLock<Script> = OnceLock::new();
    S.get_or_init(|| {
        vec![
            // halfway from the L-shape to the corner-with-both-neighbors special
            entry("0,0;1,0;0,1;2,1;0,2", &[((0, 2), &[(1, 2)])]),
        ]
    })
}

/// Tower configurations with the moves of the exploration walks. Entries
/// with no moves are terminal.
fn walks() -> &'static Script {
    static S: OnceLock<Script> = OnceLock::new();
    S.get_or_init(|| {
        let mut out = Script::new();
        // Center tower: one single steps per class until the three singles
        // settle in a shape with no rule.
        out.push(entry("1,1:2;0,0;1,0;2,0", &[((0, 0), &[(0, 1)])]));
        out.push(entry("1,1:2;0,0;1,0;2,1", &[((0, 0), &[(0, 1)])]));
        out.push(entry("1,1:2;0,0;1,0;2,2", &[((1, 0), &[(2, 0)])]));
        out.push(entry("1,1:2;0,0;1,0;1,2", &[((1, 2), &[(2, 2)])]));
        out.push(entry("1,1:2;0,0;1,0;0,2", &[((0, 2), &[(0, 1)])]));
        out.push(entry("1,1:2;0,0;2,0;2,2", &[((0, 0), &[(1, 0)])]));
        out.push(entry("1,1:2;1,0;2,1;1,2", &[((2, 1), &[(2, 2)])]));
        out.push(entry("1,1:2;0,0;1,0;0,1", &[]));
        out.push(entry("1,1:2;0,0;2,0;1,2", &[]));
        out.push(entry("1,1:2;0,0;2,1;1,2", &[]));
        // Tower at the middle of a side.
        out.push(entry("1,0:2;1,1;1,2;2,1", &[((1, 1), &[(0, 1)])]));
        out.push(entry("1,0:2;0,1;2,1;1,2", &[((1, 2), &[(0, 2), (2, 2)])]));
        out.push(entry("1,0:2;0,1;2,1;0,2", &[((2, 1), &[(2, 0)])]));
        out.push(entry("1,0:2;0,1;2,0;0,2", &[((0, 2), &[(1, 2)])]));
        out.push(entry("1,0:2;0,1;2,0;1,2", &[((1, 2), &[(2, 2)])]));
        out.push(entry("1,0:2;0,1;2,0;2,2", &[((0, 1), &[(0, 0)])]));
        out.push(entry("1,0:2;0,0;2,0;2,2", &[((2, 2), &[(2, 1)])]));
        out.push(entry("1,0:2;0,0;2,0;2,1", &[((2, 1), &[(1, 1)])]));
        out.push(entry("1,0:2;0,0;2,0;1,1", &[]));
        out
    })
}

fn check_instance(c: &Configuration) -> Result<()> {
    if c.grid() != grid33() || c.robot_count() != 5 {
        return Err(Error::Unsupported(format!("five33 handles 5 robots on (3,3), got {} on {}", c.robot_count(), c.grid())));
    }
    Ok(())
}

/// Whether `c` is one of the four tower-building configurations.
pub fn is_special(c: &Configuration) -> bool {
    scripted(c, specials()).is_some()
}

fn robots_on(c: &Configuration, line: Line) -> Vec<NodeCoord> {
    line.nodes().into_iter().filter(|&v| c.count(v) > 0).collect()
}

fn lone_borderline(t: &TripleClass) -> Line {
    if t.triple[0] == 1 {
        t.lines[0]
    } else {
        t.lines[2]
    }
}

fn borderline_with(t: &TripleClass, count: u32) -> Option<Line> {
    [0, 2].into_iter().find(|&i| t.triple[i] == count).map(|i| t.lines[i])
}

/// Two full borderlines sharing a corner.
fn l_shape(c: &Configuration) -> bool {
    let full = |l: &[NodeCoord]| l.iter().all(|&v| c.count(v) > 0);
    let lines = grid33().borderlines().expect("3x3 has borderlines");
    lines.iter().filter(|l| full(l)).count() >= 2
}

fn preparation(c: &Configuration) -> Result<Plan33> {
    let t = triple_classify(c)?;
    let pattern = t.pattern();
    let mut moves = Moves::new();
    let middle = t.lines[1];
    match pattern {
        TriplePattern::OneOneThree => {
            if l_shape(c) {
                for v in c.occupied().into_iter().filter(|&v| grid33().is_corner(v)) {
                    push_moves(&mut moves, v, free_neighbors(c, v));
                }
            } else {
                let r = robots_on(c, lone_borderline(&t))[0];
                push_moves(&mut moves, r, toward(c, r, &free_on(c, &middle.nodes())));
            }
        }
        TriplePattern::OneTwoTwo => {
            let r = robots_on(c, lone_borderline(&t))[0];
            push_moves(&mut moves, r, toward(c, r, &free_on(c, &middle.nodes())));
        }
        TriplePattern::OneThreeOne => {
            let goals: Vec<NodeCoord> = [t.lines[0], t.lines[2]].iter().flat_map(|&l| robots_on(c, l)).collect();
            if let Some(&r) = robots_on(c, middle).iter().find(|&&v| free_neighbors(c, v).len() >= 2) {
                push_moves(&mut moves, r, toward(c, r, &goals));
            }
        }
        TriplePattern::TwoOneTwo => {
            let m = robots_on(c, middle)[0];
            let gap = |l: Line| {
                let r = robots_on(c, l);
                dist(r[0], r[1])
            };
            let (g1, g3) = (gap(t.lines[0]), gap(t.lines[2]));
            if g1 == 2 && g3 == 2 {
                push_moves(&mut moves, m, free_neighbors(c, m).into_iter().filter(|&u| !middle.contains(u)));
            } else if g1 != g3 {
                let far = if g1 == 2 { t.lines[0] } else { t.lines[2] };
                if m == n(1, 1) {
                    push_moves(&mut moves, m, free_neighbors(c, m).into_iter().filter(|&u| far.contains(u)));
                } else {
                    for v in robots_on(c, far) {
                        if grid33().is_corner(v) && free_neighbors(c, v).len() == 2 {
                            push_moves(&mut moves, v, free_neighbors(c, v).into_iter().filter(|&u| far.contains(u)));
                        }
                    }
                }
            } else {
                let completes = |u: NodeCoord| {
                    grid33().borderlines().expect("3x3 has borderlines").iter().any(|l| {
                        l.contains(&u) && !l.contains(&m) && l.iter().filter(|&&v| c.count(v) > 0).count() == 2
                    })
                };
                let mut targets: Vec<NodeCoord> = free_neighbors(c, m).into_iter().filter(|&u| completes(u)).collect();
                if targets.is_empty() {
                    let holes: Vec<NodeCoord> =
                        [t.lines[0], t.lines[2]].iter().flat_map(|l| free_on(c, &l.nodes())).collect();
                    targets = toward(c, m, &holes);
                }
                push_moves(&mut moves, m, targets);
            }
        }
        TriplePattern::TwoThreeZero => {
            let pair = borderline_with(&t, 2).expect("a borderline holds two robots");
            let hole = free_on(c, &pair.nodes())[0];
            for v in robots_on(c, middle).into_iter().filter(|&v| dist(v, hole) == 1) {
                push_moves(&mut moves, v, [hole]);
            }
        }
        TriplePattern::ThreeZeroTwo => {
            let pair = borderline_with(&t, 2).expect("a borderline holds two robots");
            let robots = robots_on(c, pair);
            let adjacent = dist(robots[0], robots[1]) == 1;
            for v in robots.into_iter().filter(|&v| !adjacent || !grid33().is_corner(v)) {
                push_moves(&mut moves, v, free_neighbors(c, v).into_iter().filter(|&u| middle.contains(u)));
            }
        }
        TriplePattern::ThreeTwoZero => {
            for v in robots_on(c, middle) {
                push_moves(&mut moves, v, free_neighbors(c, v).into_iter().filter(|&u| middle.contains(u)));
            }
        }
    }
    Ok(Plan33 { stage: Stage33::Preparation(pattern), moves })
}

fn raw_plan(c: &Configuration) -> Result<Plan33> {
    if let Some(moves) = scripted(c, specials()) {
        return Ok(Plan33 { stage: Stage33::Special, moves });
    }
    if c.is_towerless() {
        if let Some(moves) = scripted(c, transits()) {
            return Ok(Plan33 { stage: Stage33::Preparation(triple_classify(c)?.pattern()), moves });
        }
        return preparation(c);
    }
    match scripted(&weak(c), walks()) {
        Some(moves) if moves.is_empty() => Ok(Plan33 { stage: Stage33::Terminal, moves }),
        Some(moves) => Ok(Plan33 { stage: Stage33::Exploration, moves }),
        None => Err(Error::ClassificationGap(format!("{c}: tower configuration outside the exploration walks"))),
    }
}

/// Moves of every robot in `c`, closed under the grid's symmetries.
pub fn five33_plan(c: &Configuration) -> Result<Plan33> {
    check_instance(c)?;
    let (plan, moves) = symmetrize(c, |rep| raw_plan(rep), |p| match p {
        Ok(p) => &p.moves,
        Err(_) => &EMPTY,
    });
    let plan = plan?;
    Ok(Plan33 { stage: plan.stage, moves })
}

static EMPTY: Moves = Moves::new();

#[derive(Debug, Default, Clone, Copy)]
pub struct Five33;

impl Protocol for Five33 {
    fn name(&self) -> &str {
        "five33"
    }

    fn decide(&self, view: &View) -> Decision {
        match five33_plan(&weak(&view.to_configuration())) {
            Ok(plan) => Decision::moving(plan.targets_of(view.self_node())),
            Err(_) => Decision::Stay,
        }
    }
}

/// Flags a tower built outside a special configuration or the center pair
/// move, and any step that dissolves every tower.
pub fn preparation_observer() -> Arc<EdgeObserver> {
    Arc::new(|e: &EdgeInfo| {
        if !e.before.is_towerless() {
            if e.after.is_towerless() {
                return Err(format!("{} lost its tower in {}", e.before, e.after));
            }
            return Ok(());
        }
        if e.after.is_towerless() {
            return Ok(());
        }
        let plan = five33_plan(&e.before).map_err(|err| err.to_string())?;
        match plan.stage {
            Stage33::Special | Stage33::Preparation(TriplePattern::ThreeTwoZero) => Ok(()),
            other => Err(format!("tower built during preparation: {} ({other:?}) to {}", e.before, e.after)),
        }
    })
}
