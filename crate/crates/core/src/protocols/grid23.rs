//! Three robots on the `(2, 3)` grid: gather on a long borderline, build a
//! corner tower there, then walk the remaining robot along the other line.

use serde::Serialize;

use super::geometry::{push_moves, symmetrize, toward, weak, Moves};
use crate::config::Configuration;
use crate::engine::Protocol;
use crate::error::{Error, Result};
use crate::grid::{dist, GridDims, NodeCoord};
use crate::view::{Decision, View};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Stage23 {
    /// One long borderline holds two robots; the third joins it.
    Gather,
    /// All robots on one long borderline; the middle one builds a tower.
    BuildTower,
    /// The single robot walks the line without the tower.
    Explore,
    Terminal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Plan23 {
    pub stage: Stage23,
    pub moves: Moves,
}

impl Plan23 {
    pub fn targets_of(&self, v: NodeCoord) -> Vec<NodeCoord> {
        self.moves.iter().filter(|(f, _)| *f == v).flat_map(|(_, t)| t.iter().copied()).collect()
    }
}

fn check_instance(c: &Configuration) -> Result<()> {
    if c.grid() != GridDims::new(2, 3)? || c.robot_count() != 3 {
        return Err(Error::Unsupported(format!("grid23 handles 3 robots on (2,3), got {} on {}", c.robot_count(), c.grid())));
    }
    Ok(())
}

fn row(y: usize) -> Vec<NodeCoord> {
    (0..3).map(|x| NodeCoord::new(x, y)).collect()
}

fn raw_plan(c: &Configuration) -> Result<Plan23> {
    let mut moves = Moves::new();
    let robots = c.occupied();
    if let [tower] = c.towers()[..] {
        let Some(&w) = robots.iter().find(|&&v| v != tower) else {
            return Err(Error::ClassificationGap(format!("{c}: tower without a walker")));
        };
        let stage = if w.y == tower.y {
            push_moves(&mut moves, w, [NodeCoord::new(w.x, 1 - w.y)]);
            Stage23::Explore
        } else if dist(w, tower) > 1 {
            let x = if w.x > tower.x { w.x - 1 } else { w.x + 1 };
            push_moves(&mut moves, w, [NodeCoord::new(x, w.y)]);
            Stage23::Explore
        } else {
            Stage23::Terminal
        };
        return Ok(Plan23 { stage, moves });
    }
    if !c.is_towerless() {
        return Err(Error::ClassificationGap(format!("{c}: more than one tower")));
    }
    let on = |y: usize| robots.iter().filter(|v| v.y == y).count();
    let full = (0..2).find(|&y| on(y) == 3);
    if let Some(y) = full {
        let mid = NodeCoord::new(1, y);
        push_moves(&mut moves, mid, [NodeCoord::new(0, y), NodeCoord::new(2, y)]);
        return Ok(Plan23 { stage: Stage23::BuildTower, moves });
    }
    let y = if on(0) == 2 { 0 } else { 1 };
    let off = *robots.iter().find(|v| v.y != y).expect("one robot off the pair's line");
    let free: Vec<NodeCoord> = row(y).into_iter().filter(|&v| c.count(v) == 0).collect();
    push_moves(&mut moves, off, toward(c, off, &free));
    Ok(Plan23 { stage: Stage23::Gather, moves })
}

/// Moves of every robot in `c`, closed under the grid's symmetries.
pub fn grid23_plan(c: &Configuration) -> Result<Plan23> {
    check_instance(c)?;
    let (plan, moves) = symmetrize(c, |rep| raw_plan(rep), |p| match p {
        Ok(p) => &p.moves,
        Err(_) => &EMPTY,
    });
    let plan = plan?;
    Ok(Plan23 { stage: plan.stage, moves })
}

static EMPTY: Moves = Moves::new();

#[derive(Debug, Default, Clone, Copy)]
pub struct Grid23;

impl Protocol for Grid23 {
    fn name(&self) -> &str {
        "grid23"
    }

    fn decide(&self, view: &View) -> Decision {
        match grid23_plan(&weak(&view.to_configuration())) {
            Ok(plan) => Decision::moving(plan.targets_of(view.self_node())),
            Err(_) => Decision::Stay,
        }
    }
}
