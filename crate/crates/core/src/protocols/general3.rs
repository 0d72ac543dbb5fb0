//! Three robots exploring any grid whose longer side exceeds 3.
//!
//! Set-Up gathers the robots into a line starting at a corner along a
//! longest borderline, without ever creating a tower. Orientation moves the
//! corner robot onto its neighbor; the resulting tower fixes a coordinate
//! frame. Exploration walks the single remaining robot along a boustrophedon
//! order of that frame.

use serde::Serialize;

use super::geometry::{
    closest_corners, corner_distance, elect, free_neighbors, free_on, lines_through, on_borderline, sort_row_major,
    toward,
};
use crate::config::Configuration;
use crate::engine::Protocol;
use crate::error::{Error, Result};
use crate::grid::{dist, GridDims, NodeCoord};
use crate::view::{Decision, View};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SetupCase {
    StrictLeader,
    HalfLeader1,
    HalfLeader2,
    FullyLeader1,
    FullyLeader2,
    SemiLeader1,
    SemiLeader2a,
    SemiLeader2b,
    Choice1,
    Choice2,
    Undefined1,
    Undefined2,
    Undefined3,
    Undefined4_1,
    Undefined4_2,
    Undefined4_3i,
    Undefined4_3ii,
    Undefined4_4i,
    Undefined4_4ii,
    Undefined4_4iii,
    SetUpDone,
    Oriented,
    Exploring,
    Terminal,
}

/// Movers of a configuration and their destination sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Plan {
    pub case: SetupCase,
    pub moves: Vec<(NodeCoord, Vec<NodeCoord>)>,
}

impl Plan {
    fn new(case: SetupCase) -> Self {
        Plan { case, moves: Vec::new() }
    }

    fn with(mut self, from: NodeCoord, mut targets: Vec<NodeCoord>) -> Self {
        sort_row_major(&mut targets);
        if !targets.is_empty() {
            self.moves.push((from, targets));
        }
        self
    }

    pub fn targets_of(&self, v: NodeCoord) -> Vec<NodeCoord> {
        self.moves.iter().filter(|(f, _)| *f == v).flat_map(|(_, t)| t.iter().copied()).collect()
    }
}

/// Coordinate frame fixed by the tower: the origin is the corner next to
/// the tower, the x axis points at the tower.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OrientedFrame {
    pub origin: NodeCoord,
    pub x_axis: (i64, i64),
    pub y_axis: (i64, i64),
}

impl OrientedFrame {
    pub fn to_frame(&self, v: NodeCoord) -> (usize, usize) {
        let (dx, dy) = (v.x as i64 - self.origin.x as i64, v.y as i64 - self.origin.y as i64);
        let fx = dx * self.x_axis.0 + dy * self.x_axis.1;
        let fy = dx * self.y_axis.0 + dy * self.y_axis.1;
        (fx as usize, fy as usize)
    }

    pub fn from_frame(&self, (fx, fy): (usize, usize)) -> NodeCoord {
        let x = self.origin.x as i64 + fx as i64 * self.x_axis.0 + fy as i64 * self.y_axis.0;
        let y = self.origin.y as i64 + fx as i64 * self.x_axis.1 + fy as i64 * self.y_axis.1;
        NodeCoord::new(x as usize, y as usize)
    }
}

/// The frame defined by a 2-tower at distance 1 from exactly one corner,
/// along a longest borderline.
pub fn oriented_frame(grid: GridDims, tower: NodeCoord) -> Result<OrientedFrame> {
    let corners: Vec<NodeCoord> = grid.corners().into_iter().filter(|&c| dist(c, tower) == 1).collect();
    let [origin] = corners[..] else {
        return Err(Error::ClassificationGap(format!("tower at {tower} is not next to exactly one corner")));
    };
    let along_longest = lines_through(grid, origin).iter().any(|l| l.len() == grid.j() && l.contains(&tower));
    if !along_longest {
        return Err(Error::ClassificationGap(format!("tower at {tower} is not on a longest borderline")));
    }
    let x_axis = (tower.x as i64 - origin.x as i64, tower.y as i64 - origin.y as i64);
    let y_axis = grid
        .neighbors(origin)
        .into_iter()
        .find(|&u| u != tower)
        .map(|u| (u.x as i64 - origin.x as i64, u.y as i64 - origin.y as i64))
        .unwrap_or((-x_axis.1, x_axis.0));
    Ok(OrientedFrame { origin, x_axis, y_axis })
}

/// Boustrophedon order of frame coordinates: rows by increasing `y`, even
/// rows left to right and odd rows right to left.
pub fn snake_order(grid: GridDims) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(grid.node_count());
    for y in 0..grid.i() {
        if y % 2 == 0 {
            out.extend((0..grid.j()).map(|x| (x, y)));
        } else {
            out.extend((0..grid.j()).rev().map(|x| (x, y)));
        }
    }
    out
}

pub fn snake_successor(grid: GridDims, p: (usize, usize)) -> Option<(usize, usize)> {
    let order = snake_order(grid);
    let at = order.iter().position(|&q| q == p)?;
    order.get(at + 1).copied()
}

fn check_instance(c: &Configuration) -> Result<()> {
    if c.grid().j() <= 3 || c.robot_count() != 3 {
        return Err(Error::Unsupported(format!(
            "the three-robot protocol needs 3 robots on a grid with a side longer than 3, got {} on {}",
            c.robot_count(),
            c.grid()
        )));
    }
    Ok(())
}

pub fn classify_setup(c: &Configuration) -> Result<SetupCase> {
    Ok(general3_plan(c)?.case)
}

/// Classifies `c` and returns every robot allowed to move with its targets.
pub fn general3_plan(c: &Configuration) -> Result<Plan> {
    check_instance(c)?;
    if !c.is_towerless() {
        return tower_plan(c);
    }
    let grid = c.grid();
    if let Some((corner, next)) = setup_line(c) {
        return Ok(Plan::new(SetupCase::SetUpDone).with(corner, vec![next]));
    }
    let robots = c.occupied();
    let at_corner: Vec<NodeCoord> = robots.iter().copied().filter(|&v| grid.is_corner(v)).collect();
    match at_corner.len() {
        0 => undefined(c, &robots),
        1 => leader(c, at_corner[0], &robots),
        _ => choice(c, &at_corner, &robots),
    }
}

/// A corner robot followed by two robots along a longest borderline.
/// Returns the corner and its occupied neighbor.
fn setup_line(c: &Configuration) -> Option<(NodeCoord, NodeCoord)> {
    let grid = c.grid();
    for l in grid.longest_borderlines().ok()? {
        for ends in [l.clone(), l.iter().rev().copied().collect()] {
            if ends[..3].iter().all(|&v| c.count(v) == 1) {
                return Some((ends[0], ends[1]));
            }
        }
    }
    None
}

fn tower_plan(c: &Configuration) -> Result<Plan> {
    let grid = c.grid();
    let towers = c.towers();
    let singles: Vec<NodeCoord> = c.occupied().into_iter().filter(|&v| c.count(v) == 1).collect();
    let ([tower], [explorer]) = (&towers[..], &singles[..]) else {
        return Err(Error::ClassificationGap(format!("unexpected tower configuration {c}")));
    };
    let frame = oriented_frame(grid, *tower)?;
    let here = frame.to_frame(*explorer);
    Ok(match snake_successor(grid, here) {
        None => Plan::new(SetupCase::Terminal),
        Some(next) => {
            let case = if here == (2, 0) { SetupCase::Oriented } else { SetupCase::Exploring };
            Plan::new(case).with(*explorer, vec![frame.from_frame(next)])
        }
    })
}

fn others(robots: &[NodeCoord], not: &[NodeCoord]) -> Vec<NodeCoord> {
    robots.iter().copied().filter(|v| !not.contains(v)).collect()
}

/// Free neighbors of `v` outside `line`.
fn off_line(c: &Configuration, v: NodeCoord, line: &[NodeCoord]) -> Vec<NodeCoord> {
    free_neighbors(c, v).into_iter().filter(|u| !line.contains(u)).collect()
}

fn on_line(c: &Configuration, v: NodeCoord, line: &[NodeCoord]) -> Vec<NodeCoord> {
    free_neighbors(c, v).into_iter().filter(|u| line.contains(u)).collect()
}

fn gap(c: &Configuration, what: &str) -> Error {
    Error::ClassificationGap(format!("{what} in {c}"))
}

fn leader(c: &Configuration, r1: NodeCoord, robots: &[NodeCoord]) -> Result<Plan> {
    let grid = c.grid();
    let lines1 = lines_through(grid, r1);
    let rest = others(robots, &[r1]);
    let (a, b) = (rest[0], rest[1]);
    let line_of = |v: NodeCoord| lines1.iter().find(|l| l.contains(&v)).cloned();
    match (line_of(a), line_of(b)) {
        (None, None) => {
            let goals: Vec<NodeCoord> =
                lines1.iter().filter(|l| l.len() == grid.j()).flat_map(|l| free_on(c, l)).collect();
            let d = dist(r1, a).min(dist(r1, b));
            let mut plan = Plan::new(SetupCase::StrictLeader);
            for m in [a, b].into_iter().filter(|&m| dist(r1, m) == d) {
                plan = plan.with(m, toward(c, m, &goals));
            }
            Ok(plan)
        }
        (Some(l), None) | (None, Some(l)) => {
            let (r2, r3) = if l.contains(&a) { (a, b) } else { (b, a) };
            if l.len() == grid.j() {
                Ok(Plan::new(SetupCase::HalfLeader1).with(r3, toward(c, r3, &free_on(c, &l))))
            } else {
                let outside = off_line(c, r2, &l);
                let targets = if outside.is_empty() { on_line(c, r2, &l) } else { outside };
                Ok(Plan::new(SetupCase::HalfLeader2).with(r2, targets))
            }
        }
        (Some(la), Some(lb)) if la == lb => {
            let (r2, r3) = if dist(r1, a) < dist(r1, b) { (a, b) } else { (b, a) };
            if la.len() == grid.j() {
                let plan = Plan::new(SetupCase::FullyLeader1);
                if dist(r1, r2) > 1 {
                    Ok(plan.with(r2, on_line(c, r2, &la).into_iter().filter(|&u| dist(u, r1) < dist(r2, r1)).collect()))
                } else {
                    Ok(plan.with(r3, on_line(c, r3, &la).into_iter().filter(|&u| dist(u, r2) < dist(r3, r2)).collect()))
                }
            } else {
                Ok(Plan::new(SetupCase::FullyLeader2).with(r2, off_line(c, r2, &la)))
            }
        }
        (Some(la), Some(lb)) => {
            if !grid.is_square() {
                let (short, line) = if la.len() < lb.len() { (a, la) } else { (b, lb) };
                return Ok(Plan::new(SetupCase::SemiLeader1).with(short, off_line(c, short, &line)));
            }
            let (da, db) = (dist(r1, a), dist(r1, b));
            if da != db {
                let (m, line) = if da < db { (a, la) } else { (b, lb) };
                return Ok(Plan::new(SetupCase::SemiLeader2a).with(m, off_line(c, m, &line)));
            }
            let plan = Plan::new(SetupCase::SemiLeader2b);
            if da > 1 {
                Ok(plan.with(r1, free_neighbors(c, r1)))
            } else {
                Ok(plan.with(a, on_line(c, a, &la)).with(b, on_line(c, b, &lb)))
            }
        }
    }
}

fn choice(c: &Configuration, at_corner: &[NodeCoord], robots: &[NodeCoord]) -> Result<Plan> {
    let grid = c.grid();
    let share = |u: NodeCoord, v: NodeCoord| lines_through(grid, u).iter().any(|l| l.contains(&v));
    if at_corner.len() == 3 {
        let r1 = at_corner
            .iter()
            .copied()
            .find(|&r| at_corner.iter().all(|&o| o == r || share(r, o)))
            .ok_or_else(|| gap(c, "no corner robot links the other two"))?;
        let targets: Vec<NodeCoord> = lines_through(grid, r1)
            .iter()
            .filter(|l| l.len() == grid.j())
            .flat_map(|l| on_line(c, r1, l))
            .collect();
        return Ok(Plan::new(SetupCase::Choice2).with(r1, targets));
    }
    let (r1, r2) = (at_corner[0], at_corner[1]);
    let r3 = others(robots, at_corner)[0];
    let toward_longest = |c: &Configuration| {
        let goals: Vec<NodeCoord> = [r1, r2]
            .iter()
            .flat_map(|&r| lines_through(grid, r))
            .filter(|l| l.len() == grid.j())
            .flat_map(|l| free_on(c, &l))
            .collect();
        toward(c, r3, &goals)
    };
    let plan = Plan::new(SetupCase::Choice1);
    let Some(l3) = lines_through(grid, r3).into_iter().next() else {
        return Ok(plan.with(r3, toward_longest(c)));
    };
    match (l3.contains(&r1), l3.contains(&r2)) {
        (true, true) => {
            let (d1, d2) = (dist(r1, r3), dist(r2, r3));
            if d1 != d2 {
                let far = if d1 > d2 { r1 } else { r2 };
                let d = d1.max(d2);
                Ok(plan.with(far, on_line(c, far, &l3).into_iter().filter(|&u| dist(u, r3) < d).collect()))
            } else {
                let along = on_line(c, r3, &l3);
                let targets = if along.is_empty() { off_line(c, r3, &l3) } else { along };
                Ok(plan.with(r3, targets))
            }
        }
        (true, false) => Ok(plan.with(r2, toward(c, r2, &free_on(c, &l3)))),
        (false, true) => Ok(plan.with(r1, toward(c, r1, &free_on(c, &l3)))),
        // R3 on a borderline holding neither corner robot
        (false, false) => Ok(plan.with(r3, toward_longest(c))),
    }
}

fn to_corner(c: &Configuration, v: NodeCoord) -> Vec<NodeCoord> {
    toward(c, v, &closest_corners(c.grid(), v))
}

fn undefined(c: &Configuration, robots: &[NodeCoord]) -> Result<Plan> {
    let grid = c.grid();
    let dc = |v: NodeCoord| corner_distance(grid, v);
    if grid.is_square() {
        for l in grid.borderlines()? {
            let on: Vec<NodeCoord> = robots.iter().copied().filter(|v| l.contains(v)).collect();
            if on.len() != 2 {
                continue;
            }
            let r3 = others(robots, &on)[0];
            let strict = on.iter().any(|&r| robots.iter().all(|&o| o == r || dc(r) < dc(o)));
            // a tie on the line is tolerated when R3 sits on a perpendicular borderline
            let across = lines_through(grid, r3).iter().any(|m| m[0] == l[0] || m[0] == l[l.len() - 1]
                || m[m.len() - 1] == l[0] || m[m.len() - 1] == l[l.len() - 1]);
            let leads = strict || (across && on.iter().any(|&r| dc(r) <= dc(r3)));
            if leads {
                return Ok(Plan::new(SetupCase::Undefined1).with(r3, toward(c, r3, &free_on(c, &l))));
            }
        }
    }
    let m = robots.iter().map(|&v| dc(v)).min().expect("three robots");
    let closest: Vec<NodeCoord> = robots.iter().copied().filter(|&v| dc(v) == m).collect();
    match closest.len() {
        1 => Ok(Plan::new(SetupCase::Undefined2).with(closest[0], to_corner(c, closest[0]))),
        2 => {
            let (r1, r2) = (closest[0], closest[1]);
            let r3 = others(robots, &closest)[0];
            let (d1, d2) = (dist(r1, r3), dist(r2, r3));
            let plan = Plan::new(SetupCase::Undefined3);
            if d1 == d2 {
                let free = free_neighbors(c, r3);
                let split: Vec<NodeCoord> = free.iter().copied().filter(|&u| dist(u, r1) != dist(u, r2)).collect();
                let targets = if d1 == 1 {
                    if split.is_empty() {
                        free
                    } else {
                        split
                    }
                } else {
                    let one_side: Vec<NodeCoord> =
                        free.into_iter().filter(|&u| (dist(u, r1) < d1) != (dist(u, r2) < d2)).collect();
                    if one_side.is_empty() {
                        split
                    } else {
                        one_side
                    }
                };
                if targets.is_empty() {
                    // R3 cannot break the tie: an elected leader heads for its corner instead.
                    let elected = elect(c, &[r1, r2]);
                    if let [v] = elected[..] {
                        return Ok(plan.with(v, to_corner(c, v)));
                    }
                    let (t1, t2) = (to_corner(c, r1), to_corner(c, r2));
                    if t1.iter().all(|t| !t2.contains(t)) {
                        return Ok(plan.with(r1, t1).with(r2, t2));
                    }
                    // mirror images heading for one corner would collide: both back off
                    let away = |v: NodeCoord| -> Vec<NodeCoord> {
                        let corners = closest_corners(grid, v);
                        free_neighbors(c, v)
                            .into_iter()
                            .filter(|&u| corners.iter().all(|&k| dist(u, k) > dist(v, k)))
                            .collect()
                    };
                    let (a1, a2) = (away(r1), away(r2));
                    let apart = |a: &[NodeCoord], b: &[NodeCoord]| a.iter().copied().filter(|u| !b.contains(u)).collect();
                    return Ok(plan.with(r1, apart(&a1, &a2)).with(r2, apart(&a2, &a1)));
                }
                Ok(plan.with(r3, targets))
            } else {
                let near = if d1 < d2 { r1 } else { r2 };
                Ok(plan.with(near, to_corner(c, near)))
            }
        }
        _ => undefined4(c, robots),
    }
}

fn undefined4(c: &Configuration, robots: &[NodeCoord]) -> Result<Plan> {
    let grid = c.grid();
    let on: Vec<NodeCoord> = robots.iter().copied().filter(|&v| on_borderline(grid, v)).collect();
    let off: Vec<NodeCoord> = others(robots, &on);
    match on.len() {
        1 => Ok(Plan::new(SetupCase::Undefined4_1).with(on[0], to_corner(c, on[0]))),
        2 => Ok(Plan::new(SetupCase::Undefined4_2).with(off[0], to_corner(c, off[0]))),
        3 => {
            let line = |v: NodeCoord| lines_through(grid, v).into_iter().next().expect("on a borderline");
            let apart: Vec<NodeCoord> = robots
                .iter()
                .copied()
                .filter(|&v| {
                    let rest = others(robots, &[v]);
                    line(rest[0]) == line(rest[1])
                })
                .collect();
            if let [v] = apart[..] {
                return Ok(Plan::new(SetupCase::Undefined4_3i).with(v, to_corner(c, v)));
            }
            // one robot per borderline: the odd one is perpendicular to the others
            let horizontal = |v: NodeCoord| line(v).iter().all(|u| u.y == v.y);
            let h: Vec<NodeCoord> = robots.iter().copied().filter(|&v| horizontal(v)).collect();
            let odd = if h.len() == 1 { h[0] } else { others(robots, &h)[0] };
            Ok(Plan::new(SetupCase::Undefined4_3ii).with(odd, to_corner(c, odd)))
        }
        _ => undefined4_4(c, robots),
    }
}

fn elected_plan(c: &Configuration, case: SetupCase, movers: &[NodeCoord], goals: impl Fn(NodeCoord) -> Vec<NodeCoord>) -> Plan {
    let mut plan = Plan::new(case);
    for v in elect(c, movers) {
        plan = plan.with(v, toward(c, v, &goals(v)));
    }
    plan
}

fn undefined4_4(c: &Configuration, robots: &[NodeCoord]) -> Result<Plan> {
    let grid = c.grid();
    let cc: Vec<Vec<NodeCoord>> = robots.iter().map(|&v| closest_corners(grid, v)).collect();
    let pair = |r3: usize| ((r3 + 1) % 3, (r3 + 2) % 3);
    // (i) two robots aim at a corner the third does not aim at
    let movers: Vec<NodeCoord> = (0..3)
        .filter(|&r3| {
            let (a, b) = pair(r3);
            cc[a].iter().any(|k| cc[b].contains(k) && !cc[r3].contains(k))
        })
        .map(|r3| robots[r3])
        .collect();
    if !movers.is_empty() {
        return Ok(elected_plan(c, SetupCase::Undefined4_4i, &movers, |v| closest_corners(grid, v)));
    }
    // (ii) the third robot aims at two distinct corners of the other two
    let aimed = |r3: usize| -> Vec<NodeCoord> {
        let (a, b) = pair(r3);
        let mut out = Vec::new();
        for &k1 in &cc[a] {
            for &k2 in &cc[b] {
                if k1 != k2 && cc[r3].contains(&k1) && cc[r3].contains(&k2) {
                    out.extend([k1, k2]);
                }
            }
        }
        out
    };
    let movers: Vec<NodeCoord> = (0..3).filter(|&r3| !aimed(r3).is_empty()).map(|r3| robots[r3]).collect();
    if !movers.is_empty() {
        let goal = |v: NodeCoord| aimed(robots.iter().position(|&r| r == v).expect("a robot"));
        return Ok(elected_plan(c, SetupCase::Undefined4_4ii, &movers, goal));
    }
    // (iii) distinct corners: the robot whose corner lies between the other two
    let share = |u: NodeCoord, v: NodeCoord| lines_through(grid, u).iter().any(|l| l.contains(&v));
    let movers: Vec<NodeCoord> = (0..3)
        .filter(|&n| {
            cc[n].iter().any(|&k| {
                let (a, b) = pair(n);
                [a, b].iter().all(|&m| cc[m].iter().any(|&o| o != k && share(k, o)))
            })
        })
        .map(|n| robots[n])
        .collect();
    let movers = if movers.is_empty() { robots.to_vec() } else { movers };
    Ok(elected_plan(c, SetupCase::Undefined4_4iii, &movers, |v| closest_corners(grid, v)))
}

/// Decision of the robot at `v` in configuration `c`.
pub fn general3_decide(c: &Configuration, v: NodeCoord) -> Result<Decision> {
    Ok(Decision::moving(general3_plan(c)?.targets_of(v)))
}

#[derive(Debug, Default, Clone, Copy)]
pub struct General3;

impl Protocol for General3 {
    fn name(&self) -> &str {
        "general3"
    }

    fn decide(&self, view: &View) -> Decision {
        general3_decide(&view.to_configuration(), view.self_node()).unwrap_or(Decision::Stay)
    }
}

/// Checks the phase discipline on every configuration change: Set-Up never
/// builds a tower, and a Set-Up line turns into an Oriented configuration in
/// one move.
pub fn phase_observer() -> std::sync::Arc<crate::verifier::EdgeObserver> {
    std::sync::Arc::new(|e: &crate::verifier::EdgeInfo| {
        if !e.before.is_towerless() {
            return Ok(());
        }
        let case = classify_setup(&e.before).map_err(|err| err.to_string())?;
        if case == SetupCase::SetUpDone {
            let next = classify_setup(&e.after).map_err(|err| err.to_string())?;
            if next != SetupCase::Oriented {
                return Err(format!("set-up line {} became {} ({next:?})", e.before, e.after));
            }
        } else if !e.after.is_towerless() {
            return Err(format!("tower built during set-up: {} ({case:?}) to {}", e.before, e.after));
        }
        Ok(())
    })
}

/// A deliberately broken variant for checking the verifier: the explorer
/// steps back to its snake predecessor whenever that node is free.
#[derive(Debug, Default, Clone, Copy)]
pub struct SabotagedGeneral3;

impl Protocol for SabotagedGeneral3 {
    fn name(&self) -> &str {
        "general3-sabotaged"
    }

    fn decide(&self, view: &View) -> Decision {
        let c = view.to_configuration();
        let grid = c.grid();
        let backwards = || -> Option<NodeCoord> {
            let [tower] = c.towers()[..] else { return None };
            if c.count(view.self_node()) != 1 {
                return None;
            }
            let frame = oriented_frame(grid, tower).ok()?;
            let order = snake_order(grid);
            let at = order.iter().position(|&p| p == frame.to_frame(view.self_node()))?;
            let back = frame.from_frame(*order.get(at.checked_sub(1)?)?);
            (c.count(back) == 0).then_some(back)
        };
        match backwards() {
            Some(back) => Decision::moving(vec![back]),
            None => General3.decide(view),
        }
    }
}
