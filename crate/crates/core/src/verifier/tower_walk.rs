//! Longest class-simple walks of a single robot next to an immobile
//! two-robot tower.

use std::collections::HashSet;

use serde::Serialize;

use crate::config::Configuration;
use crate::error::Result;
use crate::grid::{GridDims, NodeCoord};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WalkBoundResult {
    pub grid: GridDims,
    /// Most nodes a walk can newly visit without repeating a class.
    pub max_new_visited: usize,
    pub witness_tower: NodeCoord,
    /// Robot positions of a walk achieving the maximum, start included.
    pub witness_walk: Vec<NodeCoord>,
    /// Indistinguishability classes of (tower, robot) placements.
    pub class_count: usize,
    /// Same maximum when the single move that first repeats a class also
    /// counts.
    pub post_repetition_max: usize,
    pub post_repetition_tower: NodeCoord,
    pub post_repetition_walk: Vec<NodeCoord>,
}

fn class_of(grid: GridDims, tower: NodeCoord, robot: NodeCoord) -> Configuration {
    let mut counts = vec![0u32; grid.node_count()];
    counts[grid.index(tower)] += 2;
    counts[grid.index(robot)] += 1;
    Configuration::from_counts(grid, counts).expect("counts match grid").canonical_form().representative
}

struct Search<'a> {
    grid: GridDims,
    tower: NodeCoord,
    allowed: &'a dyn Fn(NodeCoord, NodeCoord, NodeCoord) -> bool,
    best: (usize, Vec<NodeCoord>),
    best_post: (usize, Vec<NodeCoord>),
}

impl Search<'_> {
    fn new_count(&self, walk: &[NodeCoord]) -> usize {
        let start = walk[0];
        let mut seen: Vec<NodeCoord> = walk.iter().copied().filter(|&v| v != start).collect();
        seen.sort_by_key(|v| (v.y, v.x));
        seen.dedup();
        seen.len()
    }

    fn dfs(&mut self, walk: &mut Vec<NodeCoord>, classes: &mut HashSet<Configuration>) {
        let n = self.new_count(walk);
        if n > self.best.0 {
            self.best = (n, walk.clone());
        }
        if n > self.best_post.0 {
            self.best_post = (n, walk.clone());
        }
        let at = *walk.last().expect("walk has a start");
        for u in self.grid.neighbors(at) {
            if u == self.tower || !(self.allowed)(self.tower, at, u) {
                continue;
            }
            let class = class_of(self.grid, self.tower, u);
            walk.push(u);
            if classes.insert(class.clone()) {
                self.dfs(walk, classes);
                classes.remove(&class);
            } else {
                let n = self.new_count(walk);
                if n > self.best_post.0 {
                    self.best_post = (n, walk.clone());
                }
            }
            walk.pop();
        }
    }
}

/// Exhaustive search over every tower node, start node and class-simple walk
/// where the robot may step to any neighbor other than the tower node.
pub fn tower_walk_bound(grid: GridDims) -> Result<WalkBoundResult> {
    tower_walk_bound_with(grid, &|_, _, _| true)
}

/// Same search restricted to moves `(tower, from, to)` accepted by `allowed`.
pub fn tower_walk_bound_with(
    grid: GridDims,
    allowed: &dyn Fn(NodeCoord, NodeCoord, NodeCoord) -> bool,
) -> Result<WalkBoundResult> {
    let mut classes = HashSet::new();
    let mut result: Option<WalkBoundResult> = None;
    for tower in grid.nodes() {
        let mut search = Search { grid, tower, allowed, best: (0, Vec::new()), best_post: (0, Vec::new()) };
        for start in grid.nodes().filter(|&v| v != tower) {
            let class = class_of(grid, tower, start);
            classes.insert(class.clone());
            let mut seen = HashSet::from([class]);
            let mut walk = vec![start];
            if search.best.1.is_empty() {
                search.best = (0, walk.clone());
                search.best_post = (0, walk.clone());
            }
            search.dfs(&mut walk, &mut seen);
        }
        let r = result.get_or_insert_with(|| WalkBoundResult {
            grid,
            max_new_visited: 0,
            witness_tower: tower,
            witness_walk: search.best.1.clone(),
            class_count: 0,
            post_repetition_max: 0,
            post_repetition_tower: tower,
            post_repetition_walk: search.best_post.1.clone(),
        });
        if search.best.0 > r.max_new_visited {
            r.max_new_visited = search.best.0;
            r.witness_tower = tower;
            r.witness_walk = search.best.1;
        }
        if search.best_post.0 > r.post_repetition_max {
            r.post_repetition_max = search.best_post.0;
            r.post_repetition_tower = tower;
            r.post_repetition_walk = search.best_post.1;
        }
    }
    let mut r = result.expect("grid has nodes");
    r.class_count = classes.len();
    Ok(r)
}
