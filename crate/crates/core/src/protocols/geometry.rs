//! Geometric predicates shared by the protocols. Every helper is
//! equivariant: mapping the configuration by an automorphism maps the result
//! the same way.

use crate::config::Configuration;
use crate::grid::{dist, GridDims, NodeCoord};

pub(crate) fn sort_row_major(v: &mut Vec<NodeCoord>) {
    v.sort_by_key(|n| (n.y, n.x));
    v.dedup();
}

/// Borderlines passing through `v`.
pub(crate) fn lines_through(grid: GridDims, v: NodeCoord) -> Vec<Vec<NodeCoord>> {
    grid.borderlines().unwrap_or_default().into_iter().filter(|l| l.contains(&v)).collect()
}

pub(crate) fn on_borderline(grid: GridDims, v: NodeCoord) -> bool {
    !lines_through(grid, v).is_empty()
}

pub(crate) fn corner_distance(grid: GridDims, v: NodeCoord) -> usize {
    grid.corners().into_iter().map(|c| dist(c, v)).min().unwrap_or(0)
}

pub(crate) fn closest_corners(grid: GridDims, v: NodeCoord) -> Vec<NodeCoord> {
    let d = corner_distance(grid, v);
    grid.corners().into_iter().filter(|&c| dist(c, v) == d).collect()
}

pub(crate) fn free_neighbors(c: &Configuration, v: NodeCoord) -> Vec<NodeCoord> {
    c.grid().neighbors(v).into_iter().filter(|&u| c.count(u) == 0).collect()
}

/// Free neighbors of `from` lying on a shortest path to one of the goals
/// closest to `from`.
pub(crate) fn toward(c: &Configuration, from: NodeCoord, goals: &[NodeCoord]) -> Vec<NodeCoord> {
    let Some(best) = goals.iter().map(|&g| dist(from, g)).min() else { return Vec::new() };
    let closest: Vec<NodeCoord> = goals.iter().copied().filter(|&g| dist(from, g) == best).collect();
    let mut out: Vec<NodeCoord> = free_neighbors(c, from)
        .into_iter()
        .filter(|&u| closest.iter().any(|&g| dist(u, g) < best))
        .collect();
    sort_row_major(&mut out);
    out
}

pub(crate) fn free_on(c: &Configuration, line: &[NodeCoord]) -> Vec<NodeCoord> {
    line.iter().copied().filter(|&v| c.count(v) == 0).collect()
}

/// Candidates whose image under the canonical witness is smallest in
/// row-major order. Ties between symmetric candidates are all kept, so the
/// result is closed under the configuration's symmetries.
pub(crate) fn elect(c: &Configuration, candidates: &[NodeCoord]) -> Vec<NodeCoord> {
    let grid = c.grid();
    let rep = c.canonical_form().representative;
    let witnesses: Vec<_> = grid.automorphisms().into_iter().filter(|f| c.apply(f) == rep).collect();
    let key = |v: NodeCoord| witnesses.iter().map(|f| grid.index(f.apply(grid, v))).min().unwrap_or(usize::MAX);
    let Some(best) = candidates.iter().map(|&v| key(v)).min() else { return Vec::new() };
    let mut out: Vec<NodeCoord> = candidates.iter().copied().filter(|&v| key(v) == best).collect();
    sort_row_major(&mut out);
    out
}

pub(crate) type Moves = Vec<(NodeCoord, Vec<NodeCoord>)>;

/// Adds `targets` for the robot at `from`, merging with earlier entries.
pub(crate) fn push_moves(moves: &mut Moves, from: NodeCoord, targets: impl IntoIterator<Item = NodeCoord>) {
    let targets: Vec<NodeCoord> = targets.into_iter().collect();
    if targets.is_empty() {
        return;
    }
    match moves.iter_mut().find(|(f, _)| *f == from) {
        Some((_, t)) => {
            t.extend(targets);
            sort_row_major(t);
        }
        None => {
            let mut t = targets;
            sort_row_major(&mut t);
            moves.push((from, t));
        }
    }
    moves.sort_by_key(|(f, _)| (f.y, f.x));
}

/// Evaluates `raw` on the canonical representative and maps the result back
/// through every witness, so the moves commute with the grid's symmetries.
pub(crate) fn symmetrize<T>(c: &Configuration, raw: impl Fn(&Configuration) -> T, moves_of: impl Fn(&T) -> &Moves) -> (T, Moves) {
    let grid = c.grid();
    let rep = c.canonical_form().representative;
    let out = raw(&rep);
    let mut moves = Moves::new();
    for f in grid.automorphisms().into_iter().filter(|f| c.apply(f) == rep) {
        let back = f.inverse(grid);
        for (from, targets) in moves_of(&out) {
            push_moves(&mut moves, back.apply(grid, *from), targets.iter().map(|&t| back.apply(grid, t)));
        }
    }
    (out, moves)
}

/// Moves of every scripted entry `c` matches up to symmetry, mapped back
/// onto `c`. `None` when no entry matches.
pub(crate) fn scripted(c: &Configuration, script: &[(Configuration, Moves)]) -> Option<Moves> {
    let grid = c.grid();
    let mut found = None;
    for f in grid.automorphisms() {
        let image = c.apply(&f);
        let back = f.inverse(grid);
        for (_, moves) in script.iter().filter(|(e, _)| *e == image) {
            let out: &mut Moves = found.get_or_insert_with(Moves::new);
            for (from, targets) in moves {
                push_moves(out, back.apply(grid, *from), targets.iter().map(|&t| back.apply(grid, t)));
            }
        }
    }
    found
}

/// Tower heights capped at two, as a robot with weak multiplicity sees them.
pub(crate) fn weak(c: &Configuration) -> Configuration {
    let counts = c.counts().iter().map(|&n| n.min(2)).collect();
    Configuration::from_counts(c.grid(), counts).expect("same grid")
}
