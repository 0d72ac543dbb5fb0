//! Case analysis of a tower holding all `k` robots on the `(3, 3)` grid.
//!
//! All robots of such a tower share one view, so they compute the same
//! destination orbit. For each placement class and each orbit the analysis
//! checks whether one ATOM step of the adversary can rebuild (up to
//! indistinguishability) every configuration that could have produced the
//! tower, and derives how many new nodes a protocol can still claim.

use serde::Serialize;

use crate::config::{Configuration, Multiplicity};
use crate::error::{Error, Result};
use crate::grid::{GridDims, NodeCoord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Placement {
    Center,
    BorderMiddle,
    Corner,
}

impl Placement {
    /// Label used in the literature's figure of the three placements.
    pub fn label(self) -> &'static str {
        match self {
            Placement::Center => "a",
            Placement::BorderMiddle => "b",
            Placement::Corner => "c",
        }
    }

    fn of(v: NodeCoord) -> Placement {
        match (v.x == 1, v.y == 1) {
            (true, true) => Placement::Center,
            (true, false) | (false, true) => Placement::BorderMiddle,
            (false, false) => Placement::Corner,
        }
    }

    fn node(self) -> NodeCoord {
        match self {
            Placement::Center => NodeCoord::new(1, 1),
            Placement::BorderMiddle => NodeCoord::new(1, 0),
            Placement::Corner => NodeCoord::new(0, 0),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OrbitOutcome {
    pub orbit: Vec<NodeCoord>,
    /// Placement of the tower after every robot moves to the same destination.
    pub tower_moves_to: Placement,
    /// Possible predecessors the adversary can rebuild in one step.
    pub undoable_predecessors: usize,
    pub predecessors: usize,
    pub adversary_can_undo: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PlacementReport {
    pub placement: Placement,
    pub label: &'static str,
    pub tower: NodeCoord,
    pub destination_orbits: Vec<OrbitOutcome>,
    pub all_destinations_one_orbit: bool,
    pub adversary_can_undo: bool,
    /// New nodes a protocol can still visit from this placement.
    pub new_nodes_claimable: usize,
    /// The placement from which exactly one new node remains claimable.
    pub single_new_node_exception: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FullTowerReport {
    pub k: usize,
    pub placements: Vec<PlacementReport>,
    pub max_new_nodes: usize,
}

/// All ways of spreading `k` robots over `nodes`.
fn distributions(grid: GridDims, nodes: &[NodeCoord], k: u32) -> Vec<Configuration> {
    fn rec(grid: GridDims, nodes: &[NodeCoord], left: u32, counts: &mut Vec<u32>, out: &mut Vec<Configuration>) {
        match nodes.split_first() {
            None => {
                if left == 0 {
                    out.push(Configuration::from_counts(grid, counts.clone()).expect("counts match grid"));
                }
            }
            Some((&v, rest)) => {
                for c in 0..=left {
                    counts[grid.index(v)] += c;
                    rec(grid, rest, left - c, counts, out);
                    counts[grid.index(v)] -= c;
                }
            }
        }
    }
    let mut out = Vec::new();
    rec(grid, nodes, k, &mut vec![0; grid.node_count()], &mut out);
    out
}

fn analyse(grid: GridDims, k: u32, placement: Placement) -> Result<(Vec<OrbitOutcome>, bool)> {
    let v = placement.node();
    let tower = {
        let mut counts = vec![0; grid.node_count()];
        counts[grid.index(v)] = k;
        Configuration::from_counts(grid, counts)?
    };
    let view = tower.view_of(v, Multiplicity::Strong)?;
    let around: Vec<NodeCoord> = std::iter::once(v).chain(grid.neighbors(v)).collect();
    // configurations one step away from the tower, excluding the tower itself
    let predecessors: Vec<Configuration> = distributions(grid, &around, k).into_iter().filter(|c| *c != tower).collect();
    let orbits = view.neighbor_orbits();
    let mut outcomes = Vec::new();
    for orbit in &orbits {
        let mut support = vec![v];
        support.extend(orbit);
        let reachable: Vec<Configuration> =
            distributions(grid, &support, k).into_iter().filter(|c| *c != tower).map(|c| c.canonical_form().representative).collect();
        let undoable = predecessors
            .iter()
            .filter(|p| reachable.contains(&p.canonical_form().representative))
            .count();
        outcomes.push(OrbitOutcome {
            orbit: orbit.clone(),
            tower_moves_to: Placement::of(orbit[0]),
            undoable_predecessors: undoable,
            predecessors: predecessors.len(),
            adversary_can_undo: undoable == predecessors.len(),
        });
    }
    Ok((outcomes, orbits.len() == 1))
}

fn claimable(grid: GridDims, k: u32, placement: Placement, depth: usize) -> Result<usize> {
    let (outcomes, _) = analyse(grid, k, placement)?;
    let mut best = 0;
    for o in outcomes.iter().filter(|o| !o.adversary_can_undo) {
        if depth > 3 {
            return Err(Error::CapExceeded("full-tower case analysis does not settle".into()));
        }
        best = best.max(1 + claimable(grid, k, o.tower_moves_to, depth + 1)?);
    }
    Ok(best)
}

/// Analyses the three placement classes of a `k`-tower on the `(3, 3)` grid.
pub fn full_tower_analysis(k: usize) -> Result<FullTowerReport> {
    if k < 2 {
        return Err(Error::InvalidConfiguration("a tower needs at least two robots".into()));
    }
    let grid = GridDims::new(3, 3)?;
    let k32 = k as u32;
    let mut placements = Vec::new();
    for placement in [Placement::Center, Placement::BorderMiddle, Placement::Corner] {
        let (outcomes, one_orbit) = analyse(grid, k32, placement)?;
        let can_undo = outcomes.iter().all(|o| o.adversary_can_undo);
        let new_nodes = claimable(grid, k32, placement, 0)?;
        placements.push(PlacementReport {
            placement,
            label: placement.label(),
            tower: placement.node(),
            destination_orbits: outcomes,
            all_destinations_one_orbit: one_orbit,
            adversary_can_undo: can_undo,
            new_nodes_claimable: new_nodes,
            single_new_node_exception: new_nodes == 1,
        });
    }
    let max_new_nodes = placements.iter().map(|p| p.new_nodes_claimable).max().unwrap_or(0);
    Ok(FullTowerReport { k, placements, max_new_nodes })
}
