//! Robot views and move decisions.

use serde::{Deserialize, Serialize};

use crate::config::{Configuration, ObservedLabel};
use crate::error::{Error, Result};
use crate::grid::{dist, Automorphism, GridDims, NodeCoord};

/// A labelled copy of the grid as perceived by one robot, with the robot's
/// own node marked. Two views are the same view iff an automorphism maps one
/// onto the other.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct View {
    grid: GridDims,
    labels: Vec<ObservedLabel>,
    self_node: NodeCoord,
}

/// Outcome of a Compute phase.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Decision {
    Stay,
    /// Destination set, sorted row-major; the adversary picks one element.
    Move(Vec<NodeCoord>),
}

impl Decision {
    pub fn is_stay(&self) -> bool {
        matches!(self, Decision::Stay)
    }

    pub fn targets(&self) -> &[NodeCoord] {
        match self {
            Decision::Stay => &[],
            Decision::Move(t) => t,
        }
    }

    /// Builds a move decision with row-major sorted, de-duplicated targets.
    /// An empty target list yields `Stay`.
    pub fn moving(mut targets: Vec<NodeCoord>) -> Decision {
        targets.sort_by_key(|v| (v.y, v.x));
        targets.dedup();
        if targets.is_empty() {
            Decision::Stay
        } else {
            Decision::Move(targets)
        }
    }

    pub fn apply(&self, grid: GridDims, f: &Automorphism) -> Decision {
        match self {
            Decision::Stay => Decision::Stay,
            Decision::Move(t) => Decision::moving(t.iter().map(|&v| f.apply(grid, v)).collect()),
        }
    }
}

impl View {
    pub fn new(grid: GridDims, labels: Vec<ObservedLabel>, self_node: NodeCoord) -> Self {
        debug_assert_eq!(labels.len(), grid.node_count());
        View { grid, labels, self_node }
    }

    pub fn grid(&self) -> GridDims {
        self.grid
    }

    pub fn labels(&self) -> &[ObservedLabel] {
        &self.labels
    }

    pub fn label(&self, v: NodeCoord) -> ObservedLabel {
        self.labels[self.grid.index(v)]
    }

    pub fn self_node(&self) -> NodeCoord {
        self.self_node
    }

    pub fn occupied(&self) -> Vec<NodeCoord> {
        self.grid.nodes().filter(|&v| self.label(v).is_occupied()).collect()
    }

    pub fn towers(&self) -> Vec<NodeCoord> {
        self.grid.nodes().filter(|&v| self.label(v).is_tower()).collect()
    }

    pub fn is_free(&self, v: NodeCoord) -> bool {
        self.label(v).is_free()
    }

    /// The configuration as far as it can be reconstructed from the view:
    /// towers seen under weak multiplicity count as two robots.
    pub fn to_configuration(&self) -> Configuration {
        let counts = self
            .labels
            .iter()
            .map(|l| match *l {
                ObservedLabel::Free => 0,
                ObservedLabel::Single => 1,
                ObservedLabel::Tower => 2,
                ObservedLabel::Exact(c) => c,
            })
            .collect();
        Configuration::from_counts(self.grid, counts).expect("label vector matches grid")
    }

    pub fn apply(&self, f: &Automorphism) -> View {
        let mut labels = vec![ObservedLabel::Free; self.labels.len()];
        for v in self.grid.nodes() {
            labels[self.grid.index(f.apply(self.grid, v))] = self.label(v);
        }
        View { grid: self.grid, labels, self_node: f.apply(self.grid, self.self_node) }
    }

    /// Automorphisms fixing both the labels and the observer's node.
    pub fn stabilizer(&self) -> Vec<Automorphism> {
        self.grid
            .automorphisms()
            .into_iter()
            .filter(|f| {
                f.apply(self.grid, self.self_node) == self.self_node
                    && self.grid.nodes().all(|v| self.label(f.apply(self.grid, v)) == self.label(v))
            })
            .collect()
    }

    /// Orbit-invariant key: the smallest `(labels, self index)` image.
    pub fn canonical_key(&self) -> (Vec<u32>, usize) {
        self.canonical_with_witness().0
    }

    pub fn canonical_with_witness(&self) -> ((Vec<u32>, usize), Automorphism) {
        let mut best: Option<((Vec<u32>, usize), Automorphism)> = None;
        for f in self.grid.automorphisms() {
            let image = self.apply(&f);
            let key = (image.labels.iter().map(|l| l.code()).collect::<Vec<_>>(), self.grid.index(image.self_node));
            if best.as_ref().map_or(true, |(b, _)| key < *b) {
                best = Some((key, f));
            }
        }
        best.expect("the group always contains the identity")
    }

    pub fn equivalent(&self, other: &View) -> bool {
        self.grid == other.grid && self.canonical_key() == other.canonical_key()
    }

    /// Validates a destination set against this view. Every target must be
    /// adjacent to the observer and the set must be closed under every
    /// automorphism fixing the view. An empty set means Stay.
    pub fn decision_orbit(&self, targets: &[NodeCoord]) -> Result<Decision> {
        for &t in targets {
            self.grid.check(t)?;
            if dist(t, self.self_node) != 1 {
                return Err(Error::NotAdjacent { from: self.self_node, target: t });
            }
        }
        let decision = Decision::moving(targets.to_vec());
        for f in self.stabilizer() {
            for &t in decision.targets() {
                let image = f.apply(self.grid, t);
                if !decision.targets().contains(&image) {
                    return Err(Error::OrbitClosure(format!(
                        "observer {} chose {t} but a symmetry of its view maps it to {image}",
                        self.self_node
                    )));
                }
            }
        }
        Ok(decision)
    }

    /// Orbits of the observer's neighbors under the view's stabilizer.
    pub fn neighbor_orbits(&self) -> Vec<Vec<NodeCoord>> {
        let stab = self.stabilizer();
        let mut seen: Vec<NodeCoord> = Vec::new();
        let mut out = Vec::new();
        for u in self.grid.neighbors(self.self_node) {
            if seen.contains(&u) {
                continue;
            }
            let mut orbit: Vec<NodeCoord> = stab.iter().map(|f| f.apply(self.grid, u)).collect();
            orbit.sort_by_key(|v| (v.y, v.x));
            orbit.dedup();
            seen.extend(orbit.iter().copied());
            out.push(orbit);
        }
        out
    }
}
