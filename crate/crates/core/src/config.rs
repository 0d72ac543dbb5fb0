//! Configurations: robot multiplicities on the nodes of a grid.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Automorphism, GridDims, NodeCoord};
use crate::view::View;

/// Multiplicity detection capability of the robots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Multiplicity {
    /// Robots perceive free / one robot / several robots.
    Weak,
    /// Robots perceive exact counts.
    Strong,
}

impl std::str::FromStr for Multiplicity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "weak" => Ok(Multiplicity::Weak),
            "strong" => Ok(Multiplicity::Strong),
            _ => Err(Error::Parse(format!("unknown multiplicity mode {s:?}"))),
        }
    }
}

impl fmt::Display for Multiplicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Multiplicity::Weak => "weak",
            Multiplicity::Strong => "strong",
        })
    }
}

/// What an observer perceives on one node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ObservedLabel {
    Free,
    Single,
    Tower,
    /// Exact count (strong multiplicity only).
    Exact(u32),
}

impl ObservedLabel {
    pub fn from_count(count: u32, mode: Multiplicity) -> Self {
        match mode {
            Multiplicity::Strong => ObservedLabel::Exact(count),
            Multiplicity::Weak => match count {
                0 => ObservedLabel::Free,
                1 => ObservedLabel::Single,
                _ => ObservedLabel::Tower,
            },
        }
    }

    /// Weak label corresponding to this label.
    pub fn threshold(self) -> Self {
        match self {
            ObservedLabel::Exact(c) => ObservedLabel::from_count(c, Multiplicity::Weak),
            other => other,
        }
    }

    pub fn is_free(self) -> bool {
        matches!(self, ObservedLabel::Free | ObservedLabel::Exact(0))
    }

    pub fn is_occupied(self) -> bool {
        !self.is_free()
    }

    pub fn is_tower(self) -> bool {
        matches!(self, ObservedLabel::Tower) || matches!(self, ObservedLabel::Exact(c) if c >= 2)
    }

    /// Total order code used for canonical forms of views.
    pub fn code(self) -> u32 {
        match self {
            ObservedLabel::Free => 0,
            ObservedLabel::Single => 1,
            ObservedLabel::Tower => 2,
            ObservedLabel::Exact(c) => c,
        }
    }
}

/// Robot multiplicity per node, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration {
    grid: GridDims,
    counts: Vec<u32>,
}

/// Orbit representative of a configuration plus the automorphism reaching it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalForm {
    pub representative: Configuration,
    pub witness: Automorphism,
}

impl Configuration {
    pub fn empty(grid: GridDims) -> Self {
        Configuration { grid, counts: vec![0; grid.node_count()] }
    }

    /// One robot per listed node; repeated nodes stack into towers.
    pub fn from_nodes(grid: GridDims, nodes: &[NodeCoord]) -> Result<Self> {
        let mut c = Configuration::empty(grid);
        for &v in nodes {
            grid.check(v)?;
            c.counts[grid.index(v)] += 1;
        }
        Ok(c)
    }

    pub fn from_counts(grid: GridDims, counts: Vec<u32>) -> Result<Self> {
        if counts.len() != grid.node_count() {
            return Err(Error::InvalidConfiguration(format!(
                "expected {} counts, got {}",
                grid.node_count(),
                counts.len()
            )));
        }
        Ok(Configuration { grid, counts })
    }

    /// Parses `"x,y[:count];..."`, e.g. `"0,0;1,0:2"`.
    pub fn parse(grid: GridDims, s: &str) -> Result<Self> {
        let mut c = Configuration::empty(grid);
        for atom in s.split(';').map(str::trim).filter(|a| !a.is_empty()) {
            let bad = || Error::Parse(format!("bad configuration atom {atom:?}"));
            let (pos, count) = match atom.split_once(':') {
                Some((p, n)) => (p, n.trim().parse::<u32>().map_err(|_| bad())?),
                None => (atom, 1),
            };
            let (x, y) = pos.split_once(',').ok_or_else(bad)?;
            let v = NodeCoord::new(x.trim().parse().map_err(|_| bad())?, y.trim().parse().map_err(|_| bad())?);
            grid.check(v)?;
            c.counts[grid.index(v)] += count;
        }
        if c.robot_count() == 0 {
            return Err(Error::InvalidConfiguration("configuration holds no robot".into()));
        }
        Ok(c)
    }

    pub fn grid(&self) -> GridDims {
        self.grid
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn count(&self, v: NodeCoord) -> u32 {
        self.counts[self.grid.index(v)]
    }

    pub fn count_at(&self, index: usize) -> u32 {
        self.counts[index]
    }

    pub fn robot_count(&self) -> u32 {
        self.counts.iter().sum()
    }

    pub fn is_towerless(&self) -> bool {
        self.counts.iter().all(|&c| c <= 1)
    }

    pub fn towers(&self) -> Vec<NodeCoord> {
        self.nodes_where(|c| c >= 2)
    }

    pub fn occupied(&self) -> Vec<NodeCoord> {
        self.nodes_where(|c| c >= 1)
    }

    fn nodes_where(&self, pred: impl Fn(u32) -> bool) -> Vec<NodeCoord> {
        (0..self.counts.len()).filter(|&k| pred(self.counts[k])).map(|k| self.grid.coord(k)).collect()
    }

    /// Moves one robot from `from` to `to`.
    pub fn move_robot(&mut self, from: NodeCoord, to: NodeCoord) {
        let (a, b) = (self.grid.index(from), self.grid.index(to));
        assert!(self.counts[a] > 0, "no robot to move at {from}");
        self.counts[a] -= 1;
        self.counts[b] += 1;
    }

    pub fn apply(&self, f: &Automorphism) -> Configuration {
        let mut out = Configuration::empty(self.grid);
        for v in self.grid.nodes() {
            out.counts[self.grid.index(f.apply(self.grid, v))] = self.count(v);
        }
        out
    }

    /// Labels seen by any observer.
    pub fn observe(&self, mode: Multiplicity) -> Vec<ObservedLabel> {
        self.counts.iter().map(|&c| ObservedLabel::from_count(c, mode)).collect()
    }

    /// The view of a robot located at `at`.
    pub fn view_of(&self, at: NodeCoord, mode: Multiplicity) -> Result<View> {
        self.grid.check(at)?;
        if self.count(at) == 0 {
            return Err(Error::NotPresent(at));
        }
        Ok(View::new(self.grid, self.observe(mode), at))
    }

    /// Lexicographically smallest image under the automorphism group.
    pub fn canonical_form(&self) -> CanonicalForm {
        let mut best: Option<CanonicalForm> = None;
        for f in self.grid.automorphisms() {
            let image = self.apply(&f);
            if best.as_ref().map_or(true, |b| image.counts < b.representative.counts) {
                best = Some(CanonicalForm { representative: image, witness: f });
            }
        }
        best.expect("the group always contains the identity")
    }

    pub fn indistinguishable(&self, other: &Configuration) -> bool {
        self.grid == other.grid && self.canonical_form().representative == other.canonical_form().representative
    }

    /// `[[x, y, count], ...]` over occupied nodes, row-major.
    pub fn to_triples(&self) -> Vec<[usize; 3]> {
        self.grid
            .nodes()
            .filter(|&v| self.count(v) > 0)
            .map(|v| [v.x, v.y, self.count(v) as usize])
            .collect()
    }

    pub fn from_triples(grid: GridDims, triples: &[[usize; 3]]) -> Result<Self> {
        let mut c = Configuration::empty(grid);
        for t in triples {
            let v = NodeCoord::new(t[0], t[1]);
            grid.check(v)?;
            c.counts[grid.index(v)] += t[2] as u32;
        }
        Ok(c)
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for v in self.grid.nodes() {
            let c = self.count(v);
            if c == 0 {
                continue;
            }
            if !first {
                f.write_str(";")?;
            }
            first = false;
            write!(f, "{},{}", v.x, v.y)?;
            if c > 1 {
                write!(f, ":{c}")?;
            }
        }
        Ok(())
    }
}

/// All towerless configurations of `k` robots, in lexicographic node order.
pub fn towerless_configurations(grid: GridDims, k: usize) -> Vec<Configuration> {
    let n = grid.node_count();
    let mut out = Vec::new();
    let mut chosen = Vec::with_capacity(k);
    fn rec(grid: GridDims, n: usize, k: usize, start: usize, chosen: &mut Vec<usize>, out: &mut Vec<Configuration>) {
        if chosen.len() == k {
            let mut c = Configuration::empty(grid);
            for &i in chosen.iter() {
                c.counts[i] = 1;
            }
            out.push(c);
            return;
        }
        for i in start..n {
            if n - i < k - chosen.len() {
                break;
            }
            chosen.push(i);
            rec(grid, n, k, i + 1, chosen, out);
            chosen.pop();
        }
    }
    if k <= n {
        rec(grid, n, k, 0, &mut chosen, &mut out);
    }
    out
}
