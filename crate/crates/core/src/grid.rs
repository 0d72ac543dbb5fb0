//! Anonymous `(i, j)` grids: nodes, adjacency, corners, borderlines and the
//! automorphism group.
//!
//! Internal coordinates put `x` along the long side (`0..j`) and `y` along the
//! short side (`0..i`). Robots never see coordinates; protocols only receive
//! [`View`](crate::config::View)s, which are defined up to automorphism.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dimensions of a grid, normalized so that `i <= j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridDims {
    i: usize,
    j: usize,
}

/// A node position. `x` runs along the long side, `y` along the short side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeCoord {
    pub x: usize,
    pub y: usize,
}

impl NodeCoord {
    pub const fn new(x: usize, y: usize) -> Self {
        NodeCoord { x, y }
    }
}

impl fmt::Display for NodeCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// Grid automorphism built from three generators. `transpose` is only legal
/// on square grids. Application order: transpose, then the two flips.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Automorphism {
    pub flip_x: bool,
    pub flip_y: bool,
    pub transpose: bool,
}

impl Automorphism {
    pub const IDENTITY: Automorphism = Automorphism {
        flip_x: false,
        flip_y: false,
        transpose: false,
    };

    pub fn is_identity(&self) -> bool {
        *self == Self::IDENTITY
    }

    /// Image of `v` under this automorphism.
    pub fn apply(&self, grid: GridDims, v: NodeCoord) -> NodeCoord {
        let (mut x, mut y) = if self.transpose { (v.y, v.x) } else { (v.x, v.y) };
        if self.flip_x {
            x = grid.j - 1 - x;
        }
        if self.flip_y {
            y = grid.i - 1 - y;
        }
        NodeCoord { x, y }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Automorphism, grid: GridDims) -> Automorphism {
        let probes = [NodeCoord::new(0, 0), NodeCoord::new(grid.j - 1, 0), NodeCoord::new(0, grid.i - 1)];
        let want: Vec<NodeCoord> = probes.iter().map(|&p| self.apply(grid, other.apply(grid, p))).collect();
        grid.automorphisms()
            .into_iter()
            .find(|g| probes.iter().zip(&want).all(|(&p, &w)| g.apply(grid, p) == w))
            .expect("automorphism group is closed under composition")
    }

    pub fn inverse(&self, grid: GridDims) -> Automorphism {
        grid.automorphisms()
            .into_iter()
            .find(|g| g.compose(self, grid).is_identity())
            .expect("every automorphism has an inverse")
    }
}

impl GridDims {
    /// Builds a grid from two side lengths in either order.
    pub fn new(a: usize, b: usize) -> Result<Self> {
        if a == 0 || b == 0 {
            return Err(Error::InvalidDimension(format!("{a}x{b}")));
        }
        Ok(GridDims { i: a.min(b), j: a.max(b) })
    }

    /// Short side (number of rows).
    pub fn i(&self) -> usize {
        self.i
    }

    /// Long side (number of columns).
    pub fn j(&self) -> usize {
        self.j
    }

    pub fn node_count(&self) -> usize {
        self.i * self.j
    }

    pub fn is_square(&self) -> bool {
        self.i == self.j
    }

    pub fn contains(&self, v: NodeCoord) -> bool {
        v.x < self.j && v.y < self.i
    }

    pub fn check(&self, v: NodeCoord) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(Error::OutOfBounds { node: v, grid: *self })
        }
    }

    /// Row-major index.
    pub fn index(&self, v: NodeCoord) -> usize {
        v.y * self.j + v.x
    }

    pub fn coord(&self, index: usize) -> NodeCoord {
        NodeCoord { x: index % self.j, y: index / self.j }
    }

    /// All nodes in row-major order.
    pub fn nodes(&self) -> impl Iterator<Item = NodeCoord> + '_ {
        (0..self.node_count()).map(|k| self.coord(k))
    }

    pub fn neighbors(&self, v: NodeCoord) -> Vec<NodeCoord> {
        let mut out = Vec::with_capacity(4);
        if v.y > 0 {
            out.push(NodeCoord::new(v.x, v.y - 1));
        }
        if v.x > 0 {
            out.push(NodeCoord::new(v.x - 1, v.y));
        }
        if v.x + 1 < self.j {
            out.push(NodeCoord::new(v.x + 1, v.y));
        }
        if v.y + 1 < self.i {
            out.push(NodeCoord::new(v.x, v.y + 1));
        }
        out
    }

    pub fn adjacent(&self, u: NodeCoord, v: NodeCoord) -> bool {
        dist(u, v) == 1
    }

    pub fn degree(&self, v: NodeCoord) -> Result<usize> {
        self.check(v)?;
        Ok(self.neighbors(v).len())
    }

    /// Nodes of minimum degree.
    pub fn corners(&self) -> Vec<NodeCoord> {
        let mut out = vec![
            NodeCoord::new(0, 0),
            NodeCoord::new(self.j - 1, 0),
            NodeCoord::new(0, self.i - 1),
            NodeCoord::new(self.j - 1, self.i - 1),
        ];
        out.sort();
        out.dedup();
        out
    }

    pub fn is_corner(&self, v: NodeCoord) -> bool {
        (v.x == 0 || v.x == self.j - 1) && (v.y == 0 || v.y == self.i - 1)
    }

    /// Boundary chains between corners, each listed corner to corner.
    ///
    /// A `(1, j)` grid has a single borderline (the whole chain). Otherwise the
    /// order is: row `y = 0`, row `y = i-1`, column `x = 0`, column `x = j-1`.
    pub fn borderlines(&self) -> Result<Vec<Vec<NodeCoord>>> {
        if self.node_count() < 2 {
            return Err(Error::NoBorderline);
        }
        let row = |y: usize| (0..self.j).map(|x| NodeCoord::new(x, y)).collect::<Vec<_>>();
        let col = |x: usize| (0..self.i).map(|y| NodeCoord::new(x, y)).collect::<Vec<_>>();
        if self.i == 1 {
            return Ok(vec![row(0)]);
        }
        Ok(vec![row(0), row(self.i - 1), col(0), col(self.j - 1)])
    }

    /// Borderlines of maximal length `j`.
    pub fn longest_borderlines(&self) -> Result<Vec<Vec<NodeCoord>>> {
        Ok(self.borderlines()?.into_iter().filter(|b| b.len() == self.j).collect())
    }

    /// The complete automorphism group.
    pub fn automorphisms(&self) -> Vec<Automorphism> {
        let mut out = Vec::with_capacity(8);
        let transposes: &[bool] = if self.is_square() && self.i > 1 { &[false, true] } else { &[false] };
        let flips_x: &[bool] = if self.j > 1 { &[false, true] } else { &[false] };
        let flips_y: &[bool] = if self.i > 1 { &[false, true] } else { &[false] };
        for &transpose in transposes {
            for &flip_x in flips_x {
                for &flip_y in flips_y {
                    out.push(Automorphism { flip_x, flip_y, transpose });
                }
            }
        }
        out
    }

    /// Shared precomputed tables for this grid.
    pub fn topology(&self) -> Arc<Topology> {
        static CACHE: OnceLock<Mutex<HashMap<GridDims, Arc<Topology>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("topology cache poisoned");
        guard.entry(*self).or_insert_with(|| Arc::new(Topology::new(*self))).clone()
    }
}

impl fmt::Display for GridDims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.i, self.j)
    }
}

impl FromStr for GridDims {
    type Err = Error;

    /// Parses `"IxJ"` (separator `x` or `X`).
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("grid dimensions must look like IxJ, got {s:?}"));
        let (a, b) = s.trim().split_once(['x', 'X']).ok_or_else(bad)?;
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        GridDims::new(a, b)
    }
}

impl Serialize for GridDims {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for GridDims {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Length of a shortest path between two nodes.
pub fn dist(u: NodeCoord, v: NodeCoord) -> usize {
    u.x.abs_diff(v.x) + u.y.abs_diff(v.y)
}

/// Index-based tables for hot loops.
#[derive(Debug)]
pub struct Topology {
    pub dims: GridDims,
    pub neighbors: Vec<Vec<usize>>,
    pub group: Vec<Automorphism>,
    /// `perms[g][v]` is the index of the image of node `v` under `group[g]`.
    pub perms: Vec<Vec<usize>>,
}

impl Topology {
    fn new(dims: GridDims) -> Self {
        let neighbors = dims
            .nodes()
            .map(|v| dims.neighbors(v).into_iter().map(|u| dims.index(u)).collect())
            .collect();
        let group = dims.automorphisms();
        let perms = group
            .iter()
            .map(|g| dims.nodes().map(|v| dims.index(g.apply(dims, v))).collect())
            .collect();
        Topology { dims, neighbors, group, perms }
    }

    pub fn n(&self) -> usize {
        self.dims.node_count()
    }

    pub fn dist(&self, a: usize, b: usize) -> usize {
        dist(self.dims.coord(a), self.dims.coord(b))
    }
}
