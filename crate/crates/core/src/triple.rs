//! Line-count classification of towerless 5-robot configurations on the
//! `(3, 3)` grid: interdistance, d.blocks, guide lines and `(X1, X2, X3)`.

use serde::Serialize;

use crate::config::Configuration;
use crate::error::{Error, Result};
use crate::grid::{dist, GridDims, NodeCoord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Axis {
    /// Rows (`y` constant).
    Horizontal,
    /// Columns (`x` constant).
    Vertical,
}

impl Axis {
    pub fn other(self) -> Axis {
        match self {
            Axis::Horizontal => Axis::Vertical,
            Axis::Vertical => Axis::Horizontal,
        }
    }
}

/// A full row or column of the `(3, 3)` grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Line {
    pub axis: Axis,
    pub index: usize,
}

impl Line {
    pub fn nodes(&self) -> [NodeCoord; 3] {
        match self.axis {
            Axis::Horizontal => [0, 1, 2].map(|x| NodeCoord::new(x, self.index)),
            Axis::Vertical => [0, 1, 2].map(|y| NodeCoord::new(self.index, y)),
        }
    }

    pub fn contains(&self, v: NodeCoord) -> bool {
        match self.axis {
            Axis::Horizontal => v.y == self.index,
            Axis::Vertical => v.x == self.index,
        }
    }

    pub fn is_borderline(&self) -> bool {
        self.index != 1
    }

    fn all(axis: Axis) -> [Line; 3] {
        [0, 1, 2].map(|index| Line { axis, index })
    }
}

/// A maximal run of robots on one line at consecutive distance `d`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Block {
    pub line: Line,
    pub nodes: Vec<NodeCoord>,
}

/// The seven line-count patterns, up to swapping `X1` and `X3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum TriplePattern {
    /// (1,1,3) / (3,1,1)
    OneOneThree,
    /// (1,2,2) / (2,2,1)
    OneTwoTwo,
    /// (1,3,1)
    OneThreeOne,
    /// (2,1,2)
    TwoOneTwo,
    /// (2,3,0) / (0,3,2)
    TwoThreeZero,
    /// (3,0,2) / (2,0,3)
    ThreeZeroTwo,
    /// (3,2,0) / (0,2,3)
    ThreeTwoZero,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TripleClass {
    /// Interdistance: minimum pairwise robot distance.
    pub d: usize,
    /// Every maximal d.block on every line, lone robots included.
    pub blocks: Vec<Block>,
    /// Size of the biggest d.block.
    pub biggest: usize,
    /// Elected lines: lines of the guide axis holding a biggest block.
    pub guide_lines: Vec<Line>,
    pub axis: Axis,
    /// The lines counted by `triple`, from `X1` to `X3`.
    pub lines: [Line; 3],
    pub triple: [u32; 3],
    /// Biggest-block tally on the lines of the guide axis.
    pub b: usize,
    /// Biggest-block tally on the lines of the other axis.
    pub b_prime: usize,
    /// Both axes tie under every election rule; the axis was then picked by
    /// the configuration's canonical orientation.
    pub symmetric_tie: bool,
}

impl TripleClass {
    pub fn pattern(&self) -> TriplePattern {
        let [a, b, c] = self.triple;
        let (lo, hi) = (a.min(c), a.max(c));
        match (lo, b, hi) {
            (1, 1, 3) => TriplePattern::OneOneThree,
            (1, 2, 2) => TriplePattern::OneTwoTwo,
            (1, 3, 1) => TriplePattern::OneThreeOne,
            (2, 1, 2) => TriplePattern::TwoOneTwo,
            (0, 3, 2) => TriplePattern::TwoThreeZero,
            (2, 0, 3) => TriplePattern::ThreeZeroTwo,
            (0, 2, 3) => TriplePattern::ThreeTwoZero,
            other => unreachable!("five robots on three lines cannot give {other:?}"),
        }
    }

    /// Number of robots on `line`.
    pub fn count_on(&self, line: Line) -> u32 {
        self.lines.iter().zip(self.triple).find(|(l, _)| **l == line).map(|(_, c)| c).unwrap_or(0)
    }
}

fn blocks_on(line: Line, robots: &[NodeCoord], d: usize) -> Vec<Block> {
    let on: Vec<NodeCoord> = line.nodes().into_iter().filter(|v| robots.contains(v)).collect();
    let mut out: Vec<Block> = Vec::new();
    for v in on {
        match out.last_mut() {
            Some(b) if dist(*b.nodes.last().unwrap(), v) == d => b.nodes.push(v),
            _ => out.push(Block { line, nodes: vec![v] }),
        }
    }
    out
}

/// Classifies a towerless 5-robot configuration of the `(3, 3)` grid.
pub fn triple_classify(c: &Configuration) -> Result<TripleClass> {
    let grid = c.grid();
    if grid != GridDims::new(3, 3)? {
        return Err(Error::InvalidConfiguration(format!("triple classification needs a 3x3 grid, got {grid}")));
    }
    if c.robot_count() != 5 {
        return Err(Error::InvalidConfiguration(format!("triple classification needs 5 robots, got {}", c.robot_count())));
    }
    if !c.is_towerless() {
        return Err(Error::InvalidConfiguration("triple classification needs a towerless configuration".into()));
    }
    let robots = c.occupied();
    let d = robots
        .iter()
        .enumerate()
        .flat_map(|(a, &u)| robots[a + 1..].iter().map(move |&v| dist(u, v)))
        .min()
        .expect("five robots");

    let blocks: Vec<Block> = [Axis::Horizontal, Axis::Vertical]
        .into_iter()
        .flat_map(|axis| Line::all(axis).into_iter().flat_map(|l| blocks_on(l, &robots, d)).collect::<Vec<_>>())
        .collect();
    let biggest = blocks.iter().map(|b| b.nodes.len()).max().unwrap_or(1);
    let tally = |axis: Axis| blocks.iter().filter(|b| b.line.axis == axis && b.nodes.len() == biggest).count();
    let candidates = |axis: Axis| -> Vec<Line> {
        let mut ls: Vec<Line> = blocks
            .iter()
            .filter(|b| b.line.axis == axis && b.nodes.len() == biggest)
            .map(|b| b.line)
            .collect();
        ls.dedup();
        ls
    };
    let (h, v) = (candidates(Axis::Horizontal), candidates(Axis::Vertical));
    let border = |ls: &[Line]| ls.iter().any(|l| l.is_borderline());

    let mut symmetric_tie = false;
    let axis = match (h.is_empty(), v.is_empty()) {
        (false, true) => Axis::Horizontal,
        (true, false) => Axis::Vertical,
        _ => {
            if border(&h) != border(&v) {
                if border(&h) {
                    Axis::Horizontal
                } else {
                    Axis::Vertical
                }
            } else if tally(Axis::Horizontal) != tally(Axis::Vertical) {
                if tally(Axis::Horizontal) > tally(Axis::Vertical) {
                    Axis::Horizontal
                } else {
                    Axis::Vertical
                }
            } else {
                symmetric_tie = true;
                canonical_axis(c)
            }
        }
    };

    let guide_lines = candidates(axis);
    let lines = Line::all(axis);
    let counts = lines.map(|l| robots.iter().filter(|&&r| l.contains(r)).count() as u32);
    // X1 is the borderline holding (or nearest to) a biggest block; otherwise
    // the orientation reading the larger triple.
    let big_on = |l: Line| guide_lines.contains(&l);
    let reversed = match (big_on(lines[0]), big_on(lines[2])) {
        (true, false) => false,
        (false, true) => true,
        _ => [counts[2], counts[1], counts[0]] > counts,
    };
    let (lines, triple) = if reversed {
        ([lines[2], lines[1], lines[0]], [counts[2], counts[1], counts[0]])
    } else {
        (lines, counts)
    };

    Ok(TripleClass {
        d,
        biggest,
        guide_lines,
        axis,
        lines,
        triple,
        b: tally(axis),
        b_prime: tally(axis.other()),
        symmetric_tie,
        blocks,
    })
}

/// Axis of the canonical orientation: the axis that maps to rows under the
/// canonical-form witness.
fn canonical_axis(c: &Configuration) -> Axis {
    if c.canonical_form().witness.transpose {
        Axis::Vertical
    } else {
        Axis::Horizontal
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::towerless_configurations;

    fn classify(s: &str) -> TripleClass {
        triple_classify(&Configuration::parse(GridDims::new(3, 3).unwrap(), s).unwrap()).unwrap()
    }

    #[test]
    fn two_one_two_horizontal() {
        let t = classify("0,0;1,0;2,1;0,2;1,2");
        assert_eq!(t.triple, [2, 1, 2]);
        assert_eq!(t.axis, Axis::Horizontal);
        assert_eq!(t.b, 2);
        assert_eq!(t.d, 1);
    }

    #[test]
    fn three_two_zero() {
        let t = classify("0,0;1,0;2,0;0,1;1,1");
        assert_eq!(t.d, 1);
        assert_eq!(t.biggest, 3);
        assert_eq!(t.triple, [3, 2, 0]);
        assert_eq!(t.guide_lines, vec![Line { axis: Axis::Horizontal, index: 0 }]);
    }

    #[test]
    fn perpendicular_tie_broken_by_block_tally() {
        // 2-blocks on rows 0 and 2 and on column 2: rows win with B=2 > B'=1.
        let t = classify("0,0;1,0;1,2;2,2;2,1");
        assert_eq!(t.axis, Axis::Horizontal);
        assert_eq!((t.b, t.b_prime), (2, 1));
        assert_eq!(t.triple, [2, 1, 2]);
        assert_eq!(t.pattern(), TriplePattern::TwoOneTwo);
    }

    #[test]
    fn symmetric_l_shape_ties() {
        let t = classify("0,0;1,0;2,0;0,1;0,2");
        assert!(t.symmetric_tie);
        assert_eq!(t.pattern(), TriplePattern::OneOneThree);
    }

    #[test]
    fn checkerboard_is_two_one_two_at_distance_two() {
        let t = classify("0,0;2,0;1,1;0,2;2,2");
        assert_eq!(t.d, 2);
        assert_eq!(t.pattern(), TriplePattern::TwoOneTwo);
    }

    #[test]
    fn rejects_bad_inputs() {
        let g = GridDims::new(3, 4).unwrap();
        assert!(triple_classify(&Configuration::parse(g, "0,0;1,0;2,0;3,0;0,1").unwrap()).is_err());
        let g = GridDims::new(3, 3).unwrap();
        assert!(triple_classify(&Configuration::parse(g, "0,0;1,0;2,0;0,1").unwrap()).is_err());
        assert!(triple_classify(&Configuration::parse(g, "0,0:2;2,0;0,1;1,1").unwrap()).is_err());
    }

    #[test]
    fn invariants_over_all_126() {
        for c in towerless_configurations(GridDims::new(3, 3).unwrap(), 5) {
            let t = triple_classify(&c).unwrap();
            assert_eq!(t.triple.iter().sum::<u32>(), 5);
            assert!(t.biggest >= 2);
            assert!(!t.guide_lines.is_empty());
            for gl in &t.guide_lines {
                assert!(t.blocks.iter().any(|b| b.line == *gl && b.nodes.len() == t.biggest));
                assert_eq!(gl.axis, t.axis);
            }
            for b in &t.blocks {
                for w in b.nodes.windows(2) {
                    assert_eq!(dist(w[0], w[1]), t.d);
                }
            }
            let _ = t.pattern();
        }
    }
}
