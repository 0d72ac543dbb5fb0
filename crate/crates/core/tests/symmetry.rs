//! Grid automorphisms and configuration classes checked against brute-force
//! oracles that know nothing about flips or transposes.

use std::collections::{BTreeSet, HashSet};

use proptest::prelude::*;

use gridex_core::config::towerless_configurations;
use gridex_core::{Configuration, GridDims, Multiplicity, NodeCoord, ObservedLabel};

fn grid(a: usize, b: usize) -> GridDims {
    GridDims::new(a, b).unwrap()
}

fn coords(g: GridDims) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for y in 0..g.i() {
        for x in 0..g.j() {
            out.push((x, y));
        }
    }
    out
}

fn adjacent(a: (usize, usize), b: (usize, usize)) -> bool {
    a.0.abs_diff(b.0) + a.1.abs_diff(b.1) == 1
}

/// Every adjacency-preserving bijection of the node set, by backtracking.
fn brute_force_automorphisms(g: GridDims) -> BTreeSet<Vec<usize>> {
    let nodes = coords(g);
    let n = nodes.len();
    let adj: Vec<Vec<bool>> = (0..n).map(|u| (0..n).map(|v| adjacent(nodes[u], nodes[v])).collect()).collect();
    let mut out = BTreeSet::new();
    let mut perm = Vec::with_capacity(n);
    let mut used = vec![false; n];
    fn rec(adj: &[Vec<bool>], perm: &mut Vec<usize>, used: &mut [bool], out: &mut BTreeSet<Vec<usize>>) {
        let u = perm.len();
        if u == adj.len() {
            out.insert(perm.clone());
            return;
        }
        for img in 0..adj.len() {
            if used[img] || (0..u).any(|w| adj[u][w] != adj[img][perm[w]]) {
                continue;
            }
            used[img] = true;
            perm.push(img);
            rec(adj, perm, used, out);
            perm.pop();
            used[img] = false;
        }
    }
    rec(&adj, &mut perm, &mut used, &mut out);
    out
}

fn group_as_permutations(g: GridDims) -> BTreeSet<Vec<usize>> {
    g.automorphisms().iter().map(|f| g.nodes().map(|v| g.index(f.apply(g, v))).collect()).collect()
}

fn small_grids() -> Vec<GridDims> {
    let mut out = Vec::new();
    for i in 1..=4 {
        for j in i..=16 {
            if i * j <= 16 {
                out.push(grid(i, j));
            }
        }
    }
    out
}

#[test]
fn automorphism_group_matches_brute_force() {
    for g in small_grids() {
        let oracle = brute_force_automorphisms(g);
        assert_eq!(group_as_permutations(g), oracle, "automorphisms of {g}");
        assert_eq!(g.automorphisms().len(), oracle.len());
    }
}

#[test]
fn group_sizes_of_examples() {
    assert_eq!(brute_force_automorphisms(grid(3, 4)).len(), 4);
    assert_eq!(brute_force_automorphisms(grid(3, 3)).len(), 8);
    assert_eq!(brute_force_automorphisms(grid(1, 1)).len(), 1);
    assert_eq!(grid(3, 4).automorphisms().len(), 4);
    assert_eq!(grid(3, 3).automorphisms().len(), 8);
    assert_eq!(grid(1, 1).automorphisms().len(), 1);
}

#[test]
fn distance_is_a_metric_matching_adjacency() {
    for g in [grid(3, 4), grid(1, 5), grid(3, 3)] {
        let nodes: Vec<NodeCoord> = g.nodes().collect();
        for &u in &nodes {
            assert_eq!(gridex_core::grid::dist(u, u), 0);
            for &v in &nodes {
                let d = gridex_core::grid::dist(u, v);
                assert_eq!(d, gridex_core::grid::dist(v, u));
                assert_eq!(d == 1, g.adjacent(u, v));
                assert_eq!(d == 0, u == v);
                for &w in &nodes {
                    assert!(gridex_core::grid::dist(u, w) <= d + gridex_core::grid::dist(v, w));
                }
            }
        }
    }
}

#[test]
fn automorphisms_preserve_degree() {
    for g in small_grids() {
        for f in g.automorphisms() {
            for v in g.nodes() {
                assert_eq!(g.degree(f.apply(g, v)).unwrap(), g.degree(v).unwrap());
            }
        }
    }
}

/// Orbit count of towerless `k`-robot configurations under the brute-force group.
fn orbit_count(g: GridDims, k: usize) -> usize {
    let perms: Vec<Vec<usize>> = brute_force_automorphisms(g).into_iter().collect();
    let n = g.node_count();
    let mut reps = HashSet::new();
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let image = |p: &Vec<usize>| (0..n).filter(|&b| mask >> b & 1 == 1).fold(0u32, |m, b| m | 1 << p[b]);
        reps.insert(perms.iter().map(image).min().unwrap());
    }
    reps.len()
}

#[test]
fn class_counts_match_orbit_enumeration() {
    for (g, ks) in [(grid(3, 3), 1..=5), (grid(3, 4), 1..=4), (grid(2, 3), 1..=3)] {
        for k in ks {
            let classes: HashSet<Configuration> =
                towerless_configurations(g, k).iter().map(|c| c.canonical_form().representative).collect();
            assert_eq!(classes.len(), orbit_count(g, k), "{k} robots on {g}");
        }
    }
}

#[test]
fn known_class_counts() {
    // 9 nodes under the dihedral group of order 8
    assert_eq!(orbit_count(grid(3, 3), 5), 23);
    assert_eq!(orbit_count(grid(2, 3), 3), 6);
}

#[test]
fn canonical_examples_on_three_by_four() {
    let g = grid(3, 4);
    let at = |x, y| Configuration::from_nodes(g, &[NodeCoord::new(x, y)]).unwrap();
    assert!(at(0, 0).indistinguishable(&at(3, 2)));
    assert!(!at(1, 0).indistinguishable(&at(1, 1)));
    // the orbit of (1,0) under the 4-element group misses (1,1)
    let orbit: HashSet<NodeCoord> = g.automorphisms().iter().map(|f| f.apply(g, NodeCoord::new(1, 0))).collect();
    assert_eq!(orbit.len(), 4);
    assert!(!orbit.contains(&NodeCoord::new(1, 1)));
}

fn arb_configuration() -> impl Strategy<Value = Configuration> {
    (1usize..=4, 1usize..=5).prop_flat_map(|(a, b)| {
        let g = grid(a, b);
        proptest::collection::vec(0u32..4, g.node_count())
            .prop_filter("at least one robot", |c| c.iter().any(|&n| n > 0))
            .prop_map(move |counts| Configuration::from_counts(g, counts).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn weak_is_threshold_of_strong(c in arb_configuration()) {
        let weak = c.observe(Multiplicity::Weak);
        let strong = c.observe(Multiplicity::Strong);
        for (w, s) in weak.iter().zip(&strong) {
            prop_assert_eq!(*w, s.threshold());
            prop_assert!(matches!(s, ObservedLabel::Exact(_)));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2_000))]

    #[test]
    fn canonical_form_is_idempotent_and_invariant(c in arb_configuration()) {
        let cf = c.canonical_form();
        prop_assert_eq!(c.apply(&cf.witness), cf.representative.clone());
        prop_assert_eq!(cf.representative.canonical_form().representative, cf.representative.clone());
        let g = c.grid();
        for f in g.automorphisms() {
            prop_assert_eq!(c.apply(&f).canonical_form().representative, cf.representative.clone());
        }
        // the representative is the minimum of the orbit
        for f in g.automorphisms() {
            prop_assert!(cf.representative.counts() <= c.apply(&f).counts());
        }
    }

    #[test]
    fn decision_orbit_is_relabeling_invariant(c in arb_configuration(), pick in 0usize..64, subset in 0u8..16) {
        let occupied = c.occupied();
        let at = occupied[pick % occupied.len()];
        let g = c.grid();
        let view = c.view_of(at, Multiplicity::Weak).unwrap();
        let neighbors = g.neighbors(at);
        let targets: Vec<NodeCoord> =
            neighbors.iter().enumerate().filter(|(n, _)| subset >> n & 1 == 1).map(|(_, &v)| v).collect();
        let accepted = view.decision_orbit(&targets).is_ok();
        for f in g.automorphisms() {
            let moved = c.apply(&f).view_of(f.apply(g, at), Multiplicity::Weak).unwrap();
            let mapped: Vec<NodeCoord> = targets.iter().map(|&t| f.apply(g, t)).collect();
            prop_assert_eq!(moved.decision_orbit(&mapped).is_ok(), accepted);
        }
    }
}
