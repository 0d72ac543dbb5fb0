//! Protocol decisions: worked examples, the boustrophedon oracle, totality of
//! the case analysis and symmetry of every decision.

use std::sync::{Arc, Mutex};

use gridex_core::config::towerless_configurations;
use gridex_core::protocols::general3::snake_successor;
use gridex_core::protocols::{
    classify_setup, five33_plan, grid23_plan, observer_for, protocol_by_name, protocol_for, snake_order, SetupCase,
    Stage33, PROTOCOL_NAMES,
};
use gridex_core::triple::TriplePattern;
use gridex_core::verifier::{verify, EdgeInfo, VerifyOptions};
use gridex_core::{Configuration, Decision, EngineState, Error, GridDims, Model, Multiplicity, NodeCoord, Protocol};

fn grid(a: usize, b: usize) -> GridDims {
    GridDims::new(a, b).unwrap()
}

fn n(x: usize, y: usize) -> NodeCoord {
    NodeCoord::new(x, y)
}

fn cfg(g: GridDims, s: &str) -> Configuration {
    Configuration::parse(g, s).unwrap()
}

fn decide(c: &Configuration, at: NodeCoord) -> Decision {
    let g = c.grid();
    let k = c.robot_count() as usize;
    let p = protocol_by_name(protocol_for(g, k).unwrap(), g, k).unwrap();
    p.decide(&c.view_of(at, Multiplicity::Weak).unwrap())
}

/// Hamiltonian paths that start at origin, tower node and explorer start and
/// never return to a lower row.
fn row_monotone_paths(g: GridDims) -> Vec<Vec<(usize, usize)>> {
    fn rec(g: GridDims, path: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        if path.len() == g.node_count() {
            out.push(path.clone());
            return;
        }
        let &(x, y) = path.last().unwrap();
        let mut next = Vec::new();
        if x + 1 < g.j() {
            next.push((x + 1, y));
        }
        if x > 0 {
            next.push((x - 1, y));
        }
        if y + 1 < g.i() {
            next.push((x, y + 1));
        }
        for p in next {
            if !path.contains(&p) {
                path.push(p);
                rec(g, path, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(g, &mut vec![(0, 0), (1, 0), (2, 0)], &mut out);
    out
}

#[test]
fn snake_order_is_the_unique_row_monotone_tour() {
    for (a, b) in [(3, 4), (2, 4), (1, 5), (4, 4), (3, 5), (2, 6), (4, 6)] {
        let g = grid(a, b);
        let paths = row_monotone_paths(g);
        assert_eq!(paths.len(), 1, "{g}");
        assert_eq!(snake_order(g), paths[0], "{g}");
    }
}

#[test]
fn snake_order_examples() {
    let g = grid(3, 4);
    let expected = [(0, 0), (1, 0), (2, 0), (3, 0), (3, 1), (2, 1), (1, 1), (0, 1), (0, 2), (1, 2), (2, 2), (3, 2)];
    assert_eq!(snake_order(g), expected);
    assert_eq!(snake_successor(g, (2, 0)), Some((3, 0)));
    assert_eq!(*snake_order(g).last().unwrap(), (3, 2));
    assert_eq!(snake_successor(g, (3, 2)), None);
}

#[test]
fn classify_setup_examples() {
    assert_eq!(classify_setup(&cfg(grid(3, 4), "0,0;1,1;2,1")).unwrap(), SetupCase::StrictLeader);
    // (3,2) is a corner too, so this one has two corner robots
    assert_eq!(classify_setup(&cfg(grid(3, 4), "0,0;2,1;3,2")).unwrap(), SetupCase::Choice1);
    assert_eq!(classify_setup(&cfg(grid(3, 5), "0,0;2,0;3,0")).unwrap(), SetupCase::FullyLeader1);
    assert_eq!(classify_setup(&cfg(grid(3, 4), "0,0;3,0;1,1")).unwrap(), SetupCase::Choice1);
    assert_eq!(classify_setup(&cfg(grid(3, 4), "0,0;1,0;2,0")).unwrap(), SetupCase::SetUpDone);
    assert_eq!(classify_setup(&cfg(grid(3, 4), "1,0:2;2,0")).unwrap(), SetupCase::Oriented);
    assert_eq!(classify_setup(&cfg(grid(3, 4), "1,0:2;1,1")).unwrap(), SetupCase::Exploring);
    assert_eq!(classify_setup(&cfg(grid(3, 4), "1,0:2;3,2")).unwrap(), SetupCase::Terminal);
}

#[test]
fn general3_examples() {
    let g = grid(3, 4);
    let line = cfg(g, "0,0;1,0;2,0");
    assert_eq!(decide(&line, n(0, 0)), Decision::Move(vec![n(1, 0)]));
    assert_eq!(decide(&line, n(1, 0)), Decision::Stay);
    assert_eq!(decide(&line, n(2, 0)), Decision::Stay);
    let oriented = cfg(g, "1,0:2;2,0");
    assert_eq!(decide(&oriented, n(2, 0)), Decision::Move(vec![n(3, 0)]));
    assert_eq!(decide(&oriented, n(1, 0)), Decision::Stay);
    let done = cfg(g, "1,0:2;3,2");
    assert_eq!(decide(&done, n(3, 2)), Decision::Stay);
    let p: Arc<dyn Protocol> = protocol_by_name("general3", g, 3).unwrap();
    let mut s = EngineState::init(&line, p, Model::Atom, Multiplicity::Weak).unwrap();
    s.step(&gridex_core::SchedulerAction::Activate { robots: vec![0], tie_breaks: vec![0] }).unwrap();
    assert_eq!(s.config(), &oriented);
}

#[test]
fn setup_classification_is_total() {
    for i in 1..=6 {
        for j in 4..=6 {
            if i > j {
                continue;
            }
            let g = grid(i, j);
            for c in towerless_configurations(g, 3) {
                classify_setup(&c).unwrap_or_else(|e| panic!("{c} on {g}: {e}"));
            }
        }
    }
}

#[test]
fn grid23_examples() {
    let g = grid(2, 3);
    assert_eq!(decide(&cfg(g, "0,0;2,0;1,1"), n(1, 1)), Decision::Move(vec![n(1, 0)]));
    assert_eq!(decide(&cfg(g, "0,0;1,0;2,0"), n(1, 0)), Decision::Move(vec![n(0, 0), n(2, 0)]));
    assert_eq!(decide(&cfg(g, "0,0;1,0;2,0"), n(0, 0)), Decision::Stay);
    assert_eq!(decide(&cfg(g, "0,0:2;1,0"), n(1, 0)), Decision::Move(vec![n(1, 1)]));
    assert_eq!(decide(&cfg(g, "0,0:2;1,1"), n(1, 1)), Decision::Move(vec![n(0, 1)]));
    assert!(grid23_plan(&cfg(g, "0,0:2;0,1")).unwrap().moves.is_empty());
}

#[test]
fn five33_examples() {
    let g = grid(3, 3);
    // (1,2,2): the lone robot heads for the free node of the middle line
    let c = cfg(g, "0,0;1,0;1,1;2,1;0,2");
    assert_eq!(five33_plan(&c).unwrap().stage, Stage33::Preparation(TriplePattern::OneTwoTwo));
    assert_eq!(decide(&c, n(0, 2)), Decision::Move(vec![n(0, 1)]));
    // (2,3,0): the middle-line robot next to the hole fills it
    let c = cfg(g, "0,0;1,0;0,1;1,1;2,1");
    assert_eq!(five33_plan(&c).unwrap().stage, Stage33::Preparation(TriplePattern::TwoThreeZero));
    assert_eq!(decide(&c, n(2, 1)), Decision::Move(vec![n(2, 0)]));
    assert_eq!(decide(&c, n(1, 1)), Decision::Stay);
    // (3,2,0): both robots outside the block head for the center
    let c = cfg(g, "0,0;1,0;2,0;0,1;2,1");
    assert_eq!(five33_plan(&c).unwrap().stage, Stage33::Preparation(TriplePattern::ThreeTwoZero));
    assert_eq!(decide(&c, n(0, 1)), Decision::Move(vec![n(1, 1)]));
    assert_eq!(decide(&c, n(2, 1)), Decision::Move(vec![n(1, 1)]));
    // one of them moving alone reaches a special configuration
    let alone = cfg(g, "0,0;1,0;2,0;1,1;2,1");
    assert_eq!(five33_plan(&alone).unwrap().stage, Stage33::Special);
    // both moving builds the center tower, from which the walk starts
    let both = cfg(g, "0,0;1,0;2,0;1,1:2");
    assert_eq!(five33_plan(&both).unwrap().stage, Stage33::Exploration);
}

#[test]
fn every_decision_is_orbit_closed_and_equivariant() {
    let mut cases: Vec<Configuration> = Vec::new();
    for (a, b, k) in [(3, 4, 3), (2, 5, 3), (4, 4, 3), (1, 6, 3), (2, 3, 3), (3, 3, 5)] {
        cases.extend(towerless_configurations(grid(a, b), k));
    }
    for c in cases {
        let g = c.grid();
        let k = c.robot_count() as usize;
        let p = protocol_by_name(protocol_for(g, k).unwrap(), g, k).unwrap();
        for at in c.occupied() {
            let view = c.view_of(at, Multiplicity::Weak).unwrap();
            let d = p.decide(&view);
            view.decision_orbit(d.targets()).unwrap_or_else(|e| panic!("{c} at {at}: {e}"));
            for f in g.automorphisms() {
                let image = c.apply(&f).view_of(f.apply(g, at), Multiplicity::Weak).unwrap();
                assert_eq!(p.decide(&image), d.apply(g, &f), "{c} at {at}");
            }
        }
    }
}

#[test]
fn explorer_is_unique_in_every_reachable_tower_configuration() {
    for (a, b) in [(3, 4), (2, 4), (1, 5), (2, 5)] {
        let g = grid(a, b);
        let p = protocol_by_name("general3", g, 3).unwrap();
        let seen = Arc::new(Mutex::new(Vec::<Configuration>::new()));
        let sink = seen.clone();
        let observer = Arc::new(move |e: &EdgeInfo| {
            if !e.after.is_towerless() {
                sink.lock().unwrap().push(e.after.clone());
            }
            Ok(())
        });
        let options = VerifyOptions { observer: Some(observer), ..Default::default() };
        assert!(verify(g, p.clone(), 3, Model::Corda, Multiplicity::Weak, &options).unwrap().passed());
        let seen = seen.lock().unwrap();
        assert!(!seen.is_empty());
        for c in seen.iter() {
            let movers = c.occupied().into_iter().filter(|&v| !p.decide(&c.view_of(v, Multiplicity::Weak).unwrap()).is_stay());
            let movers: Vec<NodeCoord> = movers.collect();
            let terminal = classify_setup(c).unwrap() == SetupCase::Terminal;
            assert_eq!(movers.len(), usize::from(!terminal), "{c}");
            if let [m] = movers[..] {
                assert_eq!(c.count(m), 1, "{c}: the explorer is the single robot");
            }
        }
    }
}

#[test]
fn five33_preparation_builds_towers_only_where_sanctioned() {
    let g = grid(3, 3);
    for model in [Model::Atom, Model::Corda] {
        let options = VerifyOptions { observer: observer_for("five33"), ..Default::default() };
        let r = verify(g, protocol_by_name("five33", g, 5).unwrap(), 5, model, Multiplicity::Weak, &options).unwrap();
        assert_eq!(r.observer_violations, Vec::<String>::new());
        assert!(r.passed());
        assert_eq!(r.per_initial.len(), 126);
    }
    for c in towerless_configurations(g, 5) {
        assert!(!five33_plan(&c).unwrap().moves.is_empty(), "{c} has no mover");
    }
}

#[test]
fn registry_matches_instances() {
    assert_eq!(protocol_for(grid(2, 3), 3).unwrap(), "grid23");
    assert_eq!(protocol_for(grid(3, 3), 5).unwrap(), "five33");
    assert_eq!(protocol_for(grid(4, 3), 3).unwrap(), "general3");
    assert_eq!(protocol_for(grid(1, 3), 3).unwrap(), "stay");
    for (a, b, k) in [(3, 3, 3), (3, 3, 4), (1, 3, 2), (2, 2, 2), (2, 2, 3), (3, 4, 2), (1, 1, 1)] {
        assert!(matches!(protocol_for(grid(a, b), k), Err(Error::Unsupported(_))), "{a}x{b} k={k}");
    }
    assert!(protocol_by_name("grid23", grid(3, 4), 3).is_err());
    assert_eq!(PROTOCOL_NAMES, ["general3", "grid23", "five33", "stay"]);
}
