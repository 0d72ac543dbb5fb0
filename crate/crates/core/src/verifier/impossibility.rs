//! Exhaustive search of the protocol space on tiny grids.
//!
//! A deterministic protocol is a choice, for every view class, of Stay or
//! one destination orbit. Every such protocol is model-checked under ATOM;
//! when all of them fail, no deterministic protocol explores the instance.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::{verify, Counterexample, FailureKind, Outcome, VerifyOptions};
use crate::config::{Configuration, Multiplicity};
use crate::engine::{Model, Protocol};
use crate::error::{Error, Result};
use crate::grid::{GridDims, NodeCoord};
use crate::view::{Decision, View};

pub const DEFAULT_CLASS_CAP: usize = 24;
pub const MAX_OPTIONS: usize = 5;

type ViewKey = (Vec<u32>, usize);

/// A view class in canonical coordinates with its admissible decisions.
#[derive(Debug, Clone, Serialize)]
pub struct ViewClass {
    pub configuration: String,
    pub observer: NodeCoord,
    /// Index 0 is Stay; the others are destination orbits.
    pub options: Vec<Vec<NodeCoord>>,
    #[serde(skip)]
    key: ViewKey,
}

/// A protocol given by one decision per view class.
pub struct TableProtocol {
    name: String,
    table: HashMap<ViewKey, Vec<NodeCoord>>,
}

impl TableProtocol {
    pub fn new(name: String, classes: &[ViewClass], choice: &[usize]) -> Self {
        let table = classes.iter().zip(choice).map(|(c, &n)| (c.key.clone(), c.options[n].clone())).collect();
        TableProtocol { name, table }
    }
}

impl Protocol for TableProtocol {
    fn name(&self) -> &str {
        &self.name
    }

    fn decide(&self, view: &View) -> Decision {
        let (key, f) = view.canonical_with_witness();
        let grid = view.grid();
        let back = f.inverse(grid);
        match self.table.get(&key) {
            Some(targets) => Decision::moving(targets.iter().map(|&t| back.apply(grid, t)).collect()),
            None => Decision::Stay,
        }
    }
}

fn all_configurations(grid: GridDims, k: u32) -> Vec<Configuration> {
    fn rec(grid: GridDims, at: usize, left: u32, counts: &mut Vec<u32>, out: &mut Vec<Configuration>) {
        if at == counts.len() {
            if left == 0 {
                out.push(Configuration::from_counts(grid, counts.clone()).expect("counts match grid"));
            }
            return;
        }
        for c in 0..=left {
            counts[at] = c;
            rec(grid, at + 1, left - c, counts, out);
        }
        counts[at] = 0;
    }
    let mut out = Vec::new();
    rec(grid, 0, k, &mut vec![0; grid.node_count()], &mut out);
    out
}

/// View classes of all `k`-robot configurations, in first-seen order.
pub fn view_classes(grid: GridDims, k: usize, mode: Multiplicity, cap: usize) -> Result<Vec<ViewClass>> {
    let mut seen: HashMap<ViewKey, ()> = HashMap::new();
    let mut out = Vec::new();
    for c in all_configurations(grid, k as u32) {
        for v in c.occupied() {
            let view = c.view_of(v, mode)?;
            let (key, f) = view.canonical_with_witness();
            if seen.insert(key.clone(), ()).is_some() {
                continue;
            }
            if out.len() == cap {
                return Err(Error::CapExceeded(format!("{grid} with {k} robots has more than {cap} view classes")));
            }
            let canon = view.apply(&f);
            let mut options = vec![Vec::new()];
            options.extend(canon.neighbor_orbits());
            if options.len() > MAX_OPTIONS {
                return Err(Error::CapExceeded(format!("a view of {grid} has more than {MAX_OPTIONS} decisions")));
            }
            out.push(ViewClass {
                configuration: canon.to_configuration().to_string(),
                observer: canon.self_node(),
                options,
                key,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct ProtocolOutcome {
    pub index: usize,
    /// Chosen option per view class.
    pub choice: Vec<usize>,
    pub outcome: Outcome,
    pub failure: Option<FailureKind>,
    pub min_quiescent_visited: Option<usize>,
    pub witness: Option<Counterexample>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ImpossibilityReport {
    pub grid: GridDims,
    pub k: usize,
    pub mode: Multiplicity,
    pub view_classes: Vec<ViewClass>,
    pub protocols: usize,
    pub correct_protocols: Vec<usize>,
    pub inconclusive: usize,
    pub no_correct_protocol: bool,
    pub outcomes: Vec<ProtocolOutcome>,
}

/// Model-checks every deterministic protocol for `k` robots on `grid`.
pub fn search_protocol_space(grid: GridDims, k: usize, mode: Multiplicity, cap: usize) -> Result<ImpossibilityReport> {
    if k == 0 || k > grid.node_count() {
        return Err(Error::InvalidConfiguration(format!("cannot place {k} robots on {grid}")));
    }
    let classes = view_classes(grid, k, mode, cap)?;
    let radix: Vec<usize> = classes.iter().map(|c| c.options.len()).collect();
    let total: usize = radix.iter().product();
    let choices: Vec<Vec<usize>> = (0..total)
        .map(|mut n| {
            radix
                .iter()
                .map(|&r| {
                    let d = n % r;
                    n /= r;
                    d
                })
                .collect()
        })
        .collect();
    let outcomes: Vec<ProtocolOutcome> = choices
        .into_par_iter()
        .enumerate()
        .map(|(index, choice)| {
            let protocol = Arc::new(TableProtocol::new(format!("table-{index}"), &classes, &choice));
            let report = verify(grid, protocol, k, Model::Atom, mode, &VerifyOptions::default())?;
            Ok(ProtocolOutcome {
                index,
                choice,
                outcome: report.outcome,
                failure: report.counterexample.as_ref().map(|c| c.kind),
                min_quiescent_visited: report.min_quiescent_visited,
                witness: report.counterexample,
            })
        })
        .collect::<Result<_>>()?;
    let correct_protocols: Vec<usize> =
        outcomes.iter().filter(|o| o.outcome == Outcome::Pass).map(|o| o.index).collect();
    let inconclusive = outcomes.iter().filter(|o| o.outcome == Outcome::Inconclusive).count();
    Ok(ImpossibilityReport {
        grid,
        k,
        mode,
        view_classes: classes,
        protocols: total,
        no_correct_protocol: correct_protocols.is_empty() && inconclusive == 0,
        correct_protocols,
        inconclusive,
        outcomes,
    })
}
