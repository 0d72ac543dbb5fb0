//! Exploration protocols and the registry mapping instances to them.

pub mod five33;
mod geometry;
pub mod general3;
pub mod grid23;

use std::sync::Arc;

use crate::engine::Protocol;
use crate::error::{Error, Result};
use crate::grid::GridDims;
use crate::verifier::EdgeObserver;
use crate::view::{Decision, View};

pub use five33::{five33_plan, Five33, Plan33, Stage33};
pub use general3::{classify_setup, general3_plan, snake_order, General3, OrientedFrame, SabotagedGeneral3, Plan, SetupCase};
pub use grid23::{grid23_plan, Grid23, Plan23, Stage23};

/// Every robot stays forever; explores exactly when all nodes start occupied.
#[derive(Debug, Default, Clone, Copy)]
pub struct Stay;

impl Protocol for Stay {
    fn name(&self) -> &str {
        "stay"
    }

    fn decide(&self, _view: &View) -> Decision {
        Decision::Stay
    }
}

pub const PROTOCOL_NAMES: [&str; 4] = ["general3", "grid23", "five33", "stay"];

/// Name of the protocol the registry assigns to `k` robots on `grid`.
pub fn protocol_for(grid: GridDims, k: usize) -> Result<&'static str> {
    let n = grid.node_count();
    if k == n && n > 1 {
        return Ok("stay");
    }
    match (grid.i(), grid.j(), k) {
        (2, 3, 3) => Ok("grid23"),
        (3, 3, 5) => Ok("five33"),
        (_, j, 3) if j > 3 => Ok("general3"),
        _ => Err(unsupported(grid, k)),
    }
}

fn unsupported(grid: GridDims, k: usize) -> Error {
    let why = match (grid.i(), grid.j(), k) {
        (1, 1, _) => "exploration is trivial on a single node".to_string(),
        (_, _, k) if k > grid.node_count() => format!("{k} robots do not fit on {} nodes", grid.node_count()),
        (_, _, 1 | 2) => "no deterministic protocol explores a grid of at least 3 nodes with 2 or fewer robots".into(),
        (3, 3, 3) => "no deterministic protocol explores the (3,3) grid with 3 robots".into(),
        (3, 3, 4) => "no deterministic protocol explores the (3,3) grid with 4 robots".into(),
        (2, 2, 3) | (1, 3, _) | (2, 3, _) => "no deterministic protocol is known for this instance".into(),
        _ => "protocols exist only for 3 robots when the longer side exceeds 3, 3 robots on (2,3), 5 robots on (3,3), or one robot per node".into(),
    };
    Error::Unsupported(format!("{k} robots on the {grid} grid: {why}"))
}

/// Resolves a protocol by name, checking it supports the instance.
pub fn protocol_by_name(name: &str, grid: GridDims, k: usize) -> Result<Arc<dyn Protocol>> {
    if !PROTOCOL_NAMES.contains(&name) {
        return Err(Error::Unsupported(format!("unknown protocol {name:?}, expected one of {PROTOCOL_NAMES:?}")));
    }
    let expected = protocol_for(grid, k)?;
    if expected != name {
        return Err(Error::Unsupported(format!(
            "protocol {name} does not handle {k} robots on the {grid} grid (use {expected})"
        )));
    }
    Ok(match name {
        "general3" => Arc::new(General3),
        "grid23" => Arc::new(Grid23),
        "five33" => Arc::new(Five33),
        "stay" => Arc::new(Stay),
        _ => unreachable!("checked against the registry"),
    })
}

/// The phase checker that goes with a registered protocol, if it has one.
pub fn observer_for(name: &str) -> Option<Arc<EdgeObserver>> {
    match name {
        "general3" => Some(general3::phase_observer()),
        "five33" => Some(five33::preparation_observer()),
        _ => None,
    }
}
