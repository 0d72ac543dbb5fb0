use thiserror::Error;

use crate::grid::{GridDims, NodeCoord};

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid dimension {0}")]
    InvalidDimension(String),
    #[error("node {node} is outside the {grid} grid")]
    OutOfBounds { node: NodeCoord, grid: GridDims },
    #[error("a single-node grid has no borderline")]
    NoBorderline,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("no robot at observer node {0}")]
    NotPresent(NodeCoord),
    #[error("move target {target} is not adjacent to {from}")]
    NotAdjacent { from: NodeCoord, target: NodeCoord },
    #[error("decision is not closed under the view's symmetries: {0}")]
    OrbitClosure(String),
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),
    #[error("scheduler contract violated: {0}")]
    SchedulerContract(String),
    #[error("configuration falls outside every known case: {0}")]
    ClassificationGap(String),
    #[error("unsupported instance: {0}")]
    Unsupported(String),
    #[error("instance too large for enumeration: {0}")]
    CapExceeded(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
