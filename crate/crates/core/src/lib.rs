//! Exploration of finite grids by oblivious mobile robots: grid topology,
//! configurations and views, an execution engine for the ATOM and CORDA
//! schedulers, exploration protocols and an explicit-state verifier.

pub mod config;
pub mod engine;
pub mod error;
pub mod grid;
pub mod protocols;
pub mod triple;
pub mod verifier;
pub mod view;

pub use config::{CanonicalForm, Configuration, Multiplicity, ObservedLabel};
pub use engine::{EngineState, Model, Protocol, SchedulerAction, TraceEvent};
pub use error::{Error, Result};
pub use grid::{Automorphism, GridDims, NodeCoord};
pub use view::{Decision, View};
