//! Influence-augmented online planning.
//!
//! The crate pairs exact local simulators with learned influence predictors so
//! a POMCP planner can search a small local model instead of the full
//! multi-agent environment. It ships two domains (the Grab A Chair ring game
//! and Grid Traffic Control), a from-scratch recurrent classifier trained by
//! backpropagation through time, an exact enumeration oracle for tiny Grab A
//! Chair instances, and a benchmark harness comparing planning on the global
//! simulator against the influence-augmented local one.
//!
//! See the crate `examples/` directory for runnable entry points into each
//! piece, or the `iaplan` binary for the command-line interface.

pub mod bench;
pub mod gac;
pub mod gtc;
pub mod ials;
pub mod influence;
pub mod pomcp;
pub mod rng;
pub mod sim;

pub use ials::{IalsSimulator, IalsState, InfluencePredictor, LocalDomain, UniformPredictor};
pub use influence::{
    collect_dataset, exact_influence_gac, train, CellKind, InfluenceDataset, LearningCurve,
    OracleError, RnnPredictor, TrainConfig, TrainError,
};
pub use pomcp::{Depleted, PlanStats, PomcpConfig, PomcpPlanner};
pub use rng::RngStream;
pub use sim::{
    discounted_return, ActionId, GenerativeSimulator, History, ObservationId, SimulatorBudget,
    StepResult,
};
