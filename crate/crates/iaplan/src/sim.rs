//! Shared simulator contracts: actions, observations, histories, budgets and
//! discounted-return accounting.

use serde::{Deserialize, Serialize};

use crate::rng::RngStream;

/// Index into a domain's action set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ActionId(pub usize);

/// Index into a domain's observation set. Domains define a bijection to their
/// structured observations (e.g. 4 occupancy bits pack into `0..16`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ObservationId(pub usize);

/// Action-observation history since episode start.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct History {
    pub steps: Vec<(ActionId, ObservationId)>,
}

impl History {
    pub fn push(&mut self, a: ActionId, o: ObservationId) {
        self.steps.push((a, o));
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Outcome of one generative transition.
#[derive(Debug, Clone)]
pub struct StepResult<S> {
    pub next_state: S,
    pub observation: ObservationId,
    pub reward: f64,
}

/// Planning budget per decision step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "amount", rename_all = "snake_case")]
pub enum SimulatorBudget {
    SimulationCount(u64),
    WallClockSeconds(f64),
}

impl SimulatorBudget {
    pub fn validate(&self) -> Result<(), String> {
        match *self {
            SimulatorBudget::SimulationCount(n) if n == 0 => {
                Err("simulation_count budget must be positive".into())
            }
            SimulatorBudget::WallClockSeconds(s) if !(s > 0.0) => {
                Err("wall_clock_seconds budget must be positive".into())
            }
            _ => Ok(()),
        }
    }
}

/// Behavioral contract shared by the global simulators and the IALS.
///
/// States are opaque values; the planner copies them freely because POMCP keeps
/// particles per tree node. A simulator instance is used by one thread at a
/// time, but instances and states may be moved between threads.
pub trait GenerativeSimulator {
    type State: Clone + Send;

    fn sample_initial(&self, rng: &mut RngStream) -> Self::State;

    fn step(&self, state: &Self::State, action: ActionId, rng: &mut RngStream)
        -> StepResult<Self::State>;

    fn action_count(&self) -> usize;
}

/// Sum of `gamma^k * rewards[k]`. Empty slices return 0.
pub fn discounted_return(rewards: &[f64], gamma: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&gamma));
    let mut acc = 0.0;
    let mut w = 1.0;
    for &r in rewards {
        acc += w * r;
        w *= gamma;
    }
    acc
}
