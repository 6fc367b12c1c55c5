//! Grab A Chair: a ring of `N` agents, each grabbing the chair on its left or
//! right every step. A chair targeted by both of its neighbors is contested; in
//! the standard game (`p = 0`) neither contestant obtains it, in the modified
//! variant each contestant obtains it independently with probability `p`.
//!
//! Agent 0 is the planning agent. Chair indexing: agent `i`'s left chair is
//! chair `i`, its right chair is chair `(i + 1) mod N`, so chair `i` is shared
//! between agent `i` (left) and agent `i - 1` (right).
//!
//! The module provides both the global simulator over all agents and the exact
//! local simulator of agent 0, which is driven by the two neighbor contest bits
//! instead of the full ring.

use serde::{Deserialize, Serialize};

use crate::rng::RngStream;
use crate::sim::{ActionId, GenerativeSimulator, ObservationId, StepResult};

/// Side choice; also the action encoding (`ActionId(0)` = left, `ActionId(1)` = right).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn index(self) -> usize {
        match self {
            Side::Left => 0,
            Side::Right => 1,
        }
    }

    pub fn from_action(a: ActionId) -> Side {
        match a.0 {
            0 => Side::Left,
            1 => Side::Right,
            _ => panic!("Grab A Chair has 2 actions, got {:?}", a),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GacConfig {
    pub n_agents: usize,
    /// Probability that a contestant obtains a contested chair. `p = 0` is the
    /// standard game.
    pub p: f64,
    pub obs_flip_prob: f64,
    pub horizon: usize,
}

impl GacConfig {
    pub fn new(n_agents: usize) -> Self {
        GacConfig {
            n_agents,
            p: 0.0,
            obs_flip_prob: 0.2,
            horizon: 10,
        }
    }

    pub fn with_p(mut self, p: f64) -> Self {
        self.p = p;
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.n_agents < 3 {
            return Err("n_agents must be >= 3".into());
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err("p must be in [0, 1]".into());
        }
        if !(0.0..=1.0).contains(&self.obs_flip_prob) {
            return Err("obs_flip_prob must be in [0, 1]".into());
        }
        if self.horizon == 0 {
            return Err("horizon must be positive".into());
        }
        Ok(())
    }
}

/// Per-side (visits, successes) statistics a non-planning agent keeps about its
/// own noisy chair observations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct SideCounts {
    pub visits: [u32; 2],
    pub successes: [u32; 2],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GacGlobalState {
    pub obtained: Vec<bool>,
    /// Counts for every agent; index 0 is unused (the planning agent keeps none).
    pub counts: Vec<SideCounts>,
    pub t: usize,
}

/// Local state of the planning agent: its obtained bit.
pub type GacLocalState = bool;

/// Influence sources: the two neighbor decisions that can contest agent 0's chairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GacInfluenceSource {
    /// Left neighbor (agent N-1) targets agent 0's left chair (chair 0).
    pub contest_left: bool,
    /// Right neighbor (agent 1) targets agent 0's right chair (chair 1).
    pub contest_right: bool,
}

/// Non-planning agent policy: uniform while either side is unvisited, then
/// argmax of the empirical success ratio, ties uniform.
pub fn other_agent_act(counts: &SideCounts, rng: &mut RngStream) -> Side {
    let v = counts.visits;
    let w = counts.successes;
    if v[0] == 0 || v[1] == 0 {
        return if rng.bernoulli(0.5) { Side::Left } else { Side::Right };
    }
    let rl = w[0] as f64 / v[0] as f64;
    let rr = w[1] as f64 / v[1] as f64;
    if rl > rr {
        Side::Left
    } else if rr > rl {
        Side::Right
    } else if rng.bernoulli(0.5) {
        Side::Left
    } else {
        Side::Right
    }
}

/// Probabilities `(Pr[Left], Pr[Right])` of [`other_agent_act`]; used by the
/// exact influence oracle.
pub fn other_agent_policy(counts: &SideCounts) -> (f64, f64) {
    let v = counts.visits;
    let w = counts.successes;
    if v[0] == 0 || v[1] == 0 {
        return (0.5, 0.5);
    }
    let rl = w[0] as f64 / v[0] as f64;
    let rr = w[1] as f64 / v[1] as f64;
    if rl > rr {
        (1.0, 0.0)
    } else if rr > rl {
        (0.0, 1.0)
    } else {
        (0.5, 0.5)
    }
}

/// Chair targeted by agent `i` choosing `side`.
pub fn target_chair(i: usize, side: Side, n: usize) -> usize {
    match side {
        Side::Left => i,
        Side::Right => (i + 1) % n,
    }
}

/// Resolve all chairs for a joint action profile, drawing contested outcomes
/// from `rng` in ascending agent order. Uncontested targets are always obtained.
pub fn gac_resolve(actions: &[Side], p: f64, rng: &mut RngStream) -> Vec<bool> {
    let n = actions.len();
    let mut targeting = vec![0u8; n];
    for (i, &s) in actions.iter().enumerate() {
        targeting[target_chair(i, s, n)] += 1;
    }
    (0..n)
        .map(|i| {
            if targeting[target_chair(i, actions[i], n)] >= 2 {
                rng.bernoulli(p)
            } else {
                true
            }
        })
        .collect()
}

/// Noisy observation of an obtained bit.
pub fn gac_observe(obtained: bool, flip_prob: f64, rng: &mut RngStream) -> ObservationId {
    let flipped = rng.bernoulli(flip_prob);
    ObservationId((obtained ^ flipped) as usize)
}

/// Everything the dataset collector and the exactness tests need from one
/// global step: the neighbor decisions and the resulting influence source.
#[derive(Debug, Clone, Copy)]
pub struct GacStepTrace {
    pub source: GacInfluenceSource,
}

pub fn gac_extract_sources(left_neighbor: Side, right_neighbor: Side) -> GacInfluenceSource {
    GacInfluenceSource {
        contest_left: left_neighbor == Side::Right,
        contest_right: right_neighbor == Side::Left,
    }
}

#[derive(Debug, Clone)]
pub struct GacGlobalSim {
    pub cfg: GacConfig,
}

impl GacGlobalSim {
    pub fn new(cfg: GacConfig) -> Self {
        GacGlobalSim { cfg }
    }

    pub fn initial_state(&self) -> GacGlobalState {
        GacGlobalState {
            obtained: vec![false; self.cfg.n_agents],
            counts: vec![SideCounts::default(); self.cfg.n_agents],
            t: 0,
        }
    }

    /// One global step with the planning agent's randomness drawn from a
    /// dedicated stream. The local simulator consumes `rng_agent` draws in the
    /// exact same order (contested resolution, then observation flip), which is
    /// what makes bit-exact local replay possible.
    pub fn step_traced(
        &self,
        state: &GacGlobalState,
        action: ActionId,
        rng_others: &mut RngStream,
        rng_agent: &mut RngStream,
    ) -> (StepResult<GacGlobalState>, GacStepTrace) {
        let n = self.cfg.n_agents;
        let p = self.cfg.p;
        let mut next = state.clone();

        // Joint actions: agent 0 plans, the rest follow their count policy.
        let mut actions = Vec::with_capacity(n);
        actions.push(Side::from_action(action));
        for i in 1..n {
            actions.push(other_agent_act(&state.counts[i], rng_others));
        }

        // Chair resolution; the planning agent's contested draw comes from its
        // own stream.
        let mut targeting = vec![0u8; n];
        for (i, &s) in actions.iter().enumerate() {
            targeting[target_chair(i, s, n)] += 1;
        }
        for i in 0..n {
            let contested = targeting[target_chair(i, actions[i], n)] >= 2;
            next.obtained[i] = if contested {
                if i == 0 { rng_agent.bernoulli(p) } else { rng_others.bernoulli(p) }
            } else {
                true
            };
        }

        // Observations: agent 0's flip draw from its own stream; the others
        // update their counts from their own independent noisy observations.
        let obs = gac_observe(next.obtained[0], self.cfg.obs_flip_prob, rng_agent);
        for i in 1..n {
            let oi = gac_observe(next.obtained[i], self.cfg.obs_flip_prob, rng_others);
            let side = actions[i].index();
            next.counts[i].visits[side] += 1;
            next.counts[i].successes[side] += oi.0 as u32;
        }

        next.t = state.t + 1;
        let reward = next.obtained[0] as usize as f64;
        let trace = GacStepTrace {
            source: gac_extract_sources(actions[n - 1], actions[1]),
        };
        (
            StepResult { next_state: next, observation: obs, reward },
            trace,
        )
    }
}

impl GenerativeSimulator for GacGlobalSim {
    type State = GacGlobalState;

    fn sample_initial(&self, _rng: &mut RngStream) -> GacGlobalState {
        self.initial_state()
    }

    fn step(
        &self,
        state: &GacGlobalState,
        action: ActionId,
        rng: &mut RngStream,
    ) -> StepResult<GacGlobalState> {
        // The other agents draw from the caller's stream so the stream counter
        // reflects the per-agent simulation work; only the planning agent gets
        // a derived stream (the local simulator consumes one with the same
        // draw order).
        let mut rng_agent = RngStream::new(rng.next_u64());
        self.step_traced(state, action, rng, &mut rng_agent).0
    }

    fn action_count(&self) -> usize {
        2
    }
}

/// Exact local simulator of the planning agent, driven by supplied neighbor
/// contest bits. Consumes RNG draws in the same order as the planning agent's
/// stream inside [`GacGlobalSim::step_traced`].
#[derive(Debug, Clone)]
pub struct GacLocalSim {
    pub cfg: GacConfig,
}

impl GacLocalSim {
    pub fn new(cfg: GacConfig) -> Self {
        GacLocalSim { cfg }
    }

    pub fn step(
        &self,
        _x: GacLocalState,
        y: GacInfluenceSource,
        action: ActionId,
        rng: &mut RngStream,
    ) -> (GacLocalState, ObservationId, f64) {
        let contested = match Side::from_action(action) {
            Side::Left => y.contest_left,
            Side::Right => y.contest_right,
        };
        let x_next = if contested { rng.bernoulli(self.cfg.p) } else { true };
        let obs = gac_observe(x_next, self.cfg.obs_flip_prob, rng);
        (x_next, obs, x_next as usize as f64)
    }
}
