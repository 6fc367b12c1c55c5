//! POMCP: Monte-Carlo tree search over action-observation histories with an
//! unweighted particle filter sharing the tree's nodes.
//!
//! The planner owns an arena of history nodes. `plan` grows the tree from the
//! current root under a simulation-count or wall-clock budget; `observe`
//! descends to the realized child, garbage-collects the rest of the arena and
//! reinvigorates the new root's particle set with fresh initial-belief draws.

use std::collections::HashMap;
use std::time::Instant;

use thiserror::Error;

use crate::rng::RngStream;
use crate::sim::{ActionId, GenerativeSimulator, ObservationId, SimulatorBudget};

#[derive(Debug, Clone)]
pub struct PomcpConfig {
    pub ucb_c: f64,
    pub gamma: f64,
    pub horizon: usize,
    /// Search depth cap; searches never look deeper than the steps remaining
    /// to the horizon either.
    pub effective_horizon: usize,
    pub budget: SimulatorBudget,
    pub n_initial_particles: usize,
}

impl PomcpConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err("gamma must be in [0, 1]".into());
        }
        if self.ucb_c < 0.0 {
            return Err("ucb_c must be non-negative".into());
        }
        if self.horizon == 0 || self.effective_horizon == 0 {
            return Err("horizons must be positive".into());
        }
        if self.n_initial_particles == 0 {
            return Err("n_initial_particles must be positive".into());
        }
        self.budget.validate()
    }
}

/// One particle set is reinvigorated by `count / 6` fresh initial draws.
const REINVIGORATION_DIVISOR: usize = 6;

#[derive(Debug, Clone, Copy, Default)]
pub struct PlanStats {
    pub simulations: u64,
    /// Simulation-time proxy: RNG draws consumed inside simulator `step` calls
    /// only. Counting work instead of sampling a clock keeps seeded runs
    /// byte-reproducible; wall-clock budgets still use the real clock.
    pub sim_time: f64,
}

#[derive(Debug, Error)]
#[error("particle filter depleted: no particle is consistent with the observation")]
pub struct Depleted;

#[derive(Debug)]
struct Edge {
    visits: u64,
    q: f64,
    #[cfg(debug_assertions)]
    return_sum: f64,
    children: Vec<(ObservationId, usize)>,
}

impl Edge {
    fn new() -> Edge {
        Edge {
            visits: 0,
            q: 0.0,
            #[cfg(debug_assertions)]
            return_sum: 0.0,
            children: Vec::new(),
        }
    }
}

#[derive(Debug)]
struct Node<S> {
    visits: u64,
    edges: Vec<Edge>,
    particles: Vec<S>,
}

impl<S> Node<S> {
    fn empty() -> Node<S> {
        Node { visits: 0, edges: Vec::new(), particles: Vec::new() }
    }
}

pub struct PomcpPlanner<S> {
    pub cfg: PomcpConfig,
    nodes: Vec<Node<S>>,
    root: usize,
    steps_done: usize,
    rng: RngStream,
}

impl<S: Clone + Send> PomcpPlanner<S> {
    pub fn new<G: GenerativeSimulator<State = S>>(
        cfg: PomcpConfig,
        sim: &G,
        seed: u64,
    ) -> PomcpPlanner<S> {
        debug_assert!(cfg.validate().is_ok(), "{:?}", cfg.validate());
        let mut rng = RngStream::new(seed);
        let mut root = Node::empty();
        root.particles = (0..cfg.n_initial_particles)
            .map(|_| sim.sample_initial(&mut rng))
            .collect();
        PomcpPlanner { cfg, nodes: vec![root], root: 0, steps_done: 0, rng }
    }

    pub fn root_particle_count(&self) -> usize {
        self.nodes[self.root].particles.len()
    }

    fn depth_limit(&self) -> usize {
        self.cfg
            .effective_horizon
            .min(self.cfg.horizon.saturating_sub(self.steps_done))
    }

    /// Grows the tree under the budget and returns the greedy root action.
    /// Ties go to the more-visited edge, then to the lower action index.
    pub fn plan<G: GenerativeSimulator<State = S>>(
        &mut self,
        sim: &G,
    ) -> (ActionId, PlanStats) {
        let depth = self.depth_limit();
        let mut stats = PlanStats::default();
        if depth == 0 || self.nodes[self.root].particles.is_empty() {
            return (ActionId(0), stats);
        }
        let start = Instant::now();
        match self.cfg.budget {
            SimulatorBudget::SimulationCount(n) => {
                for _ in 0..n {
                    self.simulate_from_root(sim, depth, &mut stats);
                    stats.simulations += 1;
                }
            }
            SimulatorBudget::WallClockSeconds(s) => loop {
                self.simulate_from_root(sim, depth, &mut stats);
                stats.simulations += 1;
                if start.elapsed().as_secs_f64() >= s {
                    break;
                }
            },
        }
        (self.best_action(), stats)
    }

    /// Advances the planner past an executed `(action, observation)` step.
    /// The realized child becomes the root, every other subtree is dropped,
    /// and the surviving particle set is topped up with fresh initial-belief
    /// draws. Errs when no particle reached that child.
    pub fn observe<G: GenerativeSimulator<State = S>>(
        &mut self,
        sim: &G,
        action: ActionId,
        obs: ObservationId,
    ) -> Result<(), Depleted> {
        self.steps_done += 1;
        let child = self.nodes[self.root]
            .edges
            .get(action.0)
            .and_then(|e| e.children.iter().find(|(o, _)| *o == obs).map(|&(_, n)| n));
        match child {
            Some(idx) => {
                self.retain_subtree(idx);
                let surviving = self.nodes[self.root].particles.len();
                if surviving == 0 {
                    return Err(Depleted);
                }
                let fresh = surviving / REINVIGORATION_DIVISOR;
                for _ in 0..fresh {
                    let p = sim.sample_initial(&mut self.rng);
                    self.nodes[self.root].particles.push(p);
                }
                Ok(())
            }
            None => {
                self.nodes = vec![Node::empty()];
                self.root = 0;
                Err(Depleted)
            }
        }
    }

    fn simulate_from_root<G: GenerativeSimulator<State = S>>(
        &mut self,
        sim: &G,
        depth: usize,
        stats: &mut PlanStats,
    ) {
        let particles = &self.nodes[self.root].particles;
        let state = particles[self.rng.below(particles.len())].clone();
        self.simulate(sim, self.root, state, depth, stats);
    }

    fn simulate<G: GenerativeSimulator<State = S>>(
        &mut self,
        sim: &G,
        node: usize,
        state: S,
        depth: usize,
        stats: &mut PlanStats,
    ) -> f64 {
        if depth == 0 {
            return 0.0;
        }
        if self.nodes[node].edges.is_empty() {
            self.nodes[node].edges = (0..sim.action_count()).map(|_| Edge::new()).collect();
            self.nodes[node].visits += 1;
            return self.rollout(sim, state, depth, stats);
        }
        let a = self.select_ucb(node);
        let c0 = self.rng.counter();
        let res = sim.step(&state, ActionId(a), &mut self.rng);
        stats.sim_time += (self.rng.counter() - c0) as f64;

        let child = self.child_of(node, a, res.observation);
        self.nodes[child].particles.push(res.next_state.clone());
        let ret =
            res.reward + self.cfg.gamma * self.simulate(sim, child, res.next_state, depth - 1, stats);

        let n = &mut self.nodes[node];
        n.visits += 1;
        let e = &mut n.edges[a];
        e.visits += 1;
        e.q += (ret - e.q) / e.visits as f64;
        #[cfg(debug_assertions)]
        {
            e.return_sum += ret;
            let mean = e.return_sum / e.visits as f64;
            debug_assert!(
                (e.q - mean).abs() <= 1e-9 * (1.0 + mean.abs()),
                "incremental mean drifted: {} vs {}",
                e.q,
                mean
            );
        }
        ret
    }

    fn rollout<G: GenerativeSimulator<State = S>>(
        &mut self,
        sim: &G,
        state: S,
        depth: usize,
        stats: &mut PlanStats,
    ) -> f64 {
        let mut ret = 0.0;
        let mut w = 1.0;
        let mut s = state;
        for _ in 0..depth {
            let a = ActionId(self.rng.below(sim.action_count()));
            let c0 = self.rng.counter();
            let res = sim.step(&s, a, &mut self.rng);
            stats.sim_time += (self.rng.counter() - c0) as f64;
            ret += w * res.reward;
            w *= self.cfg.gamma;
            s = res.next_state;
        }
        ret
    }

    /// UCB1 over the node's edges; untried edges first, lowest index.
    fn select_ucb(&self, node: usize) -> usize {
        let n = &self.nodes[node];
        let log_total = (n.visits.max(1) as f64).ln();
        let mut best = 0;
        let mut best_v = f64::NEG_INFINITY;
        for (i, e) in n.edges.iter().enumerate() {
            let v = if e.visits == 0 {
                f64::INFINITY
            } else {
                e.q + self.cfg.ucb_c * (log_total / e.visits as f64).sqrt()
            };
            if v > best_v {
                best_v = v;
                best = i;
            }
        }
        best
    }

    fn child_of(&mut self, node: usize, action: usize, obs: ObservationId) -> usize {
        if let Some(&(_, idx)) = self.nodes[node].edges[action]
            .children
            .iter()
            .find(|(o, _)| *o == obs)
        {
            return idx;
        }
        let idx = self.nodes.len();
        self.nodes.push(Node::empty());
        self.nodes[node].edges[action].children.push((obs, idx));
        idx
    }

    fn best_action(&self) -> ActionId {
        let root = &self.nodes[self.root];
        if root.edges.is_empty() {
            return ActionId(0);
        }
        let mut best = 0;
        for i in 1..root.edges.len() {
            let (a, b) = (&root.edges[i], &root.edges[best]);
            if a.q > b.q || (a.q == b.q && a.visits > b.visits) {
                best = i;
            }
        }
        ActionId(best)
    }

    /// Rebuilds the arena keeping only the subtree rooted at `new_root`, which
    /// becomes index 0. New indices are assigned in BFS discovery order, so a
    /// node is always processed after its index exists in the map.
    fn retain_subtree(&mut self, new_root: usize) {
        let mut old: Vec<Option<Node<S>>> = std::mem::take(&mut self.nodes)
            .into_iter()
            .map(Some)
            .collect();
        let mut remap: HashMap<usize, usize> = HashMap::from([(new_root, 0)]);
        let mut order = vec![new_root];
        let mut nodes: Vec<Node<S>> = Vec::new();
        let mut cursor = 0;
        while cursor < order.len() {
            let mut node = old[order[cursor]].take().expect("node reachable twice");
            cursor += 1;
            for e in &mut node.edges {
                for (_, child) in &mut e.children {
                    let next = remap.len();
                    *child = *remap.entry(*child).or_insert_with(|| {
                        order.push(*child);
                        next
                    });
                }
            }
            nodes.push(node);
        }
        self.nodes = nodes;
        self.root = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::StepResult;

    /// Two-armed bandit: action 0 pays 1, action 1 pays 0, one observation.
    struct Bandit;

    impl GenerativeSimulator for Bandit {
        type State = u8;

        fn sample_initial(&self, _rng: &mut RngStream) -> u8 {
            0
        }

        fn step(&self, _s: &u8, action: ActionId, _rng: &mut RngStream) -> StepResult<u8> {
            StepResult {
                next_state: 0,
                observation: ObservationId(0),
                reward: (action.0 == 0) as usize as f64,
            }
        }

        fn action_count(&self) -> usize {
            2
        }
    }

    fn cfg(budget: SimulatorBudget, horizon: usize) -> PomcpConfig {
        PomcpConfig {
            ucb_c: 10.0,
            gamma: 1.0,
            horizon,
            effective_horizon: horizon,
            budget,
            n_initial_particles: 50,
        }
    }

    #[test]
    fn ucb_prefers_undersampled_arm() {
        let mut planner =
            PomcpPlanner::new(cfg(SimulatorBudget::SimulationCount(1), 1), &Bandit, 0);
        let node = &mut planner.nodes[0];
        node.visits = 10;
        node.edges = vec![Edge::new(), Edge::new()];
        // q = [5, 3], n = [4, 5], c = 10:
        // ucb0 = 5 + 10 sqrt(ln 10 / 4) = 12.587..., ucb1 = 3 + 10 sqrt(ln 10 / 5) = 9.786...
        node.edges[0].visits = 4;
        node.edges[0].q = 5.0;
        node.edges[1].visits = 5;
        node.edges[1].q = 3.0;
        assert_eq!(planner.select_ucb(0), 0);
        let log10 = (10f64).ln();
        assert!((5.0 + 10.0 * (log10 / 4.0).sqrt() - 12.5871).abs() < 1e-3);
        assert!((3.0 + 10.0 * (log10 / 5.0).sqrt() - 9.7862).abs() < 1e-3);
        // A big enough value edge beats the exploration bonus.
        planner.nodes[0].edges[1].q = 10.0;
        assert_eq!(planner.select_ucb(0), 1);
        // Untried edges always win.
        planner.nodes[0].edges[0].visits = 0;
        assert_eq!(planner.select_ucb(0), 0);
    }

    #[test]
    fn bandit_converges_to_true_value() {
        let mut planner =
            PomcpPlanner::new(cfg(SimulatorBudget::SimulationCount(200), 1), &Bandit, 1);
        let (a, stats) = planner.plan(&Bandit);
        assert_eq!(a, ActionId(0));
        assert_eq!(stats.simulations, 200);
        let e = &planner.nodes[planner.root].edges[0];
        assert!(e.visits > 0);
        assert!((e.q - 1.0).abs() < 1e-12, "Q(a0) = {}", e.q);
        let e1 = &planner.nodes[planner.root].edges[1];
        assert_eq!(e1.q, 0.0);
    }

    #[test]
    fn count_budget_is_exact() {
        for n in [1u64, 7, 100] {
            let mut planner =
                PomcpPlanner::new(cfg(SimulatorBudget::SimulationCount(n), 3), &Bandit, 2);
            let (_, stats) = planner.plan(&Bandit);
            assert_eq!(stats.simulations, n);
        }
    }

    #[test]
    fn wall_clock_budget_runs_at_least_once_and_stops() {
        let mut planner =
            PomcpPlanner::new(cfg(SimulatorBudget::WallClockSeconds(0.02), 3), &Bandit, 3);
        let t = Instant::now();
        let (_, stats) = planner.plan(&Bandit);
        assert!(stats.simulations >= 1);
        assert!(t.elapsed().as_secs_f64() < 2.0);
    }

    #[test]
    fn observe_reinvigorates_from_initial_belief() {
        let mut planner =
            PomcpPlanner::new(cfg(SimulatorBudget::SimulationCount(1), 5), &Bandit, 4);
        // Hand-built child with 60 particles: 60 + 60/6 = 70 after observe.
        planner.nodes.push(Node { visits: 3, edges: Vec::new(), particles: vec![0u8; 60] });
        planner.nodes[0].edges = vec![Edge::new(), Edge::new()];
        planner.nodes[0].edges[1].children.push((ObservationId(0), 1));
        planner.observe(&Bandit, ActionId(1), ObservationId(0)).unwrap();
        assert_eq!(planner.root_particle_count(), 70);

        // 5 particles: 5/6 = 0 fresh draws.
        let mut planner =
            PomcpPlanner::new(cfg(SimulatorBudget::SimulationCount(1), 5), &Bandit, 4);
        planner.nodes.push(Node { visits: 1, edges: Vec::new(), particles: vec![0u8; 5] });
        planner.nodes[0].edges = vec![Edge::new(), Edge::new()];
        planner.nodes[0].edges[0].children.push((ObservationId(7), 1));
        planner.observe(&Bandit, ActionId(0), ObservationId(7)).unwrap();
        assert_eq!(planner.root_particle_count(), 5);
    }

    #[test]
    fn observe_depletes_on_missing_or_empty_child() {
        let mut planner =
            PomcpPlanner::new(cfg(SimulatorBudget::SimulationCount(1), 5), &Bandit, 5);
        planner.nodes[0].edges = vec![Edge::new(), Edge::new()];
        assert!(planner.observe(&Bandit, ActionId(0), ObservationId(9)).is_err());

        let mut planner =
            PomcpPlanner::new(cfg(SimulatorBudget::SimulationCount(1), 5), &Bandit, 5);
        planner.nodes.push(Node::empty());
        planner.nodes[0].edges = vec![Edge::new(), Edge::new()];
        planner.nodes[0].edges[0].children.push((ObservationId(0), 1));
        assert!(planner.observe(&Bandit, ActionId(0), ObservationId(0)).is_err());
    }

    #[test]
    fn garbage_collection_keeps_only_the_new_subtree() {
        let mut planner =
            PomcpPlanner::new(cfg(SimulatorBudget::SimulationCount(500), 4), &Bandit, 6);
        planner.plan(&Bandit);
        let before = planner.nodes.len();
        planner.observe(&Bandit, ActionId(0), ObservationId(0)).unwrap();
        assert!(planner.nodes.len() < before);
        // The surviving tree still plans correctly.
        let (a, _) = planner.plan(&Bandit);
        assert_eq!(a, ActionId(0));
    }

    #[test]
    fn horizon_truncation_limits_returns() {
        // gamma = 1, horizon 4: returns within [0, 4] and the bandit root value
        // approaches 4 (every step pays 1 under the greedy arm).
        let mut planner =
            PomcpPlanner::new(cfg(SimulatorBudget::SimulationCount(3000), 4), &Bandit, 7);
        let (a, _) = planner.plan(&Bandit);
        assert_eq!(a, ActionId(0));
        let q = planner.nodes[planner.root].edges[0].q;
        assert!(q > 3.0 && q <= 4.0 + 1e-9, "Q = {q}");
    }

    #[test]
    fn plan_is_deterministic_in_the_seed() {
        let run = || {
            let mut planner =
                PomcpPlanner::new(cfg(SimulatorBudget::SimulationCount(300), 4), &Bandit, 8);
            let (a, _) = planner.plan(&Bandit);
            (a, planner.nodes[planner.root].edges[0].q)
        };
        assert_eq!(run(), run());
    }
}
