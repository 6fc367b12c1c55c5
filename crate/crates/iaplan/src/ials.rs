//! Influence-augmented local simulator: an exact local simulator fused with an
//! influence predictor into a [`GenerativeSimulator`] the planner can drive.
//!
//! A transition is sampled in two steps: the local simulator produces the next
//! local state, observation and reward from the current influence source, then
//! the predictor advances its hidden state on the encoded `(action, next local
//! state)` input and samples the next source value.

use std::collections::HashMap;
use std::sync::Mutex;

use crate::gac::{GacConfig, GacInfluenceSource, GacLocalSim, GacLocalState};
use crate::gtc::{GtcConfig, GtcGlobalSim, GtcInfluenceSource, GtcLocalSim, GtcLocalState, Light};
use crate::influence::oracle::exact_influence_gac;
use crate::rng::RngStream;
use crate::sim::{ActionId, GenerativeSimulator, ObservationId, StepResult};

/// A domain's local face: exact local dynamics plus the encodings shared by
/// dataset collection, training and planning.
pub trait LocalDomain {
    type LocalState: Clone + Send;
    type Source: Clone + Send;

    fn action_count(&self) -> usize;
    fn input_width(&self) -> usize;
    fn source_bits(&self) -> usize;

    /// Sample `(x_0, y_0)` from the initial belief.
    fn sample_initial(&self, rng: &mut RngStream) -> (Self::LocalState, Self::Source);

    fn step(
        &self,
        x: &Self::LocalState,
        y: &Self::Source,
        action: ActionId,
        rng: &mut RngStream,
    ) -> (Self::LocalState, ObservationId, f64);

    /// Encode `(action, next local state)` as the predictor input: the action
    /// one-hot followed by the local state bits.
    fn encode_input(&self, action: ActionId, x_next: &Self::LocalState, buf: &mut Vec<f64>);

    fn source_to_bits(&self, y: &Self::Source, out: &mut Vec<bool>);
    fn source_from_bits(&self, bits: &[bool]) -> Self::Source;
}

/// Conditional distribution over the influence source bits, consumed one
/// sampled value per simulated step.
pub trait InfluencePredictor {
    type Hidden: Clone + Send;

    fn initial_hidden(&self) -> Self::Hidden;

    /// Advance on an encoded input and sample the next source bits.
    fn advance(
        &self,
        hidden: &Self::Hidden,
        input: &[f64],
        rng: &mut RngStream,
    ) -> (Self::Hidden, Vec<bool>);
}

/// Baseline predictor: every source bit uniform, independent of history.
#[derive(Debug, Clone)]
pub struct UniformPredictor {
    pub bits: usize,
}

impl InfluencePredictor for UniformPredictor {
    type Hidden = ();

    fn initial_hidden(&self) {}

    fn advance(&self, _h: &(), _input: &[f64], rng: &mut RngStream) -> ((), Vec<bool>) {
        ((), (0..self.bits).map(|_| rng.bernoulli(0.5)).collect())
    }
}

/// IALS state: local state, current source value and predictor hidden state.
#[derive(Debug, Clone)]
pub struct IalsState<X, Y, H> {
    pub x: X,
    pub y: Y,
    pub z: H,
}

/// The influence-augmented local simulator.
#[derive(Debug)]
pub struct IalsSimulator<D, P> {
    pub domain: D,
    pub predictor: P,
}

impl<D: LocalDomain, P: InfluencePredictor> IalsSimulator<D, P> {
    pub fn new(domain: D, predictor: P) -> Self {
        IalsSimulator { domain, predictor }
    }
}

impl<D: LocalDomain, P: InfluencePredictor> GenerativeSimulator for IalsSimulator<D, P> {
    type State = IalsState<D::LocalState, D::Source, P::Hidden>;

    fn sample_initial(&self, rng: &mut RngStream) -> Self::State {
        let (x, y) = self.domain.sample_initial(rng);
        IalsState { x, y, z: self.predictor.initial_hidden() }
    }

    fn step(
        &self,
        state: &Self::State,
        action: ActionId,
        rng: &mut RngStream,
    ) -> StepResult<Self::State> {
        let (x_next, observation, reward) =
            self.domain.step(&state.x, &state.y, action, rng);
        let mut input = Vec::with_capacity(self.domain.input_width());
        self.domain.encode_input(action, &x_next, &mut input);
        let (z_next, bits) = self.predictor.advance(&state.z, &input, rng);
        let y_next = self.domain.source_from_bits(&bits);
        StepResult {
            next_state: IalsState { x: x_next, y: y_next, z: z_next },
            observation,
            reward,
        }
    }

    fn action_count(&self) -> usize {
        self.domain.action_count()
    }
}

/// Grab A Chair local face.
#[derive(Debug, Clone)]
pub struct GacDomain {
    pub cfg: GacConfig,
    local: GacLocalSim,
}

impl GacDomain {
    pub fn new(cfg: GacConfig) -> Self {
        let local = GacLocalSim::new(cfg.clone());
        GacDomain { cfg, local }
    }
}

impl LocalDomain for GacDomain {
    type LocalState = GacLocalState;
    type Source = GacInfluenceSource;

    fn action_count(&self) -> usize {
        2
    }

    fn input_width(&self) -> usize {
        3
    }

    fn source_bits(&self) -> usize {
        2
    }

    fn sample_initial(&self, rng: &mut RngStream) -> (bool, GacInfluenceSource) {
        // The planning agent starts without a chair; at t = 0 every neighbor
        // policy is uniform, so both contest bits are fair coins.
        let y = GacInfluenceSource {
            contest_left: rng.bernoulli(0.5),
            contest_right: rng.bernoulli(0.5),
        };
        (false, y)
    }

    fn step(
        &self,
        x: &bool,
        y: &GacInfluenceSource,
        action: ActionId,
        rng: &mut RngStream,
    ) -> (bool, ObservationId, f64) {
        self.local.step(*x, *y, action, rng)
    }

    fn encode_input(&self, action: ActionId, x_next: &bool, buf: &mut Vec<f64>) {
        buf.clear();
        buf.push((action.0 == 0) as usize as f64);
        buf.push((action.0 == 1) as usize as f64);
        buf.push(*x_next as usize as f64);
    }

    fn source_to_bits(&self, y: &GacInfluenceSource, out: &mut Vec<bool>) {
        out.clear();
        out.push(y.contest_left);
        out.push(y.contest_right);
    }

    fn source_from_bits(&self, bits: &[bool]) -> GacInfluenceSource {
        GacInfluenceSource { contest_left: bits[0], contest_right: bits[1] }
    }
}

/// Grid Traffic Control local face (the center intersection).
#[derive(Debug, Clone)]
pub struct GtcDomain {
    pub cfg: GtcConfig,
    local: GtcLocalSim,
    global: GtcGlobalSim,
}

impl GtcDomain {
    pub fn new(cfg: GtcConfig) -> Self {
        let local = GtcLocalSim::new(cfg.clone());
        let global = GtcGlobalSim::new(cfg.clone());
        GtcDomain { cfg, local, global }
    }
}

impl LocalDomain for GtcDomain {
    type LocalState = GtcLocalState;
    type Source = GtcInfluenceSource;

    fn action_count(&self) -> usize {
        2
    }

    fn input_width(&self) -> usize {
        2 + 4 * self.cfg.lane_len + 1
    }

    fn source_bits(&self) -> usize {
        4
    }

    fn sample_initial(&self, rng: &mut RngStream) -> (GtcLocalState, GtcInfluenceSource) {
        // Draw a full global state, keep the center and evaluate the neighbors'
        // deterministic boundary behavior on it.
        let g = self.global.sample_initial(rng);
        let x = g.intersections[self.global.center_index()];
        let y = self.global.derive_sources(&g);
        (x, y)
    }

    fn step(
        &self,
        x: &GtcLocalState,
        y: &GtcInfluenceSource,
        action: ActionId,
        rng: &mut RngStream,
    ) -> (GtcLocalState, ObservationId, f64) {
        self.local.step(x, *y, action, rng)
    }

    fn encode_input(&self, action: ActionId, x_next: &GtcLocalState, buf: &mut Vec<f64>) {
        buf.clear();
        buf.push((action.0 == 0) as usize as f64);
        buf.push((action.0 == 1) as usize as f64);
        for lane in [x_next.west_in, x_next.east_out, x_next.south_in, x_next.north_out] {
            for bit in 0..self.cfg.lane_len {
                buf.push((lane >> bit & 1) as f64);
            }
        }
        buf.push((x_next.light == Light::NsGreen) as usize as f64);
    }

    fn source_to_bits(&self, y: &GtcInfluenceSource, out: &mut Vec<bool>) {
        out.clear();
        out.extend([y.arrive_west, y.arrive_south, y.blocked_east, y.blocked_north]);
    }

    fn source_from_bits(&self, bits: &[bool]) -> GtcInfluenceSource {
        GtcInfluenceSource {
            arrive_west: bits[0],
            arrive_south: bits[1],
            blocked_east: bits[2],
            blocked_north: bits[3],
        }
    }
}

/// Exact influence predictor for small Grab A Chair instances: its hidden state
/// is the local history itself, and every advance queries the enumeration
/// oracle (memoized; tiny instances have few reachable histories).
#[derive(Debug)]
pub struct GacOraclePredictor {
    pub cfg: GacConfig,
    memo: Mutex<HashMap<Vec<(usize, bool)>, [f64; 4]>>,
}

impl GacOraclePredictor {
    pub fn new(cfg: GacConfig) -> Self {
        GacOraclePredictor { cfg, memo: Mutex::new(HashMap::new()) }
    }

    fn joint(&self, history: &[(usize, bool)]) -> [f64; 4] {
        if let Some(j) = self.memo.lock().unwrap().get(history) {
            return *j;
        }
        let typed: Vec<(ActionId, bool)> =
            history.iter().map(|&(a, x)| (ActionId(a), x)).collect();
        let joint = exact_influence_gac(&self.cfg, &typed)
            .expect("oracle predictor used outside its size limits");
        self.memo.lock().unwrap().insert(history.to_vec(), joint);
        joint
    }
}

impl InfluencePredictor for GacOraclePredictor {
    type Hidden = Vec<(usize, bool)>;

    fn initial_hidden(&self) -> Self::Hidden {
        Vec::new()
    }

    fn advance(
        &self,
        hidden: &Self::Hidden,
        input: &[f64],
        rng: &mut RngStream,
    ) -> (Self::Hidden, Vec<bool>) {
        // Encoded GAC input: [action == L, action == R, x_next].
        let action = (input[1] > 0.5) as usize;
        let x_next = input[2] > 0.5;
        let mut h = hidden.clone();
        h.push((action, x_next));
        let joint = self.joint(&h);
        let draw = rng.next_f64();
        let mut acc = 0.0;
        let mut outcome = 3;
        for (k, &p) in joint.iter().enumerate() {
            acc += p;
            if draw < acc {
                outcome = k;
                break;
            }
        }
        (h, vec![outcome & 1 == 1, outcome & 2 == 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_predictor_ignores_input() {
        let p = UniformPredictor { bits: 2 };
        let mut a = RngStream::new(3);
        let mut b = RngStream::new(3);
        let (_, x) = p.advance(&(), &[1.0, 0.0, 1.0], &mut a);
        let (_, y) = p.advance(&(), &[0.0, 1.0, 0.0], &mut b);
        assert_eq!(x, y);
    }

    #[test]
    fn gac_initial_source_marginal() {
        let d = GacDomain::new(GacConfig::new(5));
        let mut rng = RngStream::new(17);
        let n = 10_000;
        let lefts = (0..n)
            .filter(|_| d.sample_initial(&mut rng).1.contest_left)
            .count();
        let freq = lefts as f64 / n as f64;
        assert!((freq - 0.5).abs() < 0.02);
    }

    #[test]
    fn gtc_initial_sources_degenerate() {
        let mut empty_cfg = GtcConfig::default();
        empty_cfg.init_occupancy_prob = 0.0;
        let d = GtcDomain::new(empty_cfg);
        let mut rng = RngStream::new(0);
        let (_, y) = d.sample_initial(&mut rng);
        assert_eq!(y, GtcInfluenceSource::default());

        let mut full_cfg = GtcConfig::default();
        full_cfg.init_occupancy_prob = 1.0;
        let d = GtcDomain::new(full_cfg);
        let (_, y) = d.sample_initial(&mut rng);
        assert!(y.blocked_east && y.blocked_north);
        assert!(!y.arrive_west && !y.arrive_south, "full entrances refuse arrivals");
    }

    #[test]
    fn ials_uniform_runs_deterministically() {
        let sim = IalsSimulator::new(GacDomain::new(GacConfig::new(5)), UniformPredictor { bits: 2 });
        let mut a = RngStream::new(8);
        let mut b = RngStream::new(8);
        let sa = sim.sample_initial(&mut a);
        let sb = sim.sample_initial(&mut b);
        let ra = sim.step(&sa, ActionId(1), &mut a);
        let rb = sim.step(&sb, ActionId(1), &mut b);
        assert_eq!(ra.observation, rb.observation);
        assert_eq!(ra.reward, rb.reward);
        assert_eq!(ra.next_state.x, rb.next_state.x);
    }
}
