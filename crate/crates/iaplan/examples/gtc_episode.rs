//! Roll one Grid Traffic Control episode with the hand-coded light policy on
//! the center intersection and print the center's occupancy each step.

use iaplan::gtc::{handcoded_light, GtcConfig, GtcGlobalSim, Light};
use iaplan::{ActionId, GenerativeSimulator, RngStream};

fn main() {
    let cfg = GtcConfig::default();
    let sim = GtcGlobalSim::new(cfg.clone());
    let mut rng = RngStream::new(7);

    let mut state = sim.sample_initial(&mut rng);
    let mut ret = 0.0;
    println!("Grid Traffic Control 3x3, horizon {}", cfg.horizon);
    for t in 0..cfg.horizon {
        let center = state.intersections[sim.center_index()];
        let action = ActionId((handcoded_light(&center, cfg.lane_len) == Light::NsGreen) as usize);
        let res = sim.step(&state, action, &mut rng);
        ret += res.reward;
        println!(
            "t={t:2} light={:?} vehicles_at_center={} obs={:04b} reward={}",
            res.next_state.intersections[sim.center_index()].light,
            res.next_state.intersections[sim.center_index()].occupied_count(),
            res.observation.0,
            res.reward,
        );
        state = res.next_state;
    }
    println!("undiscounted return: {ret}");
}
