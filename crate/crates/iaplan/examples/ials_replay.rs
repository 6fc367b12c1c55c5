//! Local-simulator exactness: run the global Grid Traffic Control simulator,
//! extract the influence-source trace at the center intersection, and replay
//! it through the local simulator. Every replayed step must match the global
//! run bit for bit.

use iaplan::gtc::{GtcConfig, GtcGlobalSim, GtcLocalSim};
use iaplan::{ActionId, GenerativeSimulator, RngStream};

fn main() {
    let cfg = GtcConfig::default();
    let global = GtcGlobalSim::new(cfg.clone());
    let local = GtcLocalSim::new(cfg.clone());
    let mut rng = RngStream::new(3);
    let mut act_rng = rng.fork(1);

    // Global pass: record (action, source, center state, obs, reward).
    let mut state = global.sample_initial(&mut rng);
    let mut x = state.intersections[global.center_index()];
    let mut trace = Vec::new();
    for _ in 0..cfg.horizon {
        let action = ActionId(act_rng.below(2));
        let (res, source) = global.step_traced(&state, action, &mut rng);
        let center = res.next_state.intersections[global.center_index()];
        trace.push((action, source, center, res.observation, res.reward));
        state = res.next_state;
    }

    // Local replay driven by the extracted sources.
    let mut mismatches = 0;
    let mut unused = RngStream::new(0);
    for (t, &(action, source, center, obs, reward)) in trace.iter().enumerate() {
        let (lx, lobs, lrew) = local.step(&x, source, action, &mut unused);
        let ok = lx == center && lobs == obs && lrew == reward;
        println!(
            "t={t:2} action={} reward={lrew:5} obs={:04b} {}",
            action.0,
            lobs.0,
            if ok { "match" } else { "MISMATCH" }
        );
        mismatches += !ok as usize;
        x = lx;
    }
    println!("{mismatches} mismatches over {} steps", trace.len());
}
