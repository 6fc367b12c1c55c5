//! Roll one Grab A Chair episode under random actions and print each step.

use iaplan::gac::{GacConfig, GacGlobalSim};
use iaplan::{ActionId, GenerativeSimulator, RngStream};

fn main() {
    let cfg = GacConfig::new(5);
    let sim = GacGlobalSim::new(cfg.clone());
    let mut rng = RngStream::new(42);
    let mut act_rng = rng.fork(1);

    let mut state = sim.sample_initial(&mut rng);
    let mut ret = 0.0;
    println!("Grab A Chair, {} agents, horizon {}", cfg.n_agents, cfg.horizon);
    for t in 0..cfg.horizon {
        let action = ActionId(act_rng.below(sim.action_count()));
        let res = sim.step(&state, action, &mut rng);
        ret += res.reward;
        println!(
            "t={t:2} action={} obtained={} obs={} reward={}",
            if action.0 == 0 { "L" } else { "R" },
            res.next_state.obtained[0],
            res.observation.0,
            res.reward,
        );
        state = res.next_state;
    }
    println!("return: {ret}");
}
