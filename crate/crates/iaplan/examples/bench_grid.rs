//! Run a small benchmark grid in-process and print the results table.
//!
//! Sweeps the Grab A Chair agent count for the global simulator and the
//! uniform-predictor IALS, aggregating 20 episodes per cell.

use iaplan::bench::{
    results_csv, run_grid, DomainConfig, ExperimentConfig, PlannerSettings, SimulatorKind,
};
use iaplan::gac::GacConfig;
use iaplan::SimulatorBudget;

fn main() {
    let planner = PlannerSettings {
        ucb_c: 100.0,
        gamma: 1.0,
        effective_horizon: None,
        budget: SimulatorBudget::SimulationCount(500),
        n_initial_particles: 500,
    };

    let mut configs = Vec::new();
    for n in [5usize, 9, 17] {
        for sim in [SimulatorKind::Global, SimulatorKind::IalsUniform] {
            configs.push(ExperimentConfig {
                domain: DomainConfig::Gac(GacConfig::new(n)),
                simulator: sim,
                model_path: None,
                planner: planner.clone(),
                n_episodes: 20,
                seed: 5,
                grid_var: "n_agents".into(),
                grid_value: n.to_string(),
            });
        }
    }

    let rows: Vec<_> = run_grid(&configs, 2)
        .into_iter()
        .collect::<Result<_, _>>()
        .expect("grid runs");
    print!("{}", results_csv(&rows));
}
