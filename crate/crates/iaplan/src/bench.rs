//! Benchmark harness: run POMCP episodes where the environment is always the
//! global simulator while the planner searches either the same global
//! simulator or an influence-augmented local one, then aggregate per-episode
//! metrics into CSV rows and SVG plots.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gac::{GacConfig, GacGlobalSim};
use crate::gtc::{GtcConfig, GtcGlobalSim};
use crate::ials::{GacDomain, GacOraclePredictor, GtcDomain, IalsSimulator, UniformPredictor};
use crate::influence::RnnPredictor;
use crate::pomcp::{PomcpConfig, PomcpPlanner};
use crate::rng::RngStream;
use crate::sim::{discounted_return, ActionId, GenerativeSimulator, SimulatorBudget};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum DomainConfig {
    Gac(GacConfig),
    Gtc(GtcConfig),
}

impl DomainConfig {
    pub fn tag(&self) -> &'static str {
        match self {
            DomainConfig::Gac(_) => "gac",
            DomainConfig::Gtc(_) => "gtc",
        }
    }

    pub fn horizon(&self) -> usize {
        match self {
            DomainConfig::Gac(c) => c.horizon,
            DomainConfig::Gtc(c) => c.horizon,
        }
    }

    fn validate(&self) -> Result<(), String> {
        match self {
            DomainConfig::Gac(c) => c.validate(),
            DomainConfig::Gtc(c) => c.validate(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimulatorKind {
    /// Planner searches the full global simulator.
    Global,
    /// Local simulator driven by a trained recurrent predictor.
    IalsLearned,
    /// Local simulator with uniform-random influence sources.
    IalsUniform,
    /// Local simulator with the exact enumeration oracle (tiny Grab A Chair only).
    IalsOracle,
}

impl SimulatorKind {
    pub fn tag(&self) -> &'static str {
        match self {
            SimulatorKind::Global => "global",
            SimulatorKind::IalsLearned => "ials_learned",
            SimulatorKind::IalsUniform => "ials_uniform",
            SimulatorKind::IalsOracle => "ials_oracle",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlannerSettings {
    pub ucb_c: f64,
    pub gamma: f64,
    /// Search depth cap; defaults to the domain horizon.
    #[serde(default)]
    pub effective_horizon: Option<usize>,
    pub budget: SimulatorBudget,
    pub n_initial_particles: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub domain: DomainConfig,
    pub simulator: SimulatorKind,
    /// Model file for [`SimulatorKind::IalsLearned`].
    #[serde(default)]
    pub model_path: Option<PathBuf>,
    pub planner: PlannerSettings,
    pub n_episodes: usize,
    pub seed: u64,
    /// Echoed into the results so grid sweeps stay self-describing.
    #[serde(default)]
    pub grid_var: String,
    #[serde(default)]
    pub grid_value: String,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        self.domain.validate().map_err(BenchError::BadConfig)?;
        self.planner.budget.validate().map_err(BenchError::BadConfig)?;
        if self.n_episodes == 0 {
            return Err(BenchError::BadConfig("n_episodes must be positive".into()));
        }
        if self.simulator == SimulatorKind::IalsLearned && self.model_path.is_none() {
            return Err(BenchError::BadConfig(
                "ials_learned requires model_path".into(),
            ));
        }
        if self.simulator == SimulatorKind::IalsOracle && !matches!(self.domain, DomainConfig::Gac(_)) {
            return Err(BenchError::BadConfig(
                "ials_oracle is only available for the gac domain".into(),
            ));
        }
        Ok(())
    }

    pub fn pomcp_config(&self) -> PomcpConfig {
        let horizon = self.domain.horizon();
        PomcpConfig {
            ucb_c: self.planner.ucb_c,
            gamma: self.planner.gamma,
            horizon,
            effective_horizon: self.planner.effective_horizon.unwrap_or(horizon),
            budget: self.planner.budget,
            n_initial_particles: self.planner.n_initial_particles,
        }
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid experiment config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy)]
pub struct EpisodeMetrics {
    pub undiscounted_return: f64,
    pub discounted_return: f64,
    /// Mean simulation work inside planner-simulator step calls per planned
    /// step, in RNG draws — a deterministic proxy for simulation time so that
    /// seeded runs reproduce byte-identical results.
    pub sim_time_per_step: f64,
    pub sims_per_step: f64,
    /// Steps remaining when the particle filter depleted; the full horizon if
    /// it never did.
    pub steps_to_go_on_depletion: f64,
    pub wall_time: f64,
}

/// One episode: the environment is `env`, the planner searches `plan_sim`.
/// After particle depletion the agent acts uniformly at random for the rest of
/// the episode.
pub fn run_episode<E, P>(
    env: &E,
    plan_sim: &P,
    pcfg: &PomcpConfig,
    seed: u64,
) -> EpisodeMetrics
where
    E: GenerativeSimulator,
    P: GenerativeSimulator,
{
    let base = RngStream::new(seed);
    let mut env_rng = base.fork(0);
    let planner_seed = base.fork(1).next_u64();
    let mut fallback_rng = base.fork(2);

    let mut planner = PomcpPlanner::new(pcfg.clone(), plan_sim, planner_seed);
    let mut state = env.sample_initial(&mut env_rng);
    let mut rewards = Vec::with_capacity(pcfg.horizon);
    let mut depleted = false;
    let mut steps_to_go = pcfg.horizon as f64;
    let mut sims = 0u64;
    let mut sim_time = 0.0;
    let mut planned_steps = 0u64;

    let t0 = Instant::now();
    for t in 0..pcfg.horizon {
        let action = if depleted {
            ActionId(fallback_rng.below(env.action_count()))
        } else {
            let (a, stats) = planner.plan(plan_sim);
            sims += stats.simulations;
            sim_time += stats.sim_time;
            planned_steps += 1;
            a
        };
        let res = env.step(&state, action, &mut env_rng);
        rewards.push(res.reward);
        state = res.next_state;
        if !depleted && planner.observe(plan_sim, action, res.observation).is_err() {
            depleted = true;
            steps_to_go = (pcfg.horizon - (t + 1)) as f64;
        }
    }

    let steps = planned_steps.max(1) as f64;
    EpisodeMetrics {
        undiscounted_return: rewards.iter().sum(),
        discounted_return: discounted_return(&rewards, pcfg.gamma),
        sim_time_per_step: sim_time / steps,
        sims_per_step: sims as f64 / steps,
        steps_to_go_on_depletion: steps_to_go,
        wall_time: t0.elapsed().as_secs_f64(),
    }
}

/// `(mean, standard error)`; the standard error uses the sample standard
/// deviation and is 0 for fewer than two values.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub domain: String,
    pub simulator: String,
    pub grid_var: String,
    pub grid_value: String,
    pub n_episodes: usize,
    pub mean_return: f64,
    pub se_return: f64,
    pub mean_disc_return: f64,
    pub se_disc_return: f64,
    pub mean_sim_time: f64,
    pub se_sim_time: f64,
    pub mean_sims_per_step: f64,
    pub se_sims_per_step: f64,
    pub mean_steps_to_go: f64,
    pub se_steps_to_go: f64,
}

pub fn aggregate(cfg: &ExperimentConfig, episodes: &[EpisodeMetrics]) -> AggregateRow {
    let col = |f: fn(&EpisodeMetrics) -> f64| -> Vec<f64> { episodes.iter().map(f).collect() };
    let (mean_return, se_return) = mean_se(&col(|e| e.undiscounted_return));
    let (mean_disc_return, se_disc_return) = mean_se(&col(|e| e.discounted_return));
    let (mean_sim_time, se_sim_time) = mean_se(&col(|e| e.sim_time_per_step));
    let (mean_sims_per_step, se_sims_per_step) = mean_se(&col(|e| e.sims_per_step));
    let (mean_steps_to_go, se_steps_to_go) = mean_se(&col(|e| e.steps_to_go_on_depletion));
    AggregateRow {
        domain: cfg.domain.tag().to_string(),
        simulator: cfg.simulator.tag().to_string(),
        grid_var: cfg.grid_var.clone(),
        grid_value: cfg.grid_value.clone(),
        n_episodes: episodes.len(),
        mean_return,
        se_return,
        mean_disc_return,
        se_disc_return,
        mean_sim_time,
        se_sim_time,
        mean_sims_per_step,
        se_sims_per_step,
        mean_steps_to_go,
        se_steps_to_go,
    }
}

fn run_episodes<E, P>(env: &E, plan_sim: &P, cfg: &ExperimentConfig) -> Vec<EpisodeMetrics>
where
    E: GenerativeSimulator,
    P: GenerativeSimulator,
{
    let pcfg = cfg.pomcp_config();
    let seeds = RngStream::new(cfg.seed);
    (0..cfg.n_episodes)
        .map(|e| run_episode(env, plan_sim, &pcfg, seeds.fork(e as u64).next_u64()))
        .collect()
}

/// Runs every episode of one experiment configuration and returns the raw
/// per-episode metrics. The environment is always the global simulator.
pub fn run_config_episodes(cfg: &ExperimentConfig) -> Result<Vec<EpisodeMetrics>, BenchError> {
    cfg.validate()?;
    match &cfg.domain {
        DomainConfig::Gac(g) => {
            let env = GacGlobalSim::new(g.clone());
            Ok(match cfg.simulator {
                SimulatorKind::Global => run_episodes(&env, &env, cfg),
                SimulatorKind::IalsUniform => {
                    let sim = IalsSimulator::new(GacDomain::new(g.clone()), UniformPredictor { bits: 2 });
                    run_episodes(&env, &sim, cfg)
                }
                SimulatorKind::IalsLearned => {
                    let model = RnnPredictor::load(cfg.model_path.as_ref().unwrap())?;
                    let sim = IalsSimulator::new(GacDomain::new(g.clone()), model);
                    run_episodes(&env, &sim, cfg)
                }
                SimulatorKind::IalsOracle => {
                    let sim = IalsSimulator::new(
                        GacDomain::new(g.clone()),
                        GacOraclePredictor::new(g.clone()),
                    );
                    run_episodes(&env, &sim, cfg)
                }
            })
        }
        DomainConfig::Gtc(g) => {
            let env = GtcGlobalSim::new(g.clone());
            Ok(match cfg.simulator {
                SimulatorKind::Global => run_episodes(&env, &env, cfg),
                SimulatorKind::IalsUniform => {
                    let sim = IalsSimulator::new(GtcDomain::new(g.clone()), UniformPredictor { bits: 4 });
                    run_episodes(&env, &sim, cfg)
                }
                SimulatorKind::IalsLearned => {
                    let model = RnnPredictor::load(cfg.model_path.as_ref().unwrap())?;
                    let sim = IalsSimulator::new(GtcDomain::new(g.clone()), model);
                    run_episodes(&env, &sim, cfg)
                }
                SimulatorKind::IalsOracle => unreachable!("rejected by validate"),
            })
        }
    }
}

pub fn run_config(cfg: &ExperimentConfig) -> Result<AggregateRow, BenchError> {
    let episodes = run_config_episodes(cfg)?;
    Ok(aggregate(cfg, &episodes))
}

/// Runs a grid of configurations, optionally on several worker threads.
/// Results keep the input order regardless of scheduling.
pub fn run_grid(
    configs: &[ExperimentConfig],
    workers: usize,
) -> Vec<Result<AggregateRow, BenchError>> {
    if workers <= 1 || configs.len() <= 1 {
        return configs.iter().map(run_config).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<AggregateRow, BenchError>>>> =
        Mutex::new((0..configs.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers.min(configs.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= configs.len() {
                    break;
                }
                let row = run_config(&configs[i]);
                slots.lock().unwrap()[i] = Some(row);
            });
        }
    });
    slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every slot filled"))
        .collect()
}

pub const RESULTS_HEADER: &str = "domain,simulator,grid_var,grid_value,n_episodes,mean_return,se_return,mean_disc_return,se_disc_return,mean_sim_time,se_sim_time,mean_sims_per_step,se_sims_per_step,mean_steps_to_go,se_steps_to_go";

pub fn results_csv(rows: &[AggregateRow]) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.domain,
            r.simulator,
            r.grid_var,
            r.grid_value,
            r.n_episodes,
            r.mean_return,
            r.se_return,
            r.mean_disc_return,
            r.se_disc_return,
            r.mean_sim_time,
            r.se_sim_time,
            r.mean_sims_per_step,
            r.se_sims_per_step,
            r.mean_steps_to_go,
            r.se_steps_to_go
        ));
    }
    out
}

pub fn emit_results(rows: &[AggregateRow], path: &Path) -> std::io::Result<()> {
    std::fs::write(path, results_csv(rows))
}

/// One plotted line: `(x, y, error)` points.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64, f64)>,
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Renders a line chart with error bars as a standalone SVG document. Output
/// bytes depend only on the inputs.
pub fn render_line_svg(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (w, h) = (640.0, 420.0);
    let (ml, mr, mt, mb) = (70.0, 20.0, 40.0, 50.0);
    let (pw, ph) = (w - ml - mr, h - mt - mb);

    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for s in series {
        for &(x, y, e) in &s.points {
            xs.push(x);
            ys.push(y - e);
            ys.push(y + e);
        }
    }
    let (x0, x1) = bounds(&xs);
    let (y0, y1) = bounds(&ys);
    let sx = move |x: f64| ml + (x - x0) / (x1 - x0) * pw;
    let sy = move |y: f64| mt + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">{}</text>\n",
        w / 2.0, title
    ));
    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
        mt + ph, ml + pw, mt + ph
    ));
    svg.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
        mt + ph
    ));
    for k in 0..=4 {
        let fx = x0 + (x1 - x0) * k as f64 / 4.0;
        let fy = y0 + (y1 - y0) * k as f64 / 4.0;
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">{:.3}</text>\n",
            sx(fx), mt + ph + 18.0, fx
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{:.3}</text>\n",
            ml - 6.0, sy(fy) + 4.0, fy
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">{}</text>\n",
        ml + pw / 2.0, h - 10.0, x_label
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{:.2}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 16 {:.2})\">{}</text>\n",
        mt + ph / 2.0, mt + ph / 2.0, y_label
    ));

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut pts: Vec<(f64, f64, f64)> = s.points.clone();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let path: Vec<String> = pts
            .iter()
            .map(|&(x, y, _)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            path.join(" ")
        ));
        for &(x, y, e) in &pts {
            let (cx, cy) = (sx(x), sy(y));
            svg.push_str(&format!(
                "<circle cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"2.5\" fill=\"{color}\"/>\n"
            ));
            if e > 0.0 {
                svg.push_str(&format!(
                    "<line x1=\"{cx:.2}\" y1=\"{:.2}\" x2=\"{cx:.2}\" y2=\"{:.2}\" stroke=\"{color}\"/>\n",
                    sy(y - e), sy(y + e)
                ));
            }
        }
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"{color}\">{}</text>\n",
            ml + pw - 140.0,
            mt + 16.0 + 16.0 * i as f64,
            s.label
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

fn bounds(values: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Builds per-simulator series for a metric, using the rows' `grid_value` as a
/// numeric x axis. Rows with non-numeric grid values are skipped.
pub fn series_by_simulator(
    rows: &[AggregateRow],
    metric: fn(&AggregateRow) -> (f64, f64),
) -> Vec<Series> {
    let mut out: Vec<Series> = Vec::new();
    for r in rows {
        let Ok(x) = r.grid_value.parse::<f64>() else { continue };
        let (y, e) = metric(r);
        match out.iter_mut().find(|s| s.label == r.simulator) {
            Some(s) => s.points.push((x, y, e)),
            None => out.push(Series { label: r.simulator.clone(), points: vec![(x, y, e)] }),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gac_config(sim: SimulatorKind, budget: SimulatorBudget) -> ExperimentConfig {
        ExperimentConfig {
            domain: DomainConfig::Gac(GacConfig::new(5)),
            simulator: sim,
            model_path: None,
            planner: PlannerSettings {
                ucb_c: 100.0,
                gamma: 1.0,
                effective_horizon: None,
                budget,
                n_initial_particles: 50,
            },
            n_episodes: 4,
            seed: 42,
            grid_var: "n_agents".into(),
            grid_value: "5".into(),
        }
    }

    #[test]
    fn mean_se_known_values() {
        let (m, se) = mean_se(&[1.0, 2.0, 3.0, 4.0]);
        assert!((m - 2.5).abs() < 1e-12);
        // sample sd = sqrt(5/3), se = sd / 2
        assert!((se - (5.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-12);
        assert_eq!(mean_se(&[7.0]), (7.0, 0.0));
        assert_eq!(mean_se(&[]), (0.0, 0.0));
    }

    #[test]
    fn episode_returns_bounded_and_budget_respected() {
        let cfg = gac_config(SimulatorKind::Global, SimulatorBudget::SimulationCount(32));
        let eps = run_config_episodes(&cfg).unwrap();
        assert_eq!(eps.len(), 4);
        for e in &eps {
            assert!((0.0..=10.0).contains(&e.undiscounted_return));
            assert_eq!(e.sims_per_step, 32.0);
            assert_eq!(e.steps_to_go_on_depletion, 10.0, "global sim never depletes on exact obs");
        }
    }

    #[test]
    fn uniform_ials_runs() {
        let cfg = gac_config(SimulatorKind::IalsUniform, SimulatorBudget::SimulationCount(32));
        let row = run_config(&cfg).unwrap();
        assert_eq!(row.simulator, "ials_uniform");
        assert_eq!(row.n_episodes, 4);
        assert!((-0.001..=10.001).contains(&row.mean_return));
    }

    #[test]
    fn config_runs_are_deterministic() {
        let cfg = gac_config(SimulatorKind::Global, SimulatorBudget::SimulationCount(16));
        let a = run_config(&cfg).unwrap();
        let b = run_config(&cfg).unwrap();
        assert_eq!(a.mean_return, b.mean_return);
        assert_eq!(a.se_return, b.se_return);
        assert_eq!(a.mean_sims_per_step, b.mean_sims_per_step);
    }

    #[test]
    fn grid_keeps_input_order() {
        let configs = vec![
            gac_config(SimulatorKind::Global, SimulatorBudget::SimulationCount(8)),
            gac_config(SimulatorKind::IalsUniform, SimulatorBudget::SimulationCount(8)),
        ];
        let rows = run_grid(&configs, 1);
        assert_eq!(rows[0].as_ref().unwrap().simulator, "global");
        assert_eq!(rows[1].as_ref().unwrap().simulator, "ials_uniform");
    }

    #[test]
    fn learned_without_model_is_rejected() {
        let cfg = gac_config(SimulatorKind::IalsLearned, SimulatorBudget::SimulationCount(8));
        assert!(matches!(run_config(&cfg), Err(BenchError::BadConfig(_))));
    }

    #[test]
    fn oracle_on_gtc_is_rejected() {
        let mut cfg = gac_config(SimulatorKind::IalsOracle, SimulatorBudget::SimulationCount(8));
        cfg.domain = DomainConfig::Gtc(GtcConfig::default());
        assert!(matches!(run_config(&cfg), Err(BenchError::BadConfig(_))));
    }

    #[test]
    fn csv_layout() {
        let cfg = gac_config(SimulatorKind::Global, SimulatorBudget::SimulationCount(8));
        let row = aggregate(&cfg, &[]);
        let text = results_csv(&[row]);
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), RESULTS_HEADER);
        let row_line = lines.next().unwrap();
        assert!(row_line.starts_with("gac,global,n_agents,5,0,"));
        assert_eq!(row_line.split(',').count(), 15);
    }

    #[test]
    fn svg_is_deterministic_and_well_formed() {
        let series = vec![Series {
            label: "global".into(),
            points: vec![(5.0, 1.0, 0.1), (9.0, 2.0, 0.2)],
        }];
        let a = render_line_svg("returns", "n_agents", "mean return", &series);
        let b = render_line_svg("returns", "n_agents", "mean return", &series);
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.contains("<polyline"));
        assert!(a.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn experiment_config_json_roundtrip() {
        let cfg = gac_config(SimulatorKind::Global, SimulatorBudget::WallClockSeconds(0.5));
        let text = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back.simulator, SimulatorKind::Global);
        assert_eq!(back.planner.budget, SimulatorBudget::WallClockSeconds(0.5));
        assert_eq!(back.domain.tag(), "gac");
    }
}
