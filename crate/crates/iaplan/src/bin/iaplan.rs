//! Command-line interface: dataset collection, influence training, the exact
//! oracle, single verbose episodes and benchmark grids.
//!
//! Exit codes: 0 success, 1 configuration error, 2 runtime failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use iaplan::bench::{
    emit_results, render_line_svg, run_grid, series_by_simulator, ExperimentConfig,
};
use iaplan::gac::{GacConfig, GacGlobalSim};
use iaplan::gtc::{GtcConfig, GtcGlobalSim};
use iaplan::ials::{GacDomain, GtcDomain};
use iaplan::influence::{
    collect_dataset, exact_influence_gac, train, CellKind, InfluenceDataset, TrainConfig,
};
use iaplan::influence::train::OptimizerKind;
use iaplan::pomcp::PomcpPlanner;
use iaplan::{ActionId, GenerativeSimulator, RngStream};

#[derive(Parser)]
#[command(name = "iaplan", version, about = "Influence-augmented online planning toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum DomainArg {
    Gac,
    Gtc,
}

#[derive(Clone, Copy, ValueEnum)]
enum CellArg {
    Gru,
    Elman,
}

#[derive(Clone, Copy, ValueEnum)]
enum OptimizerArg {
    Sgd,
    Adam,
}

#[derive(Subcommand)]
enum Command {
    /// Roll global-simulator episodes under a uniform exploratory policy and
    /// write an influence dataset (NDJSON).
    Collect(CollectArgs),
    /// Train a recurrent influence predictor on a collected dataset.
    Train(TrainArgs),
    /// Print the exact influence distribution for a tiny Grab A Chair history.
    Oracle(OracleArgs),
    /// Run one episode with a verbose per-step trace.
    Plan(PlanArgs),
    /// Run a grid of benchmark configurations and write results.csv plus plots.
    Bench(BenchArgs),
}

#[derive(Args)]
struct CollectArgs {
    #[arg(long, value_enum)]
    domain: DomainArg,
    #[arg(long)]
    episodes: usize,
    /// Episode horizon; defaults to the domain's standard horizon.
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Ring size (gac only).
    #[arg(long, default_value_t = 5)]
    n_agents: usize,
    /// Contested-chair success probability (gac only).
    #[arg(long, default_value_t = 0.0)]
    p: f64,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, value_enum, default_value = "gru")]
    cell: CellArg,
    #[arg(long, default_value_t = 8)]
    hidden: usize,
    #[arg(long, default_value_t = 5e-4)]
    lr: f64,
    #[arg(long, default_value_t = 128)]
    batch: usize,
    #[arg(long, default_value_t = 8000)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-5)]
    weight_decay: f64,
    #[arg(long, value_enum, default_value = "adam")]
    optimizer: OptimizerArg,
    /// Model output file (JSON).
    #[arg(long)]
    out: PathBuf,
    /// Learning-curve output file (CSV); defaults to the model path with a
    /// .curve.csv suffix.
    #[arg(long)]
    curve_out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 3)]
    n_agents: usize,
    #[arg(long, default_value_t = 0.0)]
    p: f64,
    /// Local history as comma-separated steps `AX` with action A in {0, 1}
    /// (left/right) and next local state X in {0, 1}, e.g. `01,10`.
    #[arg(long, default_value = "")]
    history: String,
}

#[derive(Args)]
struct PlanArgs {
    /// Experiment configuration (JSON, one object).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct BenchArgs {
    /// Grid configuration (JSON array of experiment objects).
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Output directory for results.csv and SVG plots.
    #[arg(long)]
    out: PathBuf,
}

enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::from(1),
            CliError::Runtime(_) => ExitCode::from(2),
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Runtime(m) => m,
        }
    }
}

fn config_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Config(e.to_string())
}

fn runtime_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            eprintln!("{e}");
            return ExitCode::from(1);
        }
        Err(e) => {
            // --help / --version.
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    let result = match cli.command {
        Command::Collect(args) => cmd_collect(args),
        Command::Train(args) => cmd_train(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Plan(args) => cmd_plan(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

fn cmd_collect(args: CollectArgs) -> Result<(), CliError> {
    let rng = RngStream::new(args.seed);
    let ds = match args.domain {
        DomainArg::Gac => {
            let cfg = GacConfig { n_agents: args.n_agents, p: args.p, ..GacConfig::new(3) };
            cfg.validate().map_err(config_err)?;
            let horizon = args.horizon.unwrap_or(cfg.horizon);
            let global = GacGlobalSim::new(cfg.clone());
            collect_dataset(&global, &GacDomain::new(cfg), "gac", args.episodes, horizon, &rng)
        }
        DomainArg::Gtc => {
            let cfg = GtcConfig::default();
            let horizon = args.horizon.unwrap_or(cfg.horizon);
            let global = GtcGlobalSim::new(cfg.clone());
            collect_dataset(&global, &GtcDomain::new(cfg), "gtc", args.episodes, horizon, &rng)
        }
    };
    ds.save(&args.out).map_err(runtime_err)?;
    println!(
        "wrote {} episodes ({} steps x {} inputs) to {}",
        ds.episodes.len(),
        ds.seq_len(),
        ds.input_width(),
        args.out.display()
    );
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<(), CliError> {
    let ds = InfluenceDataset::load(&args.dataset).map_err(config_err)?;
    let cfg = TrainConfig {
        cell: match args.cell {
            CellArg::Gru => CellKind::Gru,
            CellArg::Elman => CellKind::Elman,
        },
        hidden: args.hidden,
        learning_rate: args.lr,
        batch_size: args.batch,
        epochs: args.epochs,
        weight_decay: args.weight_decay,
        optimizer: match args.optimizer {
            OptimizerArg::Sgd => OptimizerKind::Sgd,
            OptimizerArg::Adam => OptimizerKind::Adam,
        },
        grad_clip_norm: 5.0,
        seed: args.seed,
    };
    let (net, curve) = train(&ds, &cfg).map_err(runtime_err)?;
    net.save(&args.out, Some(&cfg)).map_err(runtime_err)?;
    let curve_path = args.curve_out.unwrap_or_else(|| {
        let mut p = args.out.clone().into_os_string();
        p.push(".curve.csv");
        PathBuf::from(p)
    });
    curve.save_csv(&curve_path).map_err(runtime_err)?;
    let best = curve.val_ce.iter().cloned().fold(f64::INFINITY, f64::min);
    println!(
        "trained {} epochs; best validation cross-entropy {best:.6} nats; model at {}",
        curve.val_ce.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_oracle(args: OracleArgs) -> Result<(), CliError> {
    let cfg = GacConfig { n_agents: args.n_agents, p: args.p, ..GacConfig::new(3) };
    let mut history = Vec::new();
    for tok in args.history.split(',').filter(|t| !t.is_empty()) {
        let bytes = tok.as_bytes();
        if bytes.len() != 2 || !bytes.iter().all(|b| *b == b'0' || *b == b'1') {
            return Err(CliError::Config(format!(
                "bad history step {tok:?}: expected two bits like 01"
            )));
        }
        history.push((ActionId((bytes[0] - b'0') as usize), bytes[1] == b'1'));
    }
    let joint = exact_influence_gac(&cfg, &history).map_err(config_err)?;
    println!("history steps: {}", history.len());
    for (k, label) in [
        "contest_left=0 contest_right=0",
        "contest_left=1 contest_right=0",
        "contest_left=0 contest_right=1",
        "contest_left=1 contest_right=1",
    ]
    .iter()
    .enumerate()
    {
        println!("P({label}) = {:.6}", joint[k]);
    }
    Ok(())
}

fn cmd_plan(args: PlanArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.config).map_err(config_err)?;
    let mut cfg: ExperimentConfig = serde_json::from_str(&text).map_err(config_err)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate().map_err(config_err)?;
    verbose_episode(&cfg).map_err(runtime_err)
}

/// One traced episode; mirrors `bench::run_episode` but prints every step.
fn verbose_episode(cfg: &ExperimentConfig) -> Result<(), String> {
    use iaplan::bench::{DomainConfig, SimulatorKind};
    use iaplan::ials::{GacOraclePredictor, IalsSimulator, UniformPredictor};
    use iaplan::influence::RnnPredictor;

    fn run<E: GenerativeSimulator, P: GenerativeSimulator>(
        env: &E,
        plan_sim: &P,
        cfg: &ExperimentConfig,
    ) {
        let pcfg = cfg.pomcp_config();
        let base = RngStream::new(cfg.seed);
        let mut env_rng = base.fork(0);
        let planner_seed = base.fork(1).next_u64();
        let mut fallback_rng = base.fork(2);
        let mut planner = PomcpPlanner::new(pcfg.clone(), plan_sim, planner_seed);
        let mut state = env.sample_initial(&mut env_rng);
        let mut depleted = false;
        let mut ret = 0.0;
        for t in 0..pcfg.horizon {
            let (action, note) = if depleted {
                (ActionId(fallback_rng.below(env.action_count())), "fallback".to_string())
            } else {
                let (a, stats) = planner.plan(plan_sim);
                (
                    a,
                    format!("sims={} sim_work={:.0} draws", stats.simulations, stats.sim_time),
                )
            };
            let res = env.step(&state, action, &mut env_rng);
            ret += res.reward;
            println!(
                "t={t:2} action={} obs={} reward={} {note}",
                action.0, res.observation.0, res.reward
            );
            state = res.next_state;
            if !depleted && planner.observe(plan_sim, action, res.observation).is_err() {
                depleted = true;
                println!("t={t:2} particle filter depleted; acting uniformly at random");
            }
        }
        println!("undiscounted return: {ret}");
    }

    match &cfg.domain {
        DomainConfig::Gac(g) => {
            let env = GacGlobalSim::new(g.clone());
            match cfg.simulator {
                SimulatorKind::Global => run(&env, &env, cfg),
                SimulatorKind::IalsUniform => run(
                    &env,
                    &IalsSimulator::new(GacDomain::new(g.clone()), UniformPredictor { bits: 2 }),
                    cfg,
                ),
                SimulatorKind::IalsLearned => {
                    let model = RnnPredictor::load(cfg.model_path.as_ref().unwrap())
                        .map_err(|e| e.to_string())?;
                    run(&env, &IalsSimulator::new(GacDomain::new(g.clone()), model), cfg)
                }
                SimulatorKind::IalsOracle => run(
                    &env,
                    &IalsSimulator::new(GacDomain::new(g.clone()), GacOraclePredictor::new(g.clone())),
                    cfg,
                ),
            }
        }
        DomainConfig::Gtc(g) => {
            let env = GtcGlobalSim::new(g.clone());
            match cfg.simulator {
                SimulatorKind::Global => run(&env, &env, cfg),
                SimulatorKind::IalsUniform => run(
                    &env,
                    &IalsSimulator::new(GtcDomain::new(g.clone()), UniformPredictor { bits: 4 }),
                    cfg,
                ),
                SimulatorKind::IalsLearned => {
                    let model = RnnPredictor::load(cfg.model_path.as_ref().unwrap())
                        .map_err(|e| e.to_string())?;
                    run(&env, &IalsSimulator::new(GtcDomain::new(g.clone()), model), cfg)
                }
                SimulatorKind::IalsOracle => unreachable!("rejected by validate"),
            }
        }
    }
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.config).map_err(config_err)?;
    let configs: Vec<ExperimentConfig> = serde_json::from_str(&text).map_err(config_err)?;
    for cfg in &configs {
        cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
    }
    std::fs::create_dir_all(&args.out).map_err(runtime_err)?;

    let mut rows = Vec::with_capacity(configs.len());
    for (i, result) in run_grid(&configs, args.workers).into_iter().enumerate() {
        match result {
            Ok(row) => rows.push(row),
            Err(e) => return Err(CliError::Runtime(format!("config #{i}: {e}"))),
        }
    }
    emit_results(&rows, &args.out.join("results.csv")).map_err(runtime_err)?;

    let plots: [(&str, &str, fn(&iaplan::bench::AggregateRow) -> (f64, f64)); 3] = [
        ("returns", "mean undiscounted return", |r| (r.mean_return, r.se_return)),
        ("sim_time", "mean sim work per step (rng draws)", |r| (r.mean_sim_time, r.se_sim_time)),
        ("sims_per_step", "mean simulations per step", |r| {
            (r.mean_sims_per_step, r.se_sims_per_step)
        }),
    ];
    let grid_var = rows.first().map(|r| r.grid_var.clone()).unwrap_or_default();
    for (name, y_label, metric) in plots {
        let series = series_by_simulator(&rows, metric);
        if series.is_empty() {
            continue;
        }
        let svg = render_line_svg(name, &grid_var, y_label, &series);
        std::fs::write(args.out.join(format!("{name}.svg")), svg).map_err(runtime_err)?;
    }
    println!("wrote {} rows to {}", rows.len(), args.out.join("results.csv").display());
    Ok(())
}
