use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use famsec_core::harness::{self, ExperimentConfig, ExperimentId, Format, Scale};
use famsec_core::rollout::{self, GaussianSummary, RewardDist};
use famsec_core::surrogate::{MlpConfig, RegressorConfig, SurrogateModel};
use famsec_core::{metrics, MctsConfig, RewardRange, SolverSpec, TaskFeatures, TaskParams};

#[derive(Parser, Debug)]
#[command(name = "famsec", version, about = "Solver-quality self-confidence for MDP planners")]
struct Cli {
    /// Master random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for output files.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Episodes per reward distribution.
    #[arg(long, global = true)]
    episodes: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one episode and print its trace.
    Simulate(TaskArgs),
    /// Estimate a solver's reward distribution.
    Evaluate {
        #[command(flatten)]
        task: TaskArgs,
        /// Include the raw returns in the output.
        #[arg(long)]
        samples: bool,
    },
    /// Train a trusted-solver surrogate on a built-in or configured grid.
    TrainSurrogate {
        /// `exp3`, `exp4` or a path to an experiment config with a `training` section.
        experiment: String,
        #[arg(long, value_enum, default_value_t = RegressorKind::Mlp)]
        regressor: RegressorKind,
        /// Neighbours for the k-nearest regressor.
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long)]
        epochs: Option<usize>,
        /// Use the published (slow) parameter table instead of desk scale.
        #[arg(long)]
        full: bool,
        /// Model file to write.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Score a candidate distribution against a trusted one.
    Sq(SqArgs),
    /// Run a reference experiment or a config file; writes results and run.json.
    Experiment {
        /// `exp1`..`exp4`, `toy`, or a path to an experiment config.
        experiment: String,
        #[arg(long)]
        full: bool,
        /// Surrogate model for the trusted solver.
        #[arg(long)]
        surrogate: Option<PathBuf>,
        /// Train the surrogate on the experiment's default grid first.
        #[arg(long)]
        train: bool,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum RegressorKind {
    Mlp,
    Knn,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum SolverKindArg {
    Mcts,
    Random,
    Greedy,
}

#[derive(Args, Debug)]
struct TaskArgs {
    /// Bundled network (`small`, `medium`) or network file.
    #[arg(long, default_value = "small")]
    network: String,
    /// Task parameter file (JSON); flags below override it.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    p_trans: Option<f64>,
    #[arg(long)]
    discount: Option<f64>,
    #[arg(long)]
    rwd_sense: Option<f64>,
    #[arg(long)]
    max_steps: Option<usize>,
    /// Solver spec file (JSON); overrides the solver flags.
    #[arg(long)]
    solver_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = SolverKindArg::Mcts)]
    solver: SolverKindArg,
    #[arg(long, default_value_t = 9)]
    depth: usize,
    #[arg(long, default_value_t = 1000.0)]
    exploration: f64,
    #[arg(long, default_value_t = 100)]
    iterations: usize,
    #[arg(long)]
    label: Option<String>,
}

impl TaskArgs {
    fn params(&self) -> anyhow::Result<TaskParams> {
        let mut params = match &self.params {
            Some(path) => read_json(path)?,
            None => TaskParams::default(),
        };
        if let Some(v) = self.p_trans {
            params.p_trans = v;
        }
        if let Some(v) = self.discount {
            params.discount = v;
        }
        if let Some(v) = self.rwd_sense {
            params.rwd_sense = v;
        }
        if let Some(v) = self.max_steps {
            params.max_steps = v;
        }
        params.validate()?;
        Ok(params)
    }

    fn solver(&self) -> anyhow::Result<SolverSpec> {
        let spec = match &self.solver_file {
            Some(path) => read_json(path)?,
            None => {
                let label = self.label.clone();
                match self.solver {
                    SolverKindArg::Mcts => SolverSpec::mcts(
                        label.unwrap_or_else(|| format!("d{}", self.depth)),
                        MctsConfig::new(self.depth, self.exploration, self.iterations),
                    ),
                    SolverKindArg::Random => SolverSpec::random(label.unwrap_or_else(|| "random".into())),
                    SolverKindArg::Greedy => SolverSpec::greedy(label.unwrap_or_else(|| "greedy".into())),
                }
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Args, Debug)]
struct SqArgs {
    #[arg(long, allow_hyphen_values = true)]
    trusted_mean: Option<f64>,
    #[arg(long)]
    trusted_std: Option<f64>,
    /// Reward-distribution JSON for the trusted solver.
    #[arg(long, conflicts_with_all = ["trusted_mean", "trusted_std"])]
    trusted_file: Option<PathBuf>,
    /// Surrogate model predicting the trusted solver.
    #[arg(long, conflicts_with_all = ["trusted_mean", "trusted_std", "trusted_file"])]
    surrogate: Option<PathBuf>,
    /// Surrogate input, e.g. `--feature p_trans=0.25` (repeatable).
    #[arg(long = "feature", value_parser = parse_feature)]
    features: Vec<(String, f64)>,
    #[arg(long, allow_hyphen_values = true)]
    cand_mean: Option<f64>,
    #[arg(long)]
    cand_std: Option<f64>,
    #[arg(long, conflicts_with_all = ["cand_mean", "cand_std"])]
    cand_file: Option<PathBuf>,
    /// Width of the global reward range.
    #[arg(long, conflicts_with_all = ["r_low", "r_high"])]
    range: Option<f64>,
    #[arg(long, allow_hyphen_values = true, requires = "r_high")]
    r_low: Option<f64>,
    #[arg(long, allow_hyphen_values = true, requires = "r_low")]
    r_high: Option<f64>,
    #[arg(long, default_value_t = metrics::DEFAULT_ALPHA)]
    alpha: f64,
}

fn parse_feature(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or("expected NAME=VALUE")?;
    let v: f64 = v.parse().map_err(|e| format!("bad value `{v}`: {e}"))?;
    Ok((k.to_string(), v))
}

/// Input errors that should exit with status 2.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text)
        .map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn summary_from(
    mean: Option<f64>,
    std: Option<f64>,
    file: &Option<PathBuf>,
    who: &str,
) -> anyhow::Result<Option<GaussianSummary>> {
    if let Some(path) = file {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        return Ok(Some(RewardDist::from_json(&text)?.summary()));
    }
    match (mean, std) {
        (Some(m), Some(s)) => Ok(Some(GaussianSummary::new(m, s))),
        (None, None) => Ok(None),
        _ => Err(usage(format!("--{who}-mean and --{who}-std must be given together"))),
    }
}

fn run_sq(args: &SqArgs, format: OutputFormat) -> anyhow::Result<()> {
    let (trusted, model_range) = match &args.surrogate {
        Some(path) => {
            let model = SurrogateModel::load(path)?;
            let (names, values) = args.features.iter().cloned().unzip();
            let features = TaskFeatures::new(names, values)?;
            (Some(model.predict(&features)?), model.reward_range)
        }
        None => (
            summary_from(args.trusted_mean, args.trusted_std, &args.trusted_file, "trusted")?,
            None,
        ),
    };
    let trusted = trusted.ok_or_else(|| usage("need a trusted distribution (--trusted-mean/--trusted-std, --trusted-file or --surrogate)"))?;
    let candidate = summary_from(args.cand_mean, args.cand_std, &args.cand_file, "cand")?
        .ok_or_else(|| usage("need a candidate distribution (--cand-mean/--cand-std or --cand-file)"))?;
    let range = match (args.range, args.r_low, args.r_high, model_range) {
        (Some(w), ..) => RewardRange::with_width(w)?,
        (None, Some(lo), Some(hi), _) => RewardRange::new(lo, hi)?,
        (None, None, None, Some(r)) => r,
        _ => return Err(usage("need a reward range (--range or --r-low/--r-high)")),
    };
    let sq = metrics::solver_quality(&trusted.floored(), &candidate.floored(), &range, args.alpha)?;
    match format {
        OutputFormat::Json => println!("{}", serde_json::to_string_pretty(&sq)?),
        OutputFormat::Csv => {
            use harness::format_float as f;
            println!("hellinger_sq {}", f(sq.hellinger_sq));
            println!("delta_mu {}", f(sq.delta_mu));
            println!("f {}", f(sq.f));
            println!("q {}", f(sq.q));
            println!("xq {}", f(sq.xq));
        }
    }
    Ok(())
}

fn load_experiment(arg: &str, full: bool) -> anyhow::Result<ExperimentConfig> {
    let scale = if full { Scale::Full } else { Scale::Desk };
    if let Some(id) = ExperimentId::parse(arg) {
        return ExperimentConfig::preset(id, scale)
            .ok_or_else(|| usage(format!("`{arg}` has no built-in configuration; pass a config file")));
    }
    let path = Path::new(arg);
    if !path.exists() {
        return Err(usage(format!("unknown experiment `{arg}` (expected exp1..exp4, toy, or a config file)")));
    }
    Ok(ExperimentConfig::load(path)?)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let format = cli.format;
    match cli.command {
        Command::Simulate(task) => {
            let (net, _) = harness::load_network(&task.network)?;
            let params = task.params()?;
            let spec = task.solver()?;
            let seed = cli.seed.unwrap_or(0);
            let result = rollout::run_episode_traced(&net, &params, &spec, seed, |s| {
                println!(
                    "step {:>3}  ugv {:>2} pursuer {:>2}  {:<8} -> ugv {:>2} pursuer {:>2}  {:?}  reward {}",
                    s.step, s.state.ugv, s.state.pursuer, s.action.to_string(), s.next.ugv, s.next.pursuer,
                    s.next.status, s.reward
                );
            })?;
            println!("{}", serde_json::to_string(&result)?);
        }
        Command::Evaluate { task, samples } => {
            let (net, _) = harness::load_network(&task.network)?;
            let params = task.params()?;
            let spec = task.solver()?;
            let n = cli.episodes.unwrap_or(1000);
            let dist = rollout::reward_distribution(&net, &params, &spec, n, cli.seed.unwrap_or(0))?;
            let json = dist.to_json(samples);
            if let Some(dir) = &cli.out_dir {
                std::fs::create_dir_all(dir)?;
                let path = dir.join(format!("{}.json", spec.label));
                std::fs::write(&path, &json)?;
                eprintln!("wrote {}", path.display());
            }
            println!("{json}");
        }
        Command::TrainSurrogate { experiment, regressor, k, epochs, full, output } => {
            let mut config = load_experiment(&experiment, full)?;
            if let Some(s) = cli.seed {
                config.master_seed = s;
            }
            if let Some(n) = cli.episodes {
                config.n_episodes = n;
            }
            let mut training = match config.training.clone().or_else(|| config.default_training()) {
                Some(t) => t,
                None => return Err(usage(format!("`{experiment}` defines no training grid"))),
            };
            if let Some(n) = cli.episodes {
                training.n_episodes = n;
            }
            training.regressor = match regressor {
                RegressorKind::Knn => RegressorConfig::KNearest { k },
                RegressorKind::Mlp => {
                    let mut cfg = MlpConfig::default();
                    if let Some(e) = epochs {
                        cfg.epochs = e;
                    }
                    RegressorConfig::Mlp(cfg)
                }
            };
            config.validate().or_else(|e| match e {
                famsec_core::Error::MissingSurrogate(_) => Ok(()),
                e => Err(e),
            })?;
            let (net, _) = harness::load_network(&config.network)?;
            let model = harness::train_surrogate(&net, &config, &training)?;
            let path = output.unwrap_or_else(|| {
                cli.out_dir.clone().unwrap_or_else(|| PathBuf::from(".")).join("surrogate.json")
            });
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            model.save(&path)?;
            if let Some(report) = model.report {
                eprintln!(
                    "trained on {} rows: rmse(mean) {}, rmse(std) {}",
                    report.rows,
                    harness::format_float(report.rmse_mean),
                    harness::format_float(report.rmse_std)
                );
            }
            println!("{}", path.display());
        }
        Command::Sq(args) => run_sq(&args, format)?,
        Command::Experiment { experiment, full, surrogate, train } => {
            let mut config = load_experiment(&experiment, full)?;
            if let Some(s) = cli.seed {
                config.master_seed = s;
            }
            if let Some(n) = cli.episodes {
                config.n_episodes = n;
            }
            if surrogate.is_some() {
                config.surrogate = surrogate;
            }
            if train && config.training.is_none() {
                config.training = config.default_training();
                if config.training.is_none() {
                    return Err(usage(format!("`{experiment}` has no default training grid")));
                }
            }
            let result = harness::run_experiment(&config)?;
            let dir = cli
                .out_dir
                .clone()
                .unwrap_or_else(|| PathBuf::from("results").join(config.id.as_str()));
            let fmt = match format {
                OutputFormat::Csv => Format::Csv,
                OutputFormat::Json => Format::Json,
            };
            let path = harness::write_outputs(&result, &dir, fmt)?;
            if let Some(model) = &result.trained_surrogate {
                model.save(dir.join("surrogate.json"))?;
            }
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<famsec_core::Error>() {
        Some(e) if e.is_config_error() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
