use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use fedpdmc::diagnostics::{marginals, DiagnosticsReport};
use fedpdmc::federated::EvalCounts;
use fedpdmc::{trajectory_discretize, Flow, Skeleton};
use fedpdmc_cli::{privacy_report, run_experiment, validate_config, ExperimentConfig, ExperimentKind, Problem};

#[derive(Parser)]
#[command(name = "fedpdmc", version, about = "Federated PDMC experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Gaussian,
    Logistic,
    Ar1,
    Cox,
}

impl From<Model> for ExperimentKind {
    fn from(m: Model) -> Self {
        match m {
            Model::Gaussian => ExperimentKind::Gaussian,
            Model::Logistic => ExperimentKind::Logistic,
            Model::Ar1 => ExperimentKind::Ar1,
            Model::Cox => ExperimentKind::Cox,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write its output tree.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for independent runs (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Check a config and print it with defaults filled.
    Validate { config: PathBuf },
    /// Refreshment floor and achieved delta for a privacy target.
    Privacy {
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        delta: f64,
        /// Rate sensitivity K.
        #[arg(long)]
        sensitivity: f64,
    },
    /// Generate a synthetic data set split across workers.
    Synth {
        model: Model,
        #[arg(long)]
        out: PathBuf,
        #[arg(short = 'M', long, default_value_t = 1)]
        workers: usize,
        #[arg(short = 'N', long)]
        observations: Option<usize>,
        #[arg(short, long)]
        d: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Event rate and ESS of a skeleton CSV.
    Diag {
        skeleton: PathBuf,
        #[arg(long, default_value_t = 1e-2)]
        delta: f64,
        #[arg(long, default_value_t = 0.0)]
        burn_in: f64,
        /// End of the trajectory; defaults to the last event time.
        #[arg(long)]
        horizon: Option<f64>,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run { config, seed, out, threads, runs } => {
            let mut cfg = validate_config(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(o) = out {
                cfg.output = o;
            }
            if let Some(r) = runs {
                cfg.runs = r;
            }
            let manifest = match threads {
                Some(n) => rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .context("building thread pool")?
                    .install(|| run_experiment(&cfg))?,
                None => run_experiment(&cfg)?,
            };
            eprintln!("wrote {} files to {}", manifest.files.len() + 1, cfg.output.display());
        }
        Command::Validate { config } => {
            print!("{}", validate_config(&config)?.to_json());
        }
        Command::Privacy { epsilon, delta, sensitivity } => {
            println!("{}", privacy_report(epsilon, delta, sensitivity)?);
        }
        Command::Synth { model, out, workers, observations, d, seed } => {
            let mut cfg = ExperimentConfig::new(model.into());
            cfg.workers = workers;
            cfg.observations = observations;
            cfg.d = d;
            cfg.seed = seed;
            let cfg = cfg.with_defaults();
            cfg.validate()?;
            let manifest = Problem::synthesize(&cfg)?.write_data(&out, &cfg)?;
            eprintln!("wrote {} worker files to {}", manifest.workers.len(), out.display());
        }
        Command::Diag { skeleton, delta, burn_in, horizon } => {
            let file = std::fs::File::open(&skeleton).with_context(|| format!("opening {}", skeleton.display()))?;
            let s = Skeleton::<f64>::read_csv(std::io::BufReader::new(file), Flow::Linear, horizon)?;
            let states: Vec<_> = trajectory_discretize(&s, delta)?.into_iter().filter(|p| p.t >= burn_in).collect();
            let meta = serde_json::json!({ "skeleton": skeleton.display().to_string(), "delta": delta, "burn_in": burn_in });
            let report = DiagnosticsReport::build(&s, &marginals(&states), EvalCounts::default(), 1, None, meta)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
    }
    Ok(())
}
