use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use fairtl::estimators::CmiMode;
use fairtl_cli::{parse_metrics, Command, LearnerChoice, RunConfig};

/// Targeted-learning inference for data fairness.
#[derive(Debug, Parser)]
#[command(name = "fairtl", version)]
struct Args {
    /// estimate, simulate or importance
    #[arg(long)]
    command: Command,
    /// CSV file (estimate, importance) or study TOML (simulate)
    #[arg(long)]
    input: Option<PathBuf>,
    /// TOML schema describing the CSV
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Simulation design for simulate without a study file
    #[arg(long)]
    dgp: Option<String>,
    /// Comma-separated metrics or `all`: parity, prob_parity, eq_opp, prob_eq_opp, cmi
    #[arg(long)]
    metrics: Option<String>,
    /// Training share; defaults to 0.6 for data, 0.5 for simulations
    #[arg(long)]
    split_ratio: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// super_learner, logistic, gbt or constant
    #[arg(long, default_value = "super_learner")]
    learner: LearnerChoice,
    /// CMI modelling: single or separate
    #[arg(long, default_value = "single")]
    cmi_mode: String,
    /// Worker threads (0 = all cores)
    #[arg(long, env = "FAIRTL_THREADS", default_value_t = 0)]
    threads: usize,
    /// Output directory
    #[arg(long)]
    output: PathBuf,
    /// Permutations for importance
    #[arg(long)]
    permutations: Option<usize>,
    /// Replicates per cell for simulate --dgp
    #[arg(long)]
    replicates: Option<usize>,
    /// Comma-separated sample sizes for simulate --dgp
    #[arg(long, value_delimiter = ',')]
    sample_sizes: Option<Vec<usize>>,
    /// Monte Carlo draws for ground truth
    #[arg(long)]
    n_mc: Option<usize>,
}

fn config_from(args: Args) -> fairtl_cli::Result<RunConfig> {
    let mut c = RunConfig::new(args.command, args.output);
    c.input = args.input;
    c.schema = args.schema;
    c.dgp = args.dgp;
    if let Some(m) = args.metrics {
        c.metrics = parse_metrics(&m)?;
    }
    if let Some(r) = args.split_ratio {
        c.split_ratio = r;
    }
    c.seed = args.seed;
    c.level = args.level;
    c.learner = args.learner;
    c.cmi_mode = match args.cmi_mode.as_str() {
        "single" => CmiMode::Single,
        "separate" => CmiMode::Separate,
        other => return Err(fairtl_cli::CliError::Config(format!("unknown CMI mode `{other}`"))),
    };
    c.threads = args.threads;
    if let Some(p) = args.permutations {
        c.permutations = p;
    }
    if let Some(r) = args.replicates {
        c.replicates = r;
    }
    if let Some(s) = args.sample_sizes {
        c.sample_sizes = s;
    }
    if let Some(n) = args.n_mc {
        c.n_mc = n;
    }
    Ok(c)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    let output = args.output.clone();
    let result = config_from(args).and_then(|c| fairtl_cli::run(&c));
    match result {
        Ok(_) => {
            log::info!("report written to {}", output.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
