use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use robust_eig::experiment::{run_experiment, summarize, write_outputs, ExperimentConfig};
use robust_eig::robust_mean::{ProxyMode, RemovalMode};
use robust_eig::selftest;

#[derive(Parser)]
#[command(name = "robust-eig", version, about = "Robust distributed eigenspace estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a corruption sweep and write results.csv and summary.json.
    Run(RunArgs),
    /// Run quick built-in property checks.
    Selftest,
}

#[derive(clap::Args)]
struct RunArgs {
    /// TOML (or .json) config; command-line flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, visible_alias = "out")]
    out_dir: PathBuf,
    /// Comma-separated corruption fractions.
    #[arg(long, value_delimiter = ',')]
    alpha_grid: Option<Vec<f64>>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n_per_r: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    removal: Option<RemovalArg>,
    #[arg(long, value_enum)]
    proxy: Option<ProxyArg>,
    /// Record wall-clock times (output is then no longer reproducible).
    #[arg(long)]
    timing: bool,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum RemovalArg {
    Max,
    Randomized,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ProxyArg {
    Theory,
    Simplified,
}

fn build_config(args: &RunArgs) -> robust_eig::Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(grid) = &args.alpha_grid {
        cfg.alpha_grid = grid.clone();
    }
    if let Some(d) = args.d {
        cfg.d = d;
    }
    if let Some(r) = args.r {
        cfg.r = r;
    }
    if let Some(m) = args.m {
        cfg.m = m;
    }
    if let Some(n) = args.n_per_r {
        cfg.n_per_r = n;
    }
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if let Some(s) = args.seed {
        cfg.master_seed = s;
    }
    if let Some(mode) = args.removal {
        cfg.removal_mode = match mode {
            RemovalArg::Max => RemovalMode::DeterministicMax,
            RemovalArg::Randomized => RemovalMode::RandomizedProportional,
        };
    }
    if let Some(mode) = args.proxy {
        cfg.proxy_mode = match mode {
            ProxyArg::Theory => ProxyMode::Theory,
            ProxyArg::Simplified => ProxyMode::Simplified,
        };
    }
    cfg.record_timing |= args.timing;
    cfg.validate()?;
    Ok(cfg)
}

fn run(args: &RunArgs) -> robust_eig::Result<bool> {
    let cfg = build_config(args)?;
    let output = run_experiment(&cfg)?;
    let (csv_path, json_path) = write_outputs(&output, &args.out_dir)?;
    let summary = summarize(&output, 1e-8);
    println!("{:>6} {:>11} {:>10} {:>10}", "alpha", "method", "mean_dist", "std_dist");
    for g in &summary.groups {
        println!(
            "{:>6.3} {:>11} {:>10.4} {:>10.4}",
            g.alpha, g.method, g.mean_dist, g.std_dist
        );
    }
    println!("wrote {} and {}", csv_path.display(), json_path.display());
    for f in &output.failures {
        eprintln!("trial {} at alpha {} failed: {}", f.trial, f.alpha, f.message);
    }
    Ok(output.failures.is_empty())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => match run(&args) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::from(2),
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::FAILURE
            }
        },
        Command::Selftest => {
            let report = selftest::run_all();
            for check in &report {
                println!("{} {}", if check.passed { "ok  " } else { "FAIL" }, check.name);
            }
            if report.iter().all(|c| c.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
