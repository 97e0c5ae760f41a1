//! `truncq`: generate truncated datasets, fit and query conditional
//! quantiles, and run convergence-rate experiments.
//!
//! Exit codes: 0 success, 1 usage or config error, 2 slope assertion
//! failure, 3 runtime error.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use truncq::datagen::Truncation;
use truncq::harness::ExperimentConfig;
use truncq::{BandwidthSchedule, KernelSpec, SmootherSpec};

use config::{load, FitQueryConfig, GenerateConfig, RateConfig};
use error::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "truncq",
    version,
    about = "Conditional quantiles under random left truncation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a truncated dataset and write it with its metadata sidecar.
    Generate(GenerateArgs),
    /// Fit the estimator and evaluate conditional quantiles at (x, p) pairs.
    FitQuery(FitQueryArgs),
    /// Run the Monte-Carlo size ladder and fit log-log error slopes.
    Rate(RateArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// TOML config file; flags override its values.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    seed: Option<u64>,
    /// Latent sample size N before truncation.
    #[arg(long)]
    latent_n: Option<usize>,
    #[arg(long)]
    rho: Option<f64>,
    /// Upper end of the uniform truncation law.
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    stem: Option<String>,
}

#[derive(Args, Debug)]
struct FitQueryArgs {
    #[command(flatten)]
    common: Common,
    /// Dataset CSV with header `x,y,t`.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Saved estimator JSON to query instead of fitting.
    #[arg(long)]
    estimator: Option<PathBuf>,
    /// Comma-separated query covariates.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    x: Option<Vec<f64>>,
    /// Comma-separated probability levels.
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    /// Explicit bandwidth, replacing the configured schedule.
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    kernel: Option<KernelSpec>,
    #[arg(long)]
    smoother: Option<SmootherSpec>,
    /// Search bracket as `a,b`.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, num_args = 1)]
    bracket: Option<Vec<f64>>,
    #[arg(long)]
    tolerance: Option<f64>,
    /// Write the fitted estimator to estimator.json.
    #[arg(long)]
    save_estimator: bool,
    /// Write the C_n, F_n and G_n step curves.
    #[arg(long)]
    export_curves: bool,
}

#[derive(Args, Debug)]
struct RateArgs {
    #[command(flatten)]
    common: Common,
    /// Worker threads; defaults to one per core.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    base_seed: Option<u64>,
    #[arg(long)]
    replications: Option<usize>,
    /// Comma-separated latent sample sizes.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    /// Exit with status 2 when a slope fit fails or leaves its window.
    #[arg(long)]
    assert: bool,
    /// Replace the measured means by N^EXPONENT before fitting slopes.
    #[arg(long, allow_negative_numbers = true)]
    inject_power_law: Option<f64>,
}

fn generate_config(args: GenerateArgs) -> Result<GenerateConfig, CliError> {
    let mut cfg: GenerateConfig = load(args.common.config.as_deref())?;
    if let Some(out) = args.common.out {
        cfg.out_dir = out;
    }
    if let Some(seed) = args.seed {
        cfg.model.seed = seed;
    }
    if let Some(n) = args.latent_n {
        cfg.latent_n = n;
    }
    if let Some(rho) = args.rho {
        cfg.model.rho = rho;
    }
    if let Some(tau) = args.tau {
        cfg.model.truncation = Truncation::Uniform { tau };
    }
    if let Some(stem) = args.stem {
        cfg.stem = stem;
    }
    Ok(cfg)
}

fn fit_query_config(args: FitQueryArgs) -> Result<FitQueryConfig, CliError> {
    let mut cfg: FitQueryConfig = load(args.common.config.as_deref())?;
    if let Some(out) = args.common.out {
        cfg.out_dir = out;
    }
    if let Some(d) = args.dataset {
        cfg.dataset = Some(d);
        cfg.estimator = None;
    }
    if let Some(e) = args.estimator {
        cfg.estimator = Some(e);
    }
    if let Some(x) = args.x {
        cfg.x = x;
    }
    if let Some(p) = args.p {
        cfg.p = p;
    }
    if let Some(h) = args.h {
        cfg.bandwidth = BandwidthSchedule::Explicit { h };
    }
    if let Some(k) = args.kernel {
        cfg.kernel = k;
    }
    if let Some(s) = args.smoother {
        cfg.smoother = s;
    }
    if let Some(b) = args.bracket {
        match b[..] {
            [a, b] => cfg.bracket = Some((a, b)),
            _ => return Err(CliError::config(format!("--bracket takes two values, got {}", b.len()))),
        }
    }
    if let Some(t) = args.tolerance {
        cfg.tolerance = Some(t);
    }
    cfg.save_estimator |= args.save_estimator;
    cfg.export_curves |= args.export_curves;
    Ok(cfg)
}

fn rate_config(args: &RateArgs) -> Result<RateConfig, CliError> {
    let mut cfg: RateConfig = load(args.common.config.as_deref())?;
    if let Some(out) = &args.common.out {
        cfg.out_dir = Some(out.clone());
    }
    if args.jobs.is_some() {
        cfg.jobs = args.jobs;
    }
    if args.inject_power_law.is_some() {
        cfg.inject_power_law = args.inject_power_law;
    }
    let exp: &mut ExperimentConfig = &mut cfg.experiment;
    if let Some(seed) = args.base_seed {
        exp.base_seed = seed;
    }
    if let Some(r) = args.replications {
        exp.replications = r;
    }
    if let Some(sizes) = &args.sizes {
        exp.sample_sizes = sizes.clone();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate(args) => commands::generate(&generate_config(args)?),
        Command::FitQuery(args) => commands::fit_query(&fit_query_config(args)?),
        Command::Rate(args) => commands::rate(&rate_config(&args)?, args.assert),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
