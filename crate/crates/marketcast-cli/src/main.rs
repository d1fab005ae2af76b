use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use marketcast::pipeline::{self, PipelineError, RunConfig};

/// Reconstructs market forecasts, scores them against baselines, and
/// diagnoses pricing inefficiencies.
#[derive(Parser)]
#[command(name = "marketcast", version, about)]
struct Cli {
    /// Run configuration (TOML or JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Never touch the network; fixtures and cache only.
    #[arg(long, global = true)]
    offline: bool,
    /// Override the configured output directory.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Override the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the configured worker count.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score market, hub, and ARIMA forecasts against resolved outcomes.
    Evaluate,
    /// Search the convex-combination weight between hub ensemble and market.
    Combine,
    /// Impossible-mass series, volume totals, and monotonicity violations.
    Diagnose,
    /// Assemble a self-contained report from prior command outputs.
    Report,
    /// Populate the market cache from the price-history API.
    Fetch,
}

fn load_config(cli: &Cli) -> Result<RunConfig, PipelineError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| PipelineError::Config("--config is required".into()))?;
    let mut config = RunConfig::load(path)?;
    if cli.offline {
        config.offline = true;
    }
    if let Some(output) = &cli.output {
        config.output_dir = output.clone();
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(workers) = cli.workers {
        config.workers = workers;
        if workers == 0 {
            return Err(PipelineError::Config("workers must be >= 1".into()));
        }
    }
    Ok(config)
}

fn run(cli: &Cli) -> Result<(), PipelineError> {
    let config = load_config(cli)?;
    match cli.command {
        Command::Evaluate => {
            let outputs = pipeline::cmd_evaluate(&config)?;
            for line in outputs.summary_lines() {
                println!("{line}");
            }
        }
        Command::Combine => {
            let outputs = pipeline::cmd_combine(&config)?;
            for line in outputs.summary_lines() {
                println!("{line}");
            }
        }
        Command::Diagnose => {
            let outputs = pipeline::cmd_diagnose(&config)?;
            for line in outputs.summary_lines() {
                println!("{line}");
            }
        }
        Command::Report => {
            let path = pipeline::cmd_report(&config)?;
            println!("report written to {}", path.display());
        }
        Command::Fetch => {
            let fetched = pipeline::cmd_fetch(&config)?;
            println!("cached {fetched} markets under {}", config.cache_dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
