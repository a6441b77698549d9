//! `mdnmf`: train, tune and evaluate adversarially trained NMF source separation.

mod commands;
mod config;
mod data;
mod error;
mod output;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "mdnmf", version, about = "Adversarially trained NMF source separation")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// JSON experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed overriding the configuration's.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory overriding the configuration's.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Mix source images or audio into a synthetic dataset with ground truth.
    SynthMix(commands::synth_mix::SynthMixArgs),
    /// Fit bases and write them with per-epoch loss traces.
    Train,
    /// Separate mixtures with trained bases.
    Separate(commands::separate::SeparateArgs),
    /// Random hyperparameter search.
    Tune,
    /// Score estimates against references.
    Eval(commands::eval::EvalArgs),
    /// Summarize loss traces.
    ConvergenceReport(commands::report::ReportArgs),
}

/// Resolved global settings handed to each command.
pub struct Context {
    pub config: Option<ExperimentConfig>,
    pub seed: u64,
    pub out: PathBuf,
}

impl Context {
    fn new(global: &Global) -> CliResult<Self> {
        let mut config = global.config.as_deref().map(ExperimentConfig::load).transpose()?;
        if let (Some(c), Some(seed)) = (config.as_mut(), global.seed) {
            c.seed = seed;
        }
        let seed = global.seed.or(config.as_ref().map(|c| c.seed)).unwrap_or(0);
        let out = global
            .out
            .clone()
            .or_else(|| config.as_ref().and_then(|c| c.out.clone()))
            .unwrap_or_else(|| PathBuf::from("mdnmf-out"));
        Ok(Context { config, seed, out })
    }

    pub fn require_config(&self) -> CliResult<&ExperimentConfig> {
        self.config
            .as_ref()
            .ok_or_else(|| CliError::Usage("this command needs --config".into()))
    }
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot configure {n} threads: {e}")))?;
    }
    let ctx = Context::new(&cli.global)?;
    match cli.command {
        Command::SynthMix(a) => commands::synth_mix::run(&ctx, &a),
        Command::Train => commands::train::run(&ctx),
        Command::Separate(a) => commands::separate::run(&ctx, &a),
        Command::Tune => commands::tune::run(&ctx),
        Command::Eval(a) => commands::eval::run(&ctx, &a),
        Command::ConvergenceReport(a) => commands::report::run(&ctx, &a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MDNMF_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
