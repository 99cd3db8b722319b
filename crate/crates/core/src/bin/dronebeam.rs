use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use dronebeam::pipeline::{run, ExperimentConfig, PipelineError, Stage};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Command {
    Generate,
    Train,
    Evaluate,
    Rollout,
    Report,
    All,
}

impl From<Command> for Stage {
    fn from(c: Command) -> Self {
        match c {
            Command::Generate => Stage::Generate,
            Command::Train => Stage::Train,
            Command::Evaluate => Stage::Evaluate,
            Command::Rollout => Stage::Rollout,
            Command::Report => Stage::Report,
            Command::All => Stage::All,
        }
    }
}

/// Synthetic drone mmWave beam prediction and tracking experiments.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Experiment config (JSON). Defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, overriding the config's `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Re-derive every seed in the config from this value.
    #[arg(long)]
    seed_override: Option<u64>,
    /// Only log warnings and errors.
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = (|| -> Result<(), PipelineError> {
        let mut config = match &cli.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(out) = &cli.out {
            config.output_dir = out.clone();
        }
        if let Some(seed) = cli.seed_override {
            config.apply_seed_override(seed);
        }
        run(cli.command.into(), &config)
    })();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
