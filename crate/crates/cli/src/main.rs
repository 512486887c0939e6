use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use qem_core::harness::{run_experiment, ExperimentConfig, ExperimentKind};

/// Shot-noise uncertainty quantification and robust design for error mitigation.
#[derive(Parser)]
#[command(name = "qem", version)]
struct Cli {
    /// JSON experiment config; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run directory, overriding the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Prepare the ground-state circuit and its transfer family.
    PrepareState,
    /// Generate the CDR training-circuit pool.
    GenTrainingPool,
    /// Replica risk estimates over a range of sample sizes.
    Convergence,
    /// Repeated optimizer runs over the mitigation hyperparameters.
    Optimize,
    /// Optimize a circuit family and test hyperparameter transfer.
    Transfer,
    /// Matched direct and bootstrap optimizer runs.
    BootstrapCompare,
}

impl From<Command> for ExperimentKind {
    fn from(c: Command) -> Self {
        match c {
            Command::PrepareState => ExperimentKind::PrepareState,
            Command::GenTrainingPool => ExperimentKind::GenTrainingPool,
            Command::Convergence => ExperimentKind::Convergence,
            Command::Optimize => ExperimentKind::Optimize,
            Command::Transfer => ExperimentKind::Transfer,
            Command::BootstrapCompare => ExperimentKind::BootstrapCompare,
        }
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let kind = ExperimentKind::from(cli.command);
    let mut config = match &cli.config {
        Some(p) => ExperimentConfig::load(p).with_context(|| format!("reading config {}", p.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(k) = config.experiment {
        if k != kind {
            bail!("config is for `{}`, not `{}`", k.name(), kind.name());
        }
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let out = cli
        .out
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(format!("runs/{}-seed{}", kind.name(), config.seed)));
    let artifact = run_experiment(kind, &config, &out)?;
    println!("{:#}", artifact.summary);
    eprintln!("wrote {} ({} quantum shots, {} resampled)", out.display(), artifact.shots.quantum, artifact.shots.resampled);
    Ok(())
}
