//! `pgdro` — config-driven experiments for group-robust training.
//!
//! The default chain runs with zero flags: `gen-data`, `pseudo-label`,
//! `train`, `eval` (or all at once via `pipeline`), reading and writing CSV
//! and JSON artifacts in the output directory. Every command is idempotent
//! for a fixed master seed.

mod commands;
mod config;
mod output;

use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};

use commands::Ctx;
use config::ExperimentConfig;

/// Environment variable that overrides the output directory (flags still win).
const OUT_DIR_ENV: &str = "PGDRO_OUT_DIR";

#[derive(Parser)]
#[command(name = "pgdro", version, about = "Group-robust training experiments")]
struct Cli {
    /// TOML experiment config; built-in defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed override; stage seeds derive from it.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory override (beats PGDRO_OUT_DIR and the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic benchmark train/val/test CSVs.
    GenData,
    /// Produce the group-probabilities file and a labeler quality report.
    PseudoLabel,
    /// Train the configured objectives; writes models and history reports.
    Train {
        /// Train a single objective (erm, gdro, pgdro) instead of all.
        #[arg(long)]
        objective: Option<String>,
    },
    /// Evaluate trained models on the test set.
    Eval {
        /// Evaluate a single objective instead of all.
        #[arg(long)]
        objective: Option<String>,
    },
    /// Retrain across a grid of adjustment constants and tabulate accuracy.
    SweepC {
        /// Comma-separated adjustment values (defaults to the config grid).
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
    },
    /// Export a decision-boundary grid for a trained model.
    Boundary {
        /// Export a single objective instead of all.
        #[arg(long)]
        objective: Option<String>,
        /// Grid resolution per axis.
        #[arg(long)]
        resolution: Option<usize>,
    },
    /// Run the whole benchmark end to end: generate, label, train, evaluate.
    Pipeline,
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    let cfg = ExperimentConfig::load(cli.config.as_deref())?;
    let out_dir = cli
        .out
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| cfg.out_dir.clone());
    let master_seed = cli.seed.unwrap_or(cfg.master_seed);
    let ctx = Ctx {
        cfg,
        out_dir,
        master_seed,
    };

    match &cli.command {
        Command::GenData => commands::cmd_gen_data(&ctx),
        Command::PseudoLabel => commands::cmd_pseudo_label(&ctx),
        Command::Train { objective } => commands::cmd_train(&ctx, objective),
        Command::Eval { objective } => commands::cmd_eval(&ctx, objective),
        Command::SweepC { values } => commands::cmd_sweep_c(&ctx, values),
        Command::Boundary {
            objective,
            resolution,
        } => commands::cmd_boundary(&ctx, objective, *resolution),
        Command::Pipeline => commands::cmd_pipeline(&ctx),
    }
}

fn main() {
    if let Err(err) = run() {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
