//! Command-line front end: train-and-prune runs, threshold sweeps,
//! correlation tracking, and model inspection.
//!
//! Exit codes: 0 on success, 1 for usage or configuration problems, 2 for IO
//! and file-format failures.

mod commands;
mod config;
mod report;

pub use config::{Config, DEFAULTS};
pub use report::Summary;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use std::fmt;
use std::path::PathBuf;

/// A bad invocation or a bad config value, as opposed to a runtime failure.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser)]
#[command(name = "noiseout", version, about = "Merge-correlated-neurons pruning experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct CommonArgs {
    /// Config file of `section.key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Root RNG seed (overrides run.seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides run.out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// MNIST training images (overrides data.mnist_images).
    #[arg(long)]
    mnist_images: Option<PathBuf>,
    /// MNIST training labels (overrides data.mnist_labels).
    #[arg(long)]
    mnist_labels: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train with noise outputs, pruning as accuracy allows.
    Run {
        #[command(flatten)]
        common: CommonArgs,
        /// Accuracy threshold (overrides prune.accuracy_threshold).
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// One pruning run per threshold, plus sweep.csv.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Accuracy threshold; repeat for several sweep points.
        #[arg(long = "threshold", required = true)]
        thresholds: Vec<f64>,
    },
    /// Record probe-pair |r| while training, per noise kind.
    Correlate {
        #[command(flatten)]
        common: CommonArgs,
        /// Seeds per noise kind (overrides correlate.runs).
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Score a saved model on the configured dataset.
    Eval {
        /// Saved model file.
        model: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Print a saved model's shape as JSON.
    Inspect {
        /// Saved model file.
        model: PathBuf,
    },
}

fn resolve(common: &CommonArgs) -> Result<Config> {
    let mut cfg = Config::load(common.config.as_deref())?;
    if let Some(seed) = common.seed {
        cfg.set("run.seed", &seed.to_string())?;
    }
    if let Some(out) = &common.out {
        cfg.set("run.out", &out.to_string_lossy())?;
    }
    if let Some(p) = &common.mnist_images {
        cfg.set("data.mnist_images", &p.to_string_lossy())?;
    }
    if let Some(p) = &common.mnist_labels {
        cfg.set("data.mnist_labels", &p.to_string_lossy())?;
    }
    Ok(cfg)
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Run { common, threshold } => {
            let mut cfg = resolve(&common)?;
            if let Some(t) = threshold {
                cfg.set("prune.accuracy_threshold", &t.to_string())?;
            }
            commands::cmd_run(&cfg)?;
            Ok(())
        }
        Cmd::Sweep { common, thresholds } => {
            let cfg = resolve(&common)?;
            commands::cmd_sweep(&cfg, &thresholds)
        }
        Cmd::Correlate { common, runs } => {
            let cfg = resolve(&common)?;
            let runs = match runs {
                Some(r) => r,
                None => cfg.get_usize("correlate.runs")?,
            };
            commands::cmd_correlate(&cfg, runs)
        }
        Cmd::Eval { model, common } => {
            let cfg = resolve(&common)?;
            commands::cmd_eval(&model, &cfg)
        }
        Cmd::Inspect { model } => commands::cmd_inspect(&model),
    }
}

pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version are successes; bad flags are usage errors.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<UsageError>() {
                1
            } else {
                2
            }
        }
    }
}
