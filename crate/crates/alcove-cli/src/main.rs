//! `alcove` — fits, limit-set exports and Monte Carlo runs from the shell.
//!
//! Every subcommand reads JSON, writes its artifacts into `--out` and drops
//! a `manifest.json` recording the canonical config hash, the effective
//! seed and the artifact versions, so a results directory is traceable to
//! its inputs. Exit codes: 0 on success with all invariants intact, 1 on
//! input or I/O errors (nothing is written), 2 when a run completed but an
//! invariant failed (outputs and diagnostics are written).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod experiment;
mod fit;
mod manifest;
mod mset;

#[derive(Debug, Parser)]
#[command(name = "alcove", version, about = "adaptive lasso with componentwise tuning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct CommonArgs {
    /// Input JSON file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Override the seed from the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for replication-level parallelism (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Report format: the long-format table (`csv`) or the full structured
    /// report (`json`). The summary and manifest are always JSON.
    #[arg(long, default_value = "csv", value_parser = ["csv", "json"])]
    format: String,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one penalized fit from a problem file.
    Fit {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Export the attainable limit set of a regime as a boundary cloud.
    Mset {
        #[command(flatten)]
        common: CommonArgs,
        /// Weight scale d; the boundary scales by sqrt(d).
        #[arg(long, default_value_t = 1.0)]
        d: f64,
        /// Number of boundary directions.
        #[arg(long, default_value_t = 256)]
        count: usize,
        /// Also write a planar projection dropping this coordinate (0-based).
        #[arg(long)]
        projection: Option<usize>,
        /// Overlay the least-squares confidence ellipse at this level
        /// (p = 2 only), e.g. 0.05 for 95% confidence.
        #[arg(long)]
        ellipse_alpha: Option<f64>,
    },
    /// Empirical coverage of scaled limit sets.
    Coverage {
        #[command(flatten)]
        common: CommonArgs,
        /// Run schedules whose dominant exponent is outside (0, 1).
        #[arg(long)]
        allow_inadmissible_schedule: bool,
    },
    /// Exact-zero (model selection) frequencies.
    Select {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        allow_inadmissible_schedule: bool,
    },
    /// Error-norm quantiles under the candidate scalings.
    Rates {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        allow_inadmissible_schedule: bool,
    },
    /// Two-sample comparison against the limit-minimizer law.
    Dist {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        allow_inadmissible_schedule: bool,
    },
}

/// What a subcommand reports back to `main`.
pub(crate) enum Outcome {
    /// Everything ran and every invariant held.
    Clean,
    /// The run finished and wrote outputs, but an invariant failed
    /// (non-convergence, negative slack, failed replications).
    Degraded(String),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit { common } => fit::run(&common),
        Command::Mset {
            common,
            d,
            count,
            projection,
            ellipse_alpha,
        } => mset::run(&common, d, count, projection, ellipse_alpha),
        Command::Coverage {
            common,
            allow_inadmissible_schedule,
        } => experiment::run(&common, experiment::Kind::Coverage, allow_inadmissible_schedule),
        Command::Select {
            common,
            allow_inadmissible_schedule,
        } => experiment::run(&common, experiment::Kind::Select, allow_inadmissible_schedule),
        Command::Rates {
            common,
            allow_inadmissible_schedule,
        } => experiment::run(&common, experiment::Kind::Rates, allow_inadmissible_schedule),
        Command::Dist {
            common,
            allow_inadmissible_schedule,
        } => experiment::run(&common, experiment::Kind::Dist, allow_inadmissible_schedule),
    };
    match result {
        Ok(Outcome::Clean) => ExitCode::SUCCESS,
        Ok(Outcome::Degraded(why)) => {
            eprintln!("alcove: completed with violations: {why}");
            ExitCode::from(2)
        }
        Err(err) => {
            eprintln!("alcove: {err}");
            ExitCode::from(1)
        }
    }
}

pub(crate) fn configure_threads(threads: Option<usize>) -> Result<(), String> {
    if let Some(t) = threads {
        if t == 0 {
            return Err("--threads must be positive".into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| format!("thread pool: {e}"))?;
    }
    Ok(())
}
