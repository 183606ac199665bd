//! Monte Carlo subcommands: coverage, selection, rates and distribution.

use serde::Serialize;
use serde_json::Value;

use alcove::simlab::{
    coverage_sweep, distribution_check, model_selection_probs, rate_experiment, rows_to_csv,
    ExperimentConfig, RunAccounting,
};

use crate::manifest;
use crate::{CommonArgs, Outcome};

#[derive(Debug, Clone, Copy)]
pub enum Kind {
    Coverage,
    Select,
    Rates,
    Dist,
}

impl Kind {
    fn tag(self) -> &'static str {
        match self {
            Kind::Coverage => "coverage",
            Kind::Select => "select",
            Kind::Rates => "rates",
            Kind::Dist => "dist",
        }
    }
}

#[derive(Debug, Serialize)]
struct Summary {
    experiment: &'static str,
    seed: u64,
    cells: usize,
    accounting: RunAccounting,
}

pub fn run(
    common: &CommonArgs,
    kind: Kind,
    allow_inadmissible_schedule: bool,
) -> Result<Outcome, String> {
    crate::configure_threads(common.threads)?;
    let (text, hash) = manifest::read_config(&common.config)?;
    let mut config: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| format!("experiment config: {e}"))?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    config.allow_inadmissible_schedule |= allow_inadmissible_schedule;
    config.validate().map_err(|e| e.to_string())?;

    let (rows, full, cells, accounting) = match kind {
        Kind::Coverage => {
            let report = coverage_sweep(&config).map_err(|e| e.to_string())?;
            (
                report.long_rows(),
                to_value(&report)?,
                report.cells.len(),
                report.accounting,
            )
        }
        Kind::Select => {
            let report = model_selection_probs(&config).map_err(|e| e.to_string())?;
            (
                report.long_rows(),
                to_value(&report)?,
                report.cells.len(),
                report.accounting,
            )
        }
        Kind::Rates => {
            let report = rate_experiment(&config).map_err(|e| e.to_string())?;
            (
                report.long_rows(),
                to_value(&report)?,
                report.cells.len(),
                report.accounting,
            )
        }
        Kind::Dist => {
            let report = distribution_check(&config).map_err(|e| e.to_string())?;
            (
                report.long_rows(),
                to_value(&report)?,
                report.cells.len(),
                report.accounting,
            )
        }
    };

    manifest::prepare_out_dir(&common.out)?;
    let mut outputs = Vec::new();
    if common.format == "json" {
        let text = serde_json::to_string_pretty(&full).expect("report serializes");
        manifest::write_output(&common.out, "report.json", &text)?;
        outputs.push("report.json".into());
    } else {
        manifest::write_output(&common.out, "report.csv", &rows_to_csv(&rows))?;
        outputs.push("report.csv".into());
    }
    let summary = Summary {
        experiment: kind.tag(),
        seed: config.seed,
        cells,
        accounting: accounting.clone(),
    };
    let summary_text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    manifest::write_output(&common.out, "summary.json", &summary_text)?;
    outputs.push("summary.json".into());
    manifest::write_manifest(&common.out, hash, Some(config.seed), outputs)?;

    if !accounting.clean() {
        return Ok(Outcome::Degraded(format!(
            "{} replication(s) violated the deviation bound (min slack {:.3e})",
            accounting.slack_violations, accounting.min_slack
        )));
    }
    if accounting.failed_replications > 0 {
        let first = accounting.first_failure.as_deref().unwrap_or("unknown");
        return Ok(Outcome::Degraded(format!(
            "{} replication(s) failed; first: {first}",
            accounting.failed_replications
        )));
    }
    Ok(Outcome::Clean)
}

fn to_value<T: Serialize>(report: &T) -> Result<Value, String> {
    serde_json::to_value(report).map_err(|e| format!("report: {e}"))
}
