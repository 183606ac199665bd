//! Report types and their CSV long format.
//!
//! Every report flattens to rows of
//! `experiment, n, beta_id, key, statistic, value, stderr`
//! where `key` is a set label, a coordinate index, or a scaling name,
//! depending on the experiment. Numbers are written with round-trip
//! formatting.

use serde::{Deserialize, Serialize};

/// Slack below this is counted as a violation of the deviation bound.
pub const SLACK_TOL: f64 = 1e-8;

/// One row of the long-format CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct LongRow {
    pub experiment: String,
    pub n: usize,
    pub beta_id: String,
    pub key: String,
    pub statistic: String,
    pub value: f64,
    pub stderr: Option<f64>,
}

/// Renders rows with the fixed header
/// `experiment,n,beta_id,key,statistic,value,stderr`.
pub fn rows_to_csv(rows: &[LongRow]) -> String {
    let mut out = String::from("experiment,n,beta_id,key,statistic,value,stderr\n");
    for r in rows {
        let stderr = r.stderr.map(|s| s.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.experiment, r.n, r.beta_id, r.key, r.statistic, r.value, stderr
        ));
    }
    out
}

/// Shared accounting carried by every report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunAccounting {
    /// Smallest deviation-bound slack seen across all replications.
    pub min_slack: f64,
    /// Replications whose slack fell below `-SLACK_TOL`.
    pub slack_violations: usize,
    /// Replications that errored (counted, never silently dropped).
    pub failed_replications: usize,
    /// First failure message, if any.
    pub first_failure: Option<String>,
}

impl Default for RunAccounting {
    fn default() -> Self {
        RunAccounting {
            min_slack: f64::INFINITY,
            slack_violations: 0,
            failed_replications: 0,
            first_failure: None,
        }
    }
}

impl RunAccounting {
    pub(crate) fn absorb_slack(&mut self, slack: f64) {
        self.min_slack = self.min_slack.min(slack);
        if slack < -SLACK_TOL {
            self.slack_violations += 1;
        }
    }

    pub(crate) fn absorb_failure(&mut self, message: &str) {
        if self.first_failure.is_none() {
            self.first_failure = Some(message.to_string());
        }
        self.failed_replications += 1;
    }

    /// True when no invariant was violated during the run.
    pub fn clean(&self) -> bool {
        self.slack_violations == 0
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverageCell {
    pub n: usize,
    pub beta_id: String,
    pub set: String,
    pub coverage: f64,
    pub stderr: f64,
    pub successes: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverageMinimum {
    pub n: usize,
    pub set: String,
    pub min_coverage: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverageReport {
    pub cells: Vec<CoverageCell>,
    pub minima: Vec<CoverageMinimum>,
    pub accounting: RunAccounting,
}

impl CoverageReport {
    pub fn long_rows(&self) -> Vec<LongRow> {
        let mut rows = Vec::new();
        for c in &self.cells {
            rows.push(LongRow {
                experiment: "coverage".into(),
                n: c.n,
                beta_id: c.beta_id.clone(),
                key: c.set.clone(),
                statistic: "coverage".into(),
                value: c.coverage,
                stderr: Some(c.stderr),
            });
        }
        for m in &self.minima {
            rows.push(LongRow {
                experiment: "coverage".into(),
                n: m.n,
                beta_id: "catalog_min".into(),
                key: m.set.clone(),
                statistic: "min_coverage".into(),
                value: m.min_coverage,
                stderr: None,
            });
        }
        rows
    }

    /// Minimum coverage for a given set label, ordered by n.
    pub fn minima_for(&self, set_label: &str) -> Vec<(usize, f64)> {
        self.minima
            .iter()
            .filter(|m| m.set == set_label)
            .map(|m| (m.n, m.min_coverage))
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionCell {
    pub n: usize,
    pub beta_id: String,
    pub coordinate: usize,
    pub zero_probability: f64,
    pub stderr: f64,
    pub successes: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionReport {
    pub cells: Vec<SelectionCell>,
    pub accounting: RunAccounting,
}

impl SelectionReport {
    pub fn long_rows(&self) -> Vec<LongRow> {
        self.cells
            .iter()
            .map(|c| LongRow {
                experiment: "select".into(),
                n: c.n,
                beta_id: c.beta_id.clone(),
                key: c.coordinate.to_string(),
                statistic: "zero_probability".into(),
                value: c.zero_probability,
                stderr: Some(c.stderr),
            })
            .collect()
    }

    /// Zero frequencies for one beta id and coordinate, ordered by n.
    pub fn zero_curve(&self, beta_id: &str, coordinate: usize) -> Vec<(usize, f64)> {
        self.cells
            .iter()
            .filter(|c| c.beta_id == beta_id && c.coordinate == coordinate)
            .map(|c| (c.n, c.zero_probability))
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateCell {
    pub n: usize,
    pub beta_id: String,
    /// Scaling name: `b_n`, `sqrt_n`, or `a_n`.
    pub scaling: String,
    pub quantile: f64,
    pub value: f64,
    pub successes: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateReport {
    pub cells: Vec<RateCell>,
    pub accounting: RunAccounting,
}

impl RateReport {
    pub fn long_rows(&self) -> Vec<LongRow> {
        self.cells
            .iter()
            .map(|c| LongRow {
                experiment: "rates".into(),
                n: c.n,
                beta_id: c.beta_id.clone(),
                key: c.scaling.clone(),
                statistic: format!("quantile_{}", c.quantile),
                value: c.value,
                stderr: None,
            })
            .collect()
    }

    /// Values of one scaling at one quantile, ordered by n.
    pub fn curve(&self, beta_id: &str, scaling: &str, quantile: f64) -> Vec<(usize, f64)> {
        self.cells
            .iter()
            .filter(|c| c.beta_id == beta_id && c.scaling == scaling && c.quantile == quantile)
            .map(|c| (c.n, c.value))
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistCell {
    pub n: usize,
    pub coordinate: usize,
    /// Two-sample Kolmogorov-Smirnov distance between scaled empirical
    /// errors and limit-minimizer draws.
    pub ks: f64,
    /// Interquartile range of the empirical sample.
    pub empirical_iqr: f64,
    pub empirical_samples: usize,
    pub limit_samples: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistReport {
    pub beta_id: String,
    pub cells: Vec<DistCell>,
    pub accounting: RunAccounting,
}

impl DistReport {
    pub fn long_rows(&self) -> Vec<LongRow> {
        let mut rows = Vec::new();
        for c in &self.cells {
            rows.push(LongRow {
                experiment: "dist".into(),
                n: c.n,
                beta_id: self.beta_id.clone(),
                key: c.coordinate.to_string(),
                statistic: "ks".into(),
                value: c.ks,
                stderr: None,
            });
            rows.push(LongRow {
                experiment: "dist".into(),
                n: c.n,
                beta_id: self.beta_id.clone(),
                key: c.coordinate.to_string(),
                statistic: "empirical_iqr".into(),
                value: c.empirical_iqr,
                stderr: None,
            });
        }
        rows
    }

    /// KS distances for one coordinate, ordered by n.
    pub fn ks_curve(&self, coordinate: usize) -> Vec<(usize, f64)> {
        self.cells
            .iter()
            .filter(|c| c.coordinate == coordinate)
            .map(|c| (c.n, c.ks))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_fixed_header_and_roundtrip_numbers() {
        let rows = vec![LongRow {
            experiment: "coverage".into(),
            n: 500,
            beta_id: "null".into(),
            key: "scaled_1.21".into(),
            statistic: "coverage".into(),
            value: 0.1 + 0.2,
            stderr: Some(0.012),
        }];
        let csv = rows_to_csv(&rows);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "experiment,n,beta_id,key,statistic,value,stderr"
        );
        let row = lines.next().unwrap();
        assert!(row.contains("0.30000000000000004"), "round-trip format: {row}");
    }

    #[test]
    fn accounting_tracks_slack_and_failures() {
        let mut acc = RunAccounting::default();
        acc.absorb_slack(0.5);
        acc.absorb_slack(-1e-7);
        acc.absorb_failure("boom");
        acc.absorb_failure("boom 2");
        assert_eq!(acc.slack_violations, 1);
        assert_eq!(acc.failed_replications, 2);
        assert_eq!(acc.first_failure.as_deref(), Some("boom"));
        assert!(!acc.clean());
    }
}
