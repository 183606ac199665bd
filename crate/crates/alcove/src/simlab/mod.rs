//! Seeded Monte Carlo lab checking the finite-sample estimator against its
//! limit predictions: confidence-set coverage, model selection, error
//! rates, and distributional convergence.

mod config;
mod design;
mod engine;
mod experiments;
mod report;
pub mod stats;

pub use config::{BetaKind, BetaSequence, ExperimentConfig, NoiseLaw, SetSpec};
pub use design::{cosine_design, orthogonal_cosine_design, DesignData};
pub use experiments::{
    coverage_sweep, distribution_check, generate_instance, model_selection_probs, rate_experiment,
};
pub use report::{
    rows_to_csv, CoverageCell, CoverageMinimum, CoverageReport, DistCell, DistReport, LongRow,
    RateCell, RateReport, RunAccounting, SelectionCell, SelectionReport, SLACK_TOL,
};
