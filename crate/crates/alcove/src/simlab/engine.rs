//! Replication runner shared by all experiments.
//!
//! Replications are independent tasks keyed by (tag, n, beta index, rep
//! index); each draws from its own stream, so results are identical no
//! matter how the work is scheduled. Reductions over replications preserve
//! replication order.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::linmodel::{containment_slack, fit_with_pilot, SolverOptions, TuningVector};
use crate::rng::{stream, StreamKey};

use super::config::ExperimentConfig;
use super::design::DesignData;

/// One successful replication.
pub(crate) struct RepFit {
    pub beta_al: DVector<f64>,
    /// Smallest componentwise slack of the deviation bound
    /// `z_j (X'X z)_j <= lambda_j`, `z = beta_al - beta_ls`.
    pub min_slack: f64,
}

/// Runs all replications of one (n, beta) cell. The output vector is in
/// replication order with per-replication errors kept in place.
pub(crate) fn simulate_reps(
    tag: &str,
    config: &ExperimentConfig,
    dd: &DesignData,
    beta: &DVector<f64>,
    tuning: &TuningVector,
    beta_index: usize,
) -> Vec<Result<RepFit, String>> {
    let n = dd.n;
    (0..config.replications)
        .into_par_iter()
        .map(|rep| {
            let key = StreamKey {
                tag,
                n: n as u64,
                unit: beta_index as u64,
                rep: rep as u64,
            };
            let mut rng = stream(config.seed, &key);
            let mut eps = DVector::zeros(n);
            for i in 0..n {
                eps[i] = config.noise.sample(&mut rng, config.sigma);
            }
            // Sufficient statistics only: X'y = X'X beta + X'eps.
            let xty = &dd.gram * beta + dd.x.tr_mul(&eps);
            let beta_ls = dd.chol.solve(&xty);
            let fit = fit_with_pilot(&dd.gram, &xty, &beta_ls, tuning, &SolverOptions::default())
                .map_err(|e| format!("n = {n}, rep = {rep}: {e}"))?;
            let min_slack = containment_slack(&dd.gram, tuning, &fit).min();
            Ok(RepFit {
                beta_al: fit.beta_al,
                min_slack,
            })
        })
        .collect()
}
