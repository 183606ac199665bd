//! Experiment configuration: JSON-facing types and validation.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{regime_from_schedule, ExtReal, Regime, TuningSchedule};
use crate::error::{Error, Result};

/// Noise law for the regression errors; every law has mean zero and
/// variance `sigma^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseLaw {
    #[default]
    Gaussian,
    /// `+sigma` or `-sigma` with equal probability.
    Rademacher,
    /// Uniform on `[-sigma*sqrt(3), sigma*sqrt(3)]`.
    Uniform,
}

impl NoiseLaw {
    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R, sigma: f64) -> f64 {
        match self {
            NoiseLaw::Gaussian => sigma * rng.sample::<f64, _>(rand_distr::StandardNormal),
            NoiseLaw::Rademacher => {
                if rng.gen::<bool>() {
                    sigma
                } else {
                    -sigma
                }
            }
            NoiseLaw::Uniform => {
                let half = sigma * 3.0_f64.sqrt();
                rng.gen_range(-half..half)
            }
        }
    }
}

/// How the true coefficient vector depends on the sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaKind {
    /// Constant vector, independent of `n`.
    Fixed { values: Vec<f64> },
    /// Localized sequence `beta_nj = phi_j * lambda_j(n) / (sqrt(n) * sqrt(lambda*(n)))`.
    ///
    /// Infinite entries are realized by replacing `phi_j` with
    /// `sign * log(n)`, a diverging surrogate. On unpenalized coordinates
    /// (`lambda_j = 0`) finite entries must be zero; infinite entries map to
    /// `sign * log(n) / sqrt(n)`.
    PhiIndexed { phi: Vec<ExtReal> },
    /// Worst-case ray `beta_n = coefficient * sqrt(lambda*(n)/n) * direction`.
    ScaledDirection {
        coefficient: f64,
        direction: Vec<f64>,
    },
}

/// A named coefficient sequence in the catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaSequence {
    pub id: String,
    pub kind: BetaKind,
}

impl BetaSequence {
    /// The coefficient vector at sample size `n`.
    pub fn resolve(&self, schedule: &TuningSchedule, n: usize) -> Result<DVector<f64>> {
        let p = schedule.len();
        let nf = n as f64;
        match &self.kind {
            BetaKind::Fixed { values } => {
                if values.len() != p {
                    return Err(Error::invalid(format!(
                        "beta sequence {} has wrong length",
                        self.id
                    )));
                }
                Ok(DVector::from_column_slice(values))
            }
            BetaKind::PhiIndexed { phi } => {
                if phi.len() != p {
                    return Err(Error::invalid(format!(
                        "beta sequence {} has wrong length",
                        self.id
                    )));
                }
                let levels = schedule.levels(n);
                let lambda_star = levels.as_vector().amax();
                if lambda_star <= 0.0 {
                    return Err(Error::invalid(
                        "phi-indexed sequences need a positive dominant level",
                    ));
                }
                let mut beta = DVector::zeros(p);
                for j in 0..p {
                    let factor = levels.as_vector()[j] / (nf.sqrt() * lambda_star.sqrt());
                    beta[j] = match phi[j] {
                        ExtReal::Finite(f) => f * factor,
                        ExtReal::PosInf | ExtReal::NegInf => {
                            let sign = if phi[j] == ExtReal::PosInf { 1.0 } else { -1.0 };
                            if levels.as_vector()[j] > 0.0 {
                                sign * nf.ln() * factor
                            } else {
                                sign * nf.ln() / nf.sqrt()
                            }
                        }
                    };
                }
                Ok(beta)
            }
            BetaKind::ScaledDirection {
                coefficient,
                direction,
            } => {
                if direction.len() != p {
                    return Err(Error::invalid(format!(
                        "beta sequence {} has wrong length",
                        self.id
                    )));
                }
                let lambda_star = schedule.max_level(n);
                if lambda_star <= 0.0 {
                    return Err(Error::invalid(
                        "scaled-direction sequences need a positive dominant level",
                    ));
                }
                let scale = coefficient * (lambda_star / nf).sqrt();
                Ok(DVector::from_column_slice(direction) * scale)
            }
        }
    }

    /// `sqrt(n / lambda*) * beta_n`, evaluated without the cancelling
    /// square roots.
    ///
    /// Distributional comparisons center the scaled estimator at this
    /// vector. Algebraically it equals `resolve` times `sqrt(n/lambda*)`,
    /// but evaluating that product in floating point displaces the exact
    /// zero atom of the estimator by an ulp, which is enough to decouple
    /// it from the limit minimizer's kink atom. Direct evaluation makes
    /// the atom locations bitwise equal: on the dominant coordinate the
    /// phi-indexed center is `phi_j * (lambda_j / lambda*) = phi_j * 1.0`
    /// and a scaled-direction center is `coefficient * direction` exactly.
    pub fn scaled_center(&self, schedule: &TuningSchedule, n: usize) -> Result<DVector<f64>> {
        let p = schedule.len();
        let nf = n as f64;
        match &self.kind {
            BetaKind::Fixed { .. } => {
                let beta = self.resolve(schedule, n)?;
                let lambda_star = schedule.max_level(n);
                if lambda_star <= 0.0 {
                    return Err(Error::invalid(
                        "scaled centers need a positive dominant level",
                    ));
                }
                Ok(beta * (nf / lambda_star).sqrt())
            }
            BetaKind::PhiIndexed { phi } => {
                if phi.len() != p {
                    return Err(Error::invalid(format!(
                        "beta sequence {} has wrong length",
                        self.id
                    )));
                }
                let levels = schedule.levels(n);
                let lambda_star = levels.as_vector().amax();
                if lambda_star <= 0.0 {
                    return Err(Error::invalid(
                        "phi-indexed sequences need a positive dominant level",
                    ));
                }
                let mut center = DVector::zeros(p);
                for j in 0..p {
                    let ratio = levels.as_vector()[j] / lambda_star;
                    center[j] = match phi[j] {
                        ExtReal::Finite(f) => f * ratio,
                        ExtReal::PosInf | ExtReal::NegInf => {
                            let sign = if phi[j] == ExtReal::PosInf { 1.0 } else { -1.0 };
                            if levels.as_vector()[j] > 0.0 {
                                sign * nf.ln() * ratio
                            } else {
                                sign * nf.ln() / lambda_star.sqrt()
                            }
                        }
                    };
                }
                Ok(center)
            }
            BetaKind::ScaledDirection {
                coefficient,
                direction,
            } => {
                if direction.len() != p {
                    return Err(Error::invalid(format!(
                        "beta sequence {} has wrong length",
                        self.id
                    )));
                }
                Ok(DVector::from_column_slice(direction) * *coefficient)
            }
        }
    }
}

/// Which set the coverage experiment evaluates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetSpec {
    /// The attainable set with weights multiplied by `d`
    /// (geometrically `sqrt(d)` times the base set).
    Scaled { d: f64 },
    /// Open neighborhood: membership, or distance below `epsilon` to a
    /// dense boundary sample of the base set.
    Neighborhood { epsilon: f64 },
    /// The whole space; coverage is 1 by construction.
    Full,
}

impl SetSpec {
    pub fn label(&self) -> String {
        match self {
            SetSpec::Scaled { d } => format!("scaled_{d}"),
            SetSpec::Neighborhood { epsilon } => format!("neighborhood_{epsilon}"),
            SetSpec::Full => "full".to_string(),
        }
    }
}

/// Full description of a Monte Carlo experiment.
///
/// `sets` is only read by coverage runs (empty means the default inflated
/// set with `d = 1.21`); `phi` is required by distribution runs. Setting
/// `allow_inadmissible_schedule` bypasses the admissibility check so that
/// degenerate schedules (all zero, or dominant exponent at or above 1) can
/// be simulated deliberately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    pub sigma: f64,
    #[serde(default)]
    pub noise: NoiseLaw,
    pub schedule: TuningSchedule,
    pub sample_sizes: Vec<usize>,
    pub replications: usize,
    pub seed: u64,
    pub beta_sequences: Vec<BetaSequence>,
    #[serde(default)]
    pub sets: Vec<SetSpec>,
    #[serde(default)]
    pub phi: Option<Vec<ExtReal>>,
    #[serde(default)]
    pub allow_inadmissible_schedule: bool,
}

impl ExperimentConfig {
    pub fn p(&self) -> usize {
        self.c.len()
    }

    pub fn c_matrix(&self) -> Result<DMatrix<f64>> {
        let p = self.p();
        if p == 0 || self.c.iter().any(|row| row.len() != p) {
            return Err(Error::invalid("C must be square and nonempty"));
        }
        Ok(DMatrix::from_fn(p, p, |i, j| self.c[i][j]))
    }

    /// The limit regime of the schedule; requires admissibility.
    pub fn regime(&self) -> Result<Regime> {
        regime_from_schedule(&self.schedule, self.c_matrix()?, self.sigma)
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.p();
        let c = self.c_matrix()?;
        if nalgebra::Cholesky::new(c).is_none() {
            return Err(Error::invalid("C must be positive definite"));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::invalid("sigma must be positive"));
        }
        if self.schedule.len() != p {
            return Err(Error::invalid("schedule length must match C's dimension"));
        }
        if !self.allow_inadmissible_schedule && !self.schedule.is_admissible() {
            return Err(Error::invalid(
                "schedule is inadmissible (dominant exponent must lie in (0,1)); \
                 set allow_inadmissible_schedule to simulate it anyway",
            ));
        }
        if self.sample_sizes.is_empty() {
            return Err(Error::invalid("sample_sizes must be nonempty"));
        }
        if self.sample_sizes.iter().any(|&n| n <= p) {
            return Err(Error::invalid("every sample size must exceed p"));
        }
        if self.replications == 0 {
            return Err(Error::invalid("replications must be positive"));
        }
        if self.beta_sequences.is_empty() {
            return Err(Error::invalid("beta_sequences must be nonempty"));
        }
        let mut seen = std::collections::HashSet::new();
        for b in &self.beta_sequences {
            if !seen.insert(&b.id) {
                return Err(Error::invalid(format!("duplicate beta id {:?}", b.id)));
            }
            // Length and realizability checks at the smallest sample size.
            let n0 = *self.sample_sizes.iter().min().expect("nonempty");
            b.resolve(&self.schedule, n0)?;
            if let BetaKind::PhiIndexed { phi } = &b.kind {
                for (j, &ph) in phi.iter().enumerate() {
                    let untuned = self.schedule.coefficients[j] == 0.0;
                    if untuned {
                        if let ExtReal::Finite(f) = ph {
                            if f != 0.0 {
                                return Err(Error::invalid(format!(
                                    "beta sequence {:?}: finite nonzero phi[{j}] \
                                     cannot be realized on an unpenalized coordinate",
                                    b.id
                                )));
                            }
                        }
                    }
                }
            }
        }
        for s in &self.sets {
            match s {
                SetSpec::Scaled { d } => {
                    if !(d.is_finite() && *d > 0.0) {
                        return Err(Error::invalid("set scale d must be positive"));
                    }
                }
                SetSpec::Neighborhood { epsilon } => {
                    if !(epsilon.is_finite() && *epsilon > 0.0) {
                        return Err(Error::invalid("neighborhood epsilon must be positive"));
                    }
                }
                SetSpec::Full => {}
            }
        }
        if let Some(phi) = &self.phi {
            if phi.len() != p {
                return Err(Error::invalid("phi length must match C's dimension"));
            }
        }
        Ok(())
    }
}
