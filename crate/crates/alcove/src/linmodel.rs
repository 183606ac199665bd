//! Adaptive lasso with componentwise tuning.
//!
//! The estimator minimizes
//!
//! ```text
//! ||y - X b||^2 + 2 * sum_j lambda_j * |b_j| / |beta_ls_j|
//! ```
//!
//! where `beta_ls` is the least-squares fit on the same data and each
//! coordinate carries its own nonnegative penalty level `lambda_j`.
//! Coordinates with `lambda_j = 0` are left unpenalized, which is what makes
//! partial tuning possible: the fit can shrink some coordinates to exact
//! zero while treating others as plain least squares.
//!
//! # Algorithm
//!
//! Cyclic coordinate descent on the Gram form of the objective. Each update
//! is an exact univariate minimization (soft threshold), so zeros are stored
//! exactly rather than as small floats. The solver stops when the
//! Karush-Kuhn-Tucker residual of the candidate drops below a tolerance
//! scaled to the data.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fixed design matrix plus response, validated on construction.
#[derive(Debug, Clone)]
pub struct RegressionProblem {
    x: DMatrix<f64>,
    y: DVector<f64>,
}

impl RegressionProblem {
    /// Requires `n >= p >= 1`, finite entries and full column rank
    /// (the Gram matrix must admit a Cholesky factorization).
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        let (n, p) = x.shape();
        if p == 0 || n < p {
            return Err(Error::invalid(format!(
                "need n >= p >= 1, got n = {n}, p = {p}"
            )));
        }
        if y.len() != n {
            return Err(Error::invalid(format!(
                "response length {} does not match {} rows",
                y.len(),
                n
            )));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("design and response must be finite"));
        }
        let gram = x.tr_mul(&x);
        if Cholesky::new(gram).is_none() {
            return Err(Error::invalid("design matrix is rank deficient"));
        }
        Ok(RegressionProblem { x, y })
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Gram matrix `X'X`.
    pub fn gram(&self) -> DMatrix<f64> {
        self.x.tr_mul(&self.x)
    }

    /// Moment vector `X'y`.
    pub fn xty(&self) -> DVector<f64> {
        self.x.tr_mul(&self.y)
    }
}

/// Componentwise penalty levels; entries are finite and nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct TuningVector(DVector<f64>);

impl TuningVector {
    pub fn new(lambda: DVector<f64>) -> Result<Self> {
        if lambda.iter().any(|&l| !l.is_finite() || l < 0.0) {
            return Err(Error::invalid(
                "penalty levels must be finite and nonnegative",
            ));
        }
        Ok(TuningVector(lambda))
    }

    pub fn zeros(p: usize) -> Self {
        TuningVector(DVector::zeros(p))
    }

    pub fn from_slice(lambda: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(lambda))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.len() == 0
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    /// All levels zero, i.e. the fit degenerates to least squares.
    pub fn is_null(&self) -> bool {
        self.0.iter().all(|&l| l == 0.0)
    }

    /// Multiplies every level by `scale >= 0`.
    pub fn scaled(&self, scale: f64) -> Result<Self> {
        if !scale.is_finite() || scale < 0.0 {
            return Err(Error::invalid("scale must be finite and nonnegative"));
        }
        Ok(TuningVector(&self.0 * scale))
    }
}

/// Knobs for the coordinate-descent solver.
#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Hard cap on full coordinate sweeps.
    pub max_sweeps: usize,
    /// The stopping tolerance is `tolerance_scale * (1 + max_j |X'y|_j)`.
    pub tolerance_scale: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_sweeps: 10_000,
            tolerance_scale: 1e-10,
        }
    }
}

/// Output of one adaptive-lasso fit.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub beta_al: DVector<f64>,
    pub beta_ls: DVector<f64>,
    /// Stationarity residual of `beta_al` (see [`kkt_residual`]).
    pub kkt_residual: f64,
    pub sweeps: usize,
}

fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Least-squares fit via Cholesky on the normal equations.
pub fn least_squares(problem: &RegressionProblem) -> DVector<f64> {
    let chol = Cholesky::new(problem.gram()).expect("validated at construction");
    chol.solve(&problem.xty())
}

/// Adaptive-lasso fit for a validated problem.
pub fn fit_adaptive_lasso(
    problem: &RegressionProblem,
    tuning: &TuningVector,
    options: &SolverOptions,
) -> Result<FitResult> {
    if tuning.len() != problem.p() {
        return Err(Error::invalid(format!(
            "tuning length {} does not match p = {}",
            tuning.len(),
            problem.p()
        )));
    }
    let gram = problem.gram();
    let xty = problem.xty();
    fit_from_sufficient_stats(&gram, &xty, tuning, options)
}

/// Same fit from the sufficient statistics `(X'X, X'y)` alone.
///
/// Monte Carlo loops use this entry point so the response never has to be
/// materialized once `X'e` has been accumulated.
pub fn fit_from_sufficient_stats(
    gram: &DMatrix<f64>,
    xty: &DVector<f64>,
    tuning: &TuningVector,
    options: &SolverOptions,
) -> Result<FitResult> {
    let p = gram.nrows();
    if gram.ncols() != p || xty.len() != p || tuning.len() != p {
        return Err(Error::invalid("dimension mismatch in sufficient statistics"));
    }
    let chol = Cholesky::new(gram.clone())
        .ok_or_else(|| Error::invalid("Gram matrix is not positive definite"))?;
    let beta_ls = chol.solve(xty);
    fit_with_pilot(gram, xty, &beta_ls, tuning, options)
}

pub(crate) fn fit_with_pilot(
    gram: &DMatrix<f64>,
    xty: &DVector<f64>,
    beta_ls: &DVector<f64>,
    tuning: &TuningVector,
    options: &SolverOptions,
) -> Result<FitResult> {
    let p = gram.nrows();
    let lambda = tuning.as_vector();

    if tuning.is_null() {
        // The unpenalized objective is exactly least squares.
        return Ok(FitResult {
            beta_al: beta_ls.clone(),
            beta_ls: beta_ls.clone(),
            kkt_residual: kkt_residual_gram(gram, tuning, beta_ls, beta_ls),
            sweeps: 0,
        });
    }

    let pilot_floor = 1e-12 * (1.0 + beta_ls.amax());
    let mut weights = DVector::zeros(p);
    for j in 0..p {
        if lambda[j] > 0.0 {
            let m = beta_ls[j].abs();
            if m <= pilot_floor {
                return Err(Error::DegeneratePilot {
                    index: j,
                    value: m,
                    threshold: pilot_floor,
                });
            }
            weights[j] = lambda[j] / m;
        }
    }

    let tolerance = options.tolerance_scale * (1.0 + xty.amax());
    let mut beta = beta_ls.clone();
    let mut residual = f64::INFINITY;
    for sweep in 1..=options.max_sweeps {
        for j in 0..p {
            // r_j = (X'y)_j - sum_{k != j} G_jk beta_k
            let mut r = xty[j];
            for k in 0..p {
                if k != j {
                    r -= gram[(j, k)] * beta[k];
                }
            }
            beta[j] = soft_threshold(r, weights[j]) / gram[(j, j)];
        }
        residual = kkt_residual_gram(gram, tuning, beta_ls, &beta);
        if residual <= tolerance {
            return Ok(FitResult {
                beta_al: beta,
                beta_ls: beta_ls.clone(),
                kkt_residual: residual,
                sweeps: sweep,
            });
        }
    }
    Err(Error::NonConvergence {
        sweeps: options.max_sweeps,
        residual,
        tolerance,
    })
}

/// Stationarity residual of `candidate` for the penalized objective.
///
/// With `g = X'X (candidate - beta_ls)`, a coordinate contributes
/// `|g_j + lambda_j * sign(candidate_j) / |beta_ls_j||` when `candidate_j`
/// is nonzero and `max(0, |g_j| - lambda_j / |beta_ls_j|)` when it is zero.
/// The residual is the maximum contribution; it is zero exactly at the
/// minimizer.
pub fn kkt_residual(
    problem: &RegressionProblem,
    tuning: &TuningVector,
    beta_ls: &DVector<f64>,
    candidate: &DVector<f64>,
) -> f64 {
    kkt_residual_gram(&problem.gram(), tuning, beta_ls, candidate)
}

/// [`kkt_residual`] on precomputed sufficient statistics.
pub fn kkt_residual_gram(
    gram: &DMatrix<f64>,
    tuning: &TuningVector,
    beta_ls: &DVector<f64>,
    candidate: &DVector<f64>,
) -> f64 {
    let lambda = tuning.as_vector();
    let g = gram * (candidate - beta_ls);
    let mut worst: f64 = 0.0;
    for j in 0..candidate.len() {
        let weight = if lambda[j] > 0.0 {
            lambda[j] / beta_ls[j].abs()
        } else {
            0.0
        };
        let contribution = if candidate[j] != 0.0 {
            (g[j] + weight * candidate[j].signum()).abs()
        } else {
            (g[j].abs() - weight).max(0.0)
        };
        worst = worst.max(contribution);
    }
    worst
}

/// Componentwise slack of the deviation bound linking the fit to least
/// squares.
///
/// With `z = beta_al - beta_ls`, every coordinate satisfies
/// `z_j * (X'X z)_j <= lambda_j`, so the returned values
/// `lambda_j - z_j * (X'X z)_j` are nonnegative up to solver tolerance.
/// When every `lambda_j` is zero the deviation is zero and the slack is
/// exactly zero.
pub fn containment_slack(
    gram: &DMatrix<f64>,
    tuning: &TuningVector,
    fit: &FitResult,
) -> DVector<f64> {
    let z = &fit.beta_al - &fit.beta_ls;
    let gz = gram * &z;
    let lambda = tuning.as_vector();
    DVector::from_fn(z.len(), |j, _| lambda[j] - z[j] * gz[j])
}

/// One entry of a penalty path.
#[derive(Debug, Clone)]
pub struct PathPoint {
    pub scale: f64,
    pub beta_al: DVector<f64>,
}

/// Solves the fit along `scale * lambda` for every scale in `scales`.
///
/// Scales must be finite and nonnegative; the solver warm-starts each point
/// from the previous solution.
pub fn coefficient_path(
    problem: &RegressionProblem,
    tuning: &TuningVector,
    scales: &[f64],
    options: &SolverOptions,
) -> Result<Vec<PathPoint>> {
    let gram = problem.gram();
    let xty = problem.xty();
    let chol: Cholesky<f64, Dyn> =
        Cholesky::new(gram.clone()).ok_or_else(|| Error::invalid("rank deficient design"))?;
    let beta_ls = chol.solve(&xty);
    let mut out = Vec::with_capacity(scales.len());
    for &s in scales {
        let scaled = tuning.scaled(s)?;
        let fit = fit_with_pilot(&gram, &xty, &beta_ls, &scaled, options)?;
        out.push(PathPoint {
            scale: s,
            beta_al: fit.beta_al,
        });
    }
    Ok(out)
}

/// Wire format for a fit problem: row-major design, response, penalties.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemDocument {
    #[serde(rename = "X")]
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl ProblemDocument {
    pub fn to_problem(&self) -> Result<(RegressionProblem, TuningVector)> {
        let n = self.x.len();
        if n == 0 {
            return Err(Error::invalid("design matrix has no rows"));
        }
        let p = self.x[0].len();
        if self.x.iter().any(|row| row.len() != p) {
            return Err(Error::invalid("design matrix rows have unequal lengths"));
        }
        let x = DMatrix::from_fn(n, p, |i, j| self.x[i][j]);
        let y = DVector::from_column_slice(&self.y);
        let problem = RegressionProblem::new(x, y)?;
        let tuning = TuningVector::from_slice(&self.lambda)?;
        if tuning.len() != p {
            return Err(Error::invalid(format!(
                "lambda length {} does not match p = {p}",
                tuning.len()
            )));
        }
        Ok((problem, tuning))
    }
}

/// Wire format for a completed fit: the problem plus both estimates and the
/// final stationarity residual.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitDocument {
    #[serde(rename = "X")]
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub lambda: Vec<f64>,
    pub beta_al: Vec<f64>,
    pub beta_ls: Vec<f64>,
    pub kkt_residual: f64,
}

impl FitDocument {
    pub fn new(problem: &RegressionProblem, tuning: &TuningVector, fit: &FitResult) -> Self {
        let x = (0..problem.n())
            .map(|i| (0..problem.p()).map(|j| problem.x()[(i, j)]).collect())
            .collect();
        FitDocument {
            x,
            y: problem.y().iter().copied().collect(),
            lambda: tuning.as_vector().iter().copied().collect(),
            beta_al: fit.beta_al.iter().copied().collect(),
            beta_ls: fit.beta_ls.iter().copied().collect(),
            kkt_residual: fit.kkt_residual,
        }
    }
}
