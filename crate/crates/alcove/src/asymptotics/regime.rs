//! Tuning regimes: the limit data extracted from a penalty schedule.
//!
//! A schedule `lambda_j(n) = c_j * n^(g_j)` determines two limiting vectors.
//! With `lambda*(n) = max_j lambda_j(n)`,
//!
//! * `lambda0_j = lim lambda_j / lambda*` in `[0, 1]`, and
//! * `psi_j = lim sqrt(lambda*) / lambda_j` in `[0, inf]`.
//!
//! `lambda0` records which coordinates carry the dominant penalty weight;
//! `psi` separates heavily tuned coordinates (`psi_j = 0`) from lightly or
//! un-tuned ones (`psi_j = inf`), with a finite positive value exactly at
//! the knife-edge growth rate. Together with the moment limit `C` of
//! `X'X / n` and the noise level `sigma`, these drive every limit object in
//! this crate.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, StreamKey};

use super::ext_real::ExtReal;

/// Exponent comparisons in schedule limits tolerate this much slop, so
/// decimal exponents entered in configs (0.35 vs 0.7/2) compare as intended.
const EXPONENT_EPS: f64 = 1e-12;

/// Symmetry check tolerance for moment matrices, relative to the largest
/// entry.
const SYMMETRY_EPS: f64 = 1e-9;

/// The dominant normalized level must equal one to within this.
const LAMBDA0_EPS: f64 = 1e-12;

/// Power-law penalty schedule `lambda_j(n) = c_j * n^(g_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningSchedule {
    /// Nonnegative coefficients `c_j`; a zero coefficient leaves the
    /// coordinate unpenalized at every sample size.
    pub coefficients: Vec<f64>,
    /// Exponents `g_j`; ignored where the coefficient is zero.
    pub exponents: Vec<f64>,
}

impl TuningSchedule {
    pub fn new(coefficients: Vec<f64>, exponents: Vec<f64>) -> Result<Self> {
        if coefficients.len() != exponents.len() || coefficients.is_empty() {
            return Err(Error::invalid(
                "schedule needs equally many coefficients and exponents, at least one",
            ));
        }
        if coefficients.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::invalid("schedule coefficients must be >= 0"));
        }
        if exponents.iter().any(|g| !g.is_finite()) {
            return Err(Error::invalid("schedule exponents must be finite"));
        }
        Ok(TuningSchedule {
            coefficients,
            exponents,
        })
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// Penalty levels at sample size `n`.
    pub fn levels(&self, n: usize) -> crate::linmodel::TuningVector {
        let nf = n as f64;
        let v = DVector::from_fn(self.len(), |j, _| {
            self.coefficients[j] * nf.powf(self.exponents[j])
        });
        crate::linmodel::TuningVector::new(v).expect("levels of a valid schedule are finite")
    }

    /// `lambda*(n)`, the largest level at sample size `n`.
    pub fn max_level(&self, n: usize) -> f64 {
        self.levels(n).as_vector().amax()
    }

    /// Dominant exponent among penalized coordinates, if any is penalized.
    pub fn dominant_exponent(&self) -> Option<f64> {
        self.coefficients
            .iter()
            .zip(&self.exponents)
            .filter(|(c, _)| **c > 0.0)
            .map(|(_, g)| *g)
            .fold(None, |acc: Option<f64>, g| {
                Some(acc.map_or(g, |a| a.max(g)))
            })
    }

    /// A schedule is admissible when `lambda* -> inf` and `lambda*/n -> 0`,
    /// i.e. the dominant exponent lies strictly between 0 and 1.
    pub fn is_admissible(&self) -> bool {
        match self.dominant_exponent() {
            Some(g) => g > 0.0 && g < 1.0,
            None => false,
        }
    }
}

/// A draw of the limiting Gaussian shift `Z ~ N(0, sigma^2 C^{-1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseDraw {
    pub z: DVector<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RegimeDoc {
    #[serde(rename = "C")]
    c: Vec<Vec<f64>>,
    lambda0: Vec<f64>,
    psi: Vec<ExtReal>,
    sigma: f64,
}

impl From<Regime> for RegimeDoc {
    fn from(r: Regime) -> Self {
        let p = r.p();
        RegimeDoc {
            c: (0..p)
                .map(|i| (0..p).map(|j| r.c[(i, j)]).collect())
                .collect(),
            lambda0: r.lambda0.iter().copied().collect(),
            psi: r.psi.clone(),
            sigma: r.sigma,
        }
    }
}

impl TryFrom<RegimeDoc> for Regime {
    type Error = Error;

    fn try_from(doc: RegimeDoc) -> Result<Self> {
        let p = doc.c.len();
        if p == 0 || doc.c.iter().any(|row| row.len() != p) {
            return Err(Error::invalid("C must be square and nonempty"));
        }
        let c = DMatrix::from_fn(p, p, |i, j| doc.c[i][j]);
        Regime::new(
            c,
            DVector::from_column_slice(&doc.lambda0),
            doc.psi,
            doc.sigma,
        )
    }
}

/// Limit data of a tuned sequence of problems.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "RegimeDoc", into = "RegimeDoc")]
pub struct Regime {
    c: DMatrix<f64>,
    lambda0: DVector<f64>,
    psi: Vec<ExtReal>,
    sigma: f64,
    chol: Cholesky<f64, Dyn>,
    lambda_min: f64,
}

impl Regime {
    /// Validates the invariants: `C` symmetric positive definite,
    /// `lambda0` in `[0,1]^p` with maximum 1, `psi` in `[0, inf]^p`, and
    /// `lambda0_j > 0` forcing `psi_j = 0`.
    pub fn new(
        c: DMatrix<f64>,
        lambda0: DVector<f64>,
        psi: Vec<ExtReal>,
        sigma: f64,
    ) -> Result<Self> {
        let p = c.nrows();
        if c.ncols() != p || p == 0 {
            return Err(Error::invalid("C must be square and nonempty"));
        }
        if lambda0.len() != p || psi.len() != p {
            return Err(Error::invalid("lambda0 and psi must have C's dimension"));
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("C must be finite"));
        }
        let scale = c.amax().max(1.0);
        for i in 0..p {
            for j in (i + 1)..p {
                if (c[(i, j)] - c[(j, i)]).abs() > SYMMETRY_EPS * scale {
                    return Err(Error::invalid("C must be symmetric"));
                }
            }
        }
        let chol = Cholesky::new(c.clone())
            .ok_or_else(|| Error::invalid("C must be positive definite"))?;
        let lambda_min = c
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b));
        if lambda_min <= 0.0 {
            return Err(Error::invalid("C must be positive definite"));
        }
        if lambda0.iter().any(|&l| !l.is_finite() || !(0.0..=1.0).contains(&l)) {
            return Err(Error::invalid("lambda0 entries must lie in [0, 1]"));
        }
        if (lambda0.amax() - 1.0).abs() > LAMBDA0_EPS {
            return Err(Error::invalid("max_j lambda0_j must equal 1"));
        }
        for (j, &pj) in psi.iter().enumerate() {
            match pj {
                ExtReal::NegInf => {
                    return Err(Error::invalid(format!("psi[{j}] must be >= 0")));
                }
                ExtReal::Finite(x) if x < 0.0 => {
                    return Err(Error::invalid(format!("psi[{j}] must be >= 0")));
                }
                _ => {}
            }
            if lambda0[j] > 0.0 && pj != ExtReal::Finite(0.0) {
                return Err(Error::invalid(format!(
                    "lambda0[{j}] > 0 forces psi[{j}] = 0"
                )));
            }
        }
        if !sigma.is_finite() || sigma <= 0.0 {
            return Err(Error::invalid("sigma must be positive"));
        }
        Ok(Regime {
            c,
            lambda0,
            psi,
            sigma,
            chol,
            lambda_min,
        })
    }

    pub fn p(&self) -> usize {
        self.c.nrows()
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn lambda0(&self) -> &DVector<f64> {
        &self.lambda0
    }

    pub fn psi(&self) -> &[ExtReal] {
        &self.psi
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Smallest eigenvalue of `C`; positive by construction.
    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    /// Draws `Z ~ N(0, sigma^2 C^{-1})` from a dedicated stream.
    pub fn sample_noise(&self, seed: u64) -> NoiseDraw {
        let key = StreamKey {
            tag: "limit-noise",
            n: 0,
            unit: 0,
            rep: 0,
        };
        let mut rng = stream(seed, &key);
        NoiseDraw {
            z: self.sample_noise_with(&mut rng),
            seed,
        }
    }

    /// Same draw from a caller-managed generator. With `C = L L'`, returns
    /// `sigma * L^{-T} g` for a standard normal `g`, which has covariance
    /// `sigma^2 C^{-1}`.
    pub fn sample_noise_with<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let p = self.p();
        let g = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut z = g;
        self.chol
            .l()
            .tr_solve_lower_triangular_mut(&mut z);
        z * self.sigma
    }
}

/// Computes the limit regime of a penalty schedule.
///
/// Requires an admissible schedule: at least one positive coefficient and a
/// dominant exponent strictly inside `(0, 1)`.
pub fn regime_from_schedule(
    schedule: &TuningSchedule,
    c: DMatrix<f64>,
    sigma: f64,
) -> Result<Regime> {
    let p = schedule.len();
    if c.nrows() != p {
        return Err(Error::invalid(format!(
            "C is {}x{} but the schedule has {p} coordinates",
            c.nrows(),
            c.ncols()
        )));
    }
    let g_star = schedule
        .dominant_exponent()
        .ok_or_else(|| Error::invalid("schedule penalizes no coordinate"))?;
    if !(g_star > 0.0 && g_star < 1.0) {
        return Err(Error::invalid(format!(
            "dominant exponent {g_star} must lie strictly in (0, 1)"
        )));
    }
    // c* is the largest coefficient on the dominant exponent: it is the
    // constant in lambda*(n) ~ c* n^(g*).
    let c_star = schedule
        .coefficients
        .iter()
        .zip(&schedule.exponents)
        .filter(|(cj, gj)| **cj > 0.0 && (**gj - g_star).abs() <= EXPONENT_EPS)
        .map(|(cj, _)| *cj)
        .fold(0.0, f64::max);

    let mut lambda0 = DVector::zeros(p);
    let mut psi = Vec::with_capacity(p);
    for j in 0..p {
        let cj = schedule.coefficients[j];
        let gj = schedule.exponents[j];
        if cj > 0.0 && (gj - g_star).abs() <= EXPONENT_EPS {
            lambda0[j] = cj / c_star;
        }
        let half = g_star / 2.0;
        let pj = if cj == 0.0 || gj < half - EXPONENT_EPS {
            ExtReal::PosInf
        } else if (gj - half).abs() <= EXPONENT_EPS {
            ExtReal::Finite(c_star.sqrt() / cj)
        } else {
            ExtReal::Finite(0.0)
        };
        psi.push(pj);
    }
    Regime::new(c, lambda0, psi, sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c2() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[1.0, -0.7, -0.7, 1.0])
    }

    #[test]
    fn schedule_limits_full_tuning() {
        // lambda_j(n) = n^0.7 on both coordinates.
        let s = TuningSchedule::new(vec![1.0, 1.0], vec![0.7, 0.7]).unwrap();
        let r = regime_from_schedule(&s, c2(), 1.0).unwrap();
        assert_eq!(r.lambda0().as_slice(), &[1.0, 1.0]);
        assert_eq!(r.psi(), &[ExtReal::Finite(0.0), ExtReal::Finite(0.0)]);
    }

    #[test]
    fn schedule_limits_knife_edge() {
        // Exponents (0.35, 0.7): the first coordinate sits exactly at half
        // the dominant rate, so psi_1 is finite and positive.
        let s = TuningSchedule::new(vec![1.0, 1.0], vec![0.35, 0.7]).unwrap();
        let r = regime_from_schedule(&s, c2(), 1.0).unwrap();
        assert_eq!(r.lambda0().as_slice(), &[0.0, 1.0]);
        assert_eq!(r.psi()[0], ExtReal::Finite(1.0));
        assert_eq!(r.psi()[1], ExtReal::Finite(0.0));
    }

    #[test]
    fn schedule_limits_partial_tuning() {
        // An unpenalized coordinate has psi = inf.
        let s = TuningSchedule::new(vec![0.0, 2.0], vec![0.0, 0.5]).unwrap();
        let r = regime_from_schedule(&s, c2(), 1.0).unwrap();
        assert_eq!(r.lambda0().as_slice(), &[0.0, 1.0]);
        assert_eq!(r.psi()[0], ExtReal::PosInf);
        assert_eq!(r.psi()[1], ExtReal::Finite(0.0));
    }

    #[test]
    fn inadmissible_schedules_are_rejected() {
        for g in [0.0, 1.0, 1.3, -0.2] {
            let s = TuningSchedule::new(vec![1.0, 1.0], vec![g, g]).unwrap();
            assert!(regime_from_schedule(&s, c2(), 1.0).is_err(), "g = {g}");
        }
        let none = TuningSchedule::new(vec![0.0, 0.0], vec![0.5, 0.5]).unwrap();
        assert!(regime_from_schedule(&none, c2(), 1.0).is_err());
    }

    #[test]
    fn regime_invariants_are_enforced() {
        let bad_max = Regime::new(
            c2(),
            DVector::from_column_slice(&[0.5, 0.9]),
            vec![ExtReal::Finite(0.0), ExtReal::Finite(0.0)],
            1.0,
        );
        assert!(bad_max.is_err());

        let bad_psi = Regime::new(
            c2(),
            DVector::from_column_slice(&[1.0, 0.0]),
            vec![ExtReal::Finite(2.0), ExtReal::PosInf],
            1.0,
        );
        assert!(bad_psi.is_err(), "lambda0 > 0 must force psi = 0");

        let not_pd = Regime::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]),
            DVector::from_column_slice(&[1.0, 1.0]),
            vec![ExtReal::Finite(0.0), ExtReal::Finite(0.0)],
            1.0,
        );
        assert!(not_pd.is_err());
    }

    #[test]
    fn noise_covariance_matches_inverse_moment_matrix() {
        let s = TuningSchedule::new(vec![1.0, 1.0], vec![0.7, 0.7]).unwrap();
        let r = regime_from_schedule(&s, c2(), 2.0).unwrap();
        let reps = 40_000;
        let mut m = DMatrix::zeros(2, 2);
        let mut rng = crate::rng::stream(1, &StreamKey { tag: "cov", n: 0, unit: 0, rep: 0 });
        for _ in 0..reps {
            let z = r.sample_noise_with(&mut rng);
            m += &z * z.transpose();
        }
        m /= reps as f64;
        let target = c2().try_inverse().unwrap() * 4.0;
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(m[(i, j)], target[(i, j)], epsilon = 0.15);
            }
        }
    }

    #[test]
    fn fixed_seed_reproduces_draw() {
        let s = TuningSchedule::new(vec![1.0, 1.0], vec![0.7, 0.7]).unwrap();
        let r = regime_from_schedule(&s, c2(), 1.0).unwrap();
        assert_eq!(r.sample_noise(9), r.sample_noise(9));
        assert_ne!(r.sample_noise(9).z, r.sample_noise(10).z);
    }

    #[test]
    fn regime_json_round_trip() {
        let s = TuningSchedule::new(vec![1.0, 1.0], vec![0.35, 0.7]).unwrap();
        let r = regime_from_schedule(&s, c2(), 1.5).unwrap();
        let text = serde_json::to_string(&r).unwrap();
        let back: Regime = serde_json::from_str(&text).unwrap();
        assert_eq!(back.lambda0(), r.lambda0());
        assert_eq!(back.psi(), r.psi());
        assert_eq!(back.sigma(), r.sigma());
    }

    #[test]
    fn invalid_regime_json_is_rejected() {
        let text = r#"{"C": [[1.0, 0.0], [0.0, 1.0]], "lambda0": [0.5, 0.4], "psi": [0, 0], "sigma": 1.0}"#;
        assert!(serde_json::from_str::<Regime>(text).is_err());
    }
}
