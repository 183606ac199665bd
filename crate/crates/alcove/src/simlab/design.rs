//! Deterministic designs whose scaled Gram matrix converges to a target.

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{Error, Result};

/// Cosine-basis design hitting `c_target` in the limit.
///
/// The raw columns are `1` and `sqrt(2) cos(pi k i / n)` for
/// `k = 1..p-1`, `i = 0..n-1`; their scaled Gram matrix is `I + O(1/n)`
/// with the error strictly decreasing in `n`. Multiplying on the right by
/// the transposed Cholesky factor `L'` of `c_target` gives
/// `X'X / n -> c_target` at the same rate, with full column rank at every
/// `n >= p` (cosine columns are Chebyshev polynomials evaluated at distinct
/// points).
pub fn cosine_design(n: usize, c_target: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = c_target.nrows();
    if c_target.ncols() != p || p == 0 {
        return Err(Error::invalid("target matrix must be square and nonempty"));
    }
    if n < p {
        return Err(Error::invalid(format!("need n >= p, got n = {n}, p = {p}")));
    }
    let chol = Cholesky::new(c_target.clone())
        .ok_or_else(|| Error::invalid("target matrix must be positive definite"))?;
    let raw = raw_cosine_columns(n, p);
    Ok(raw * chol.l().transpose())
}

fn raw_cosine_columns(n: usize, p: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, p, |i, k| {
        if k == 0 {
            1.0
        } else {
            2.0_f64.sqrt() * (std::f64::consts::PI * k as f64 * i as f64 / n as f64).cos()
        }
    })
}

/// Exactly orthogonal cosine design: `X'X = n I` up to floating-point
/// rounding. Used as a fixture wherever closed-form solutions exist.
pub fn orthogonal_cosine_design(n: usize, p: usize) -> Result<DMatrix<f64>> {
    if p == 0 || n < p {
        return Err(Error::invalid(format!("need n >= p >= 1, got n = {n}, p = {p}")));
    }
    Ok(DMatrix::from_fn(n, p, |i, k| {
        if k == 0 {
            1.0
        } else {
            // Half-offset sampling makes the columns exactly orthogonal.
            2.0_f64.sqrt()
                * (std::f64::consts::PI * k as f64 * (i as f64 + 0.5) / n as f64).cos()
        }
    }))
}

/// Cached per-sample-size data for the Monte Carlo engine.
#[derive(Debug, Clone)]
pub struct DesignData {
    pub n: usize,
    pub x: DMatrix<f64>,
    pub gram: DMatrix<f64>,
    pub chol: Cholesky<f64, Dyn>,
}

impl DesignData {
    pub fn new(n: usize, c_target: &DMatrix<f64>) -> Result<Self> {
        let x = cosine_design(n, c_target)?;
        let gram = x.tr_mul(&x);
        let chol = Cholesky::new(gram.clone())
            .ok_or_else(|| Error::invalid(format!("design at n = {n} is rank deficient")))?;
        Ok(DesignData { n, x, gram, chol })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c2() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[1.0, -0.7, -0.7, 1.0])
    }

    #[test]
    fn scaled_gram_error_decreases() {
        let mut prev = f64::INFINITY;
        for n in [50usize, 100, 200, 400] {
            let x = cosine_design(n, &c2()).unwrap();
            let err = (x.tr_mul(&x) / n as f64 - c2()).amax();
            assert!(err < prev, "n = {n}: {err} !< {prev}");
            prev = err;
        }
        assert!(prev < 0.02);
    }

    #[test]
    fn orthogonal_design_gram_is_scaled_identity() {
        let n = 64;
        let x = orthogonal_cosine_design(n, 5).unwrap();
        let gram = x.tr_mul(&x);
        for i in 0..5 {
            for j in 0..5 {
                let expect = if i == j { n as f64 } else { 0.0 };
                assert!(
                    (gram[(i, j)] - expect).abs() < 1e-9,
                    "gram[{i},{j}] = {}",
                    gram[(i, j)]
                );
            }
        }
    }

    #[test]
    fn designs_have_full_rank() {
        for n in [3usize, 10, 37] {
            for p in 1..=3.min(n) {
                let c = DMatrix::identity(p, p);
                let x = cosine_design(n, &c).unwrap();
                assert!(Cholesky::new(x.tr_mul(&x)).is_some(), "n = {n}, p = {p}");
            }
        }
    }
}
