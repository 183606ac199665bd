//! Small deterministic statistics used by the experiment reports.

/// Linear-interpolation quantile (type 7). `q` clamped to [0, 1];
/// deterministic via total ordering, NaN-free inputs assumed.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of empty sample");
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q = q.clamp(0.0, 1.0);
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

/// Two-sample Kolmogorov-Smirnov distance: the largest gap between the
/// empirical distribution functions.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty(), "KS distance of empty sample");
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (na, nb) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < xs.len() && j < ys.len() {
        if xs[i] < ys[j] {
            i += 1;
        } else if ys[j] < xs[i] {
            j += 1;
        } else {
            // Tied values step both distribution functions together.
            let v = xs[i];
            while i < xs.len() && xs[i] == v {
                i += 1;
            }
            while j < ys.len() && ys[j] == v {
                j += 1;
            }
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Standard error of a binomial proportion estimate.
pub fn proportion_stderr(p_hat: f64, n: usize) -> f64 {
    if n == 0 {
        return f64::NAN;
    }
    (p_hat * (1.0 - p_hat) / n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn quantile_interpolates() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_abs_diff_eq!(quantile(&v, 0.0), 1.0);
        assert_abs_diff_eq!(quantile(&v, 1.0), 4.0);
        assert_abs_diff_eq!(quantile(&v, 0.5), 2.5);
        assert_abs_diff_eq!(quantile(&v, 0.25), 1.75);
    }

    #[test]
    fn quantile_is_order_free() {
        let v = [3.0, 1.0, 4.0, 2.0];
        assert_abs_diff_eq!(quantile(&v, 0.5), 2.5);
    }

    #[test]
    fn ks_of_identical_samples_is_zero() {
        let v = [0.3, -1.2, 2.4, 0.0];
        assert_abs_diff_eq!(ks_distance(&v, &v), 0.0);
    }

    #[test]
    fn ks_of_disjoint_samples_is_one() {
        let a = [0.0, 1.0, 2.0];
        let b = [10.0, 11.0];
        assert_abs_diff_eq!(ks_distance(&a, &b), 1.0);
    }

    #[test]
    fn ks_hand_example() {
        // F_a jumps at 0 and 2, F_b jumps at 1 and 3; the largest gap is 1/2.
        let a = [0.0, 2.0];
        let b = [1.0, 3.0];
        assert_abs_diff_eq!(ks_distance(&a, &b), 0.5);
    }

    #[test]
    fn stderr_formula() {
        assert_abs_diff_eq!(proportion_stderr(0.5, 100), 0.05);
        assert_abs_diff_eq!(proportion_stderr(0.0, 50), 0.0);
    }
}
