//! Geometry of the set of attainable limit minimizers.
//!
//! For a regime with moment matrix `C`, weights `lambda0` and indicators
//! `psi`, the attainable set is
//!
//! ```text
//! M = { m :  (Cm)_j = 0                   where psi_j = inf,
//!            m_j (Cm)_j <= scale*lambda0_j where psi_j < inf }
//! ```
//!
//! at `scale = 1`. Replacing `lambda0` by `d * lambda0` scales the set by
//! `sqrt(d)`, which is how shrunken and inflated confidence sets arise. The
//! set is compact, symmetric about the origin and star-shaped with respect
//! to it; every boundary point is realized as the limit minimizer for some
//! localization, which [`LimitSet::localization_for`] reconstructs.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, Continuous, ContinuousCDF};

use crate::asymptotics::{ExtReal, Localization, Regime};
use crate::error::{Error, Result};

/// Default tolerance for membership tests and for the zero test on
/// `(Cm)_j` when reconstructing localizations.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// Bisection stops when the bracket width drops below this times the
/// radius bound.
const RAY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LimitSetDoc {
    regime: Regime,
    scale_d: f64,
}

impl From<LimitSet> for LimitSetDoc {
    fn from(s: LimitSet) -> Self {
        LimitSetDoc {
            regime: s.regime,
            scale_d: s.scale,
        }
    }
}

impl TryFrom<LimitSetDoc> for LimitSet {
    type Error = Error;

    fn try_from(doc: LimitSetDoc) -> Result<Self> {
        LimitSet::new(doc.regime).scaled(doc.scale_d)
    }
}

/// The attainable set of a regime, with a multiplicative weight scale.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "LimitSetDoc", into = "LimitSetDoc")]
pub struct LimitSet {
    regime: Regime,
    scale: f64,
}

/// Boundary points indexed by the directions that produced them.
#[derive(Debug, Clone)]
pub struct BoundaryCloud {
    pub points: Vec<DVector<f64>>,
    pub directions: Vec<DVector<f64>>,
    /// Radial accuracy of the points: each lies within this of the exact
    /// boundary along its direction.
    pub tolerance: f64,
}

/// Per-coordinate constraint diagnostics at a point.
#[derive(Debug, Clone)]
pub struct ConstraintProfile {
    /// Index of the tightest constraint.
    pub binding_index: usize,
    /// Smallest slack `bound_j - value_j`; negative outside the set.
    pub margin: f64,
    /// `max_j m_j (Cm)_j`, a scalar useful for coloring boundary clouds.
    pub max_quadratic: f64,
}

impl LimitSet {
    /// The attainable set of `regime` at scale 1.
    pub fn new(regime: Regime) -> Self {
        LimitSet { regime, scale: 1.0 }
    }

    pub fn regime(&self) -> &Regime {
        &self.regime
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn p(&self) -> usize {
        self.regime.p()
    }

    /// The set with weights `d * scale * lambda0`; geometrically
    /// `sqrt(d)` times this set.
    pub fn scaled(&self, d: f64) -> Result<LimitSet> {
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::invalid("scale must be positive and finite"));
        }
        Ok(LimitSet {
            regime: self.regime.clone(),
            scale: self.scale * d,
        })
    }

    /// Membership test with slack `tol` on every constraint.
    pub fn contains(&self, m: &DVector<f64>, tol: f64) -> bool {
        if m.len() != self.p() {
            return false;
        }
        let cm = self.regime.c() * m;
        for j in 0..self.p() {
            match self.regime.psi()[j] {
                ExtReal::PosInf => {
                    if cm[j].abs() > tol {
                        return false;
                    }
                }
                _ => {
                    if m[j] * cm[j] > self.scale * self.regime.lambda0()[j] + tol {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Constraint diagnostics at `m`.
    pub fn constraint_profile(&self, m: &DVector<f64>) -> ConstraintProfile {
        let cm = self.regime.c() * m;
        let mut binding_index = 0;
        let mut margin = f64::INFINITY;
        let mut max_quadratic = f64::NEG_INFINITY;
        for j in 0..self.p() {
            let quad = m[j] * cm[j];
            max_quadratic = max_quadratic.max(quad);
            let slack = match self.regime.psi()[j] {
                ExtReal::PosInf => -cm[j].abs(),
                _ => self.scale * self.regime.lambda0()[j] - quad,
            };
            if slack < margin {
                margin = slack;
                binding_index = j;
            }
        }
        ConstraintProfile {
            binding_index,
            margin,
            max_quadratic,
        }
    }

    /// Any member satisfies `||m||^2 <= scale * p / lambda_min(C)`; this
    /// returns that radius bound.
    pub fn radius_bound(&self) -> f64 {
        (self.scale * self.p() as f64 / self.regime.lambda_min()).sqrt()
    }

    /// Orthonormal basis of the subspace `{ d : (Cd)_j = 0 for psi_j = inf }`
    /// in which boundary rays live. Full identity when no coordinate has
    /// `psi_j = inf`.
    pub fn feasible_basis(&self) -> DMatrix<f64> {
        let p = self.p();
        let inf_rows: Vec<usize> = (0..p)
            .filter(|&j| self.regime.psi()[j] == ExtReal::PosInf)
            .collect();
        if inf_rows.is_empty() {
            return DMatrix::identity(p, p);
        }
        // Null space of the selected rows A of C: the eigenvectors of A'A
        // with vanishing eigenvalue. A has full row rank (C is positive
        // definite), so the null space has dimension p - |inf_rows|.
        let mut a = DMatrix::zeros(inf_rows.len(), p);
        for (r, &j) in inf_rows.iter().enumerate() {
            for k in 0..p {
                a[(r, k)] = self.regime.c()[(j, k)];
            }
        }
        let eig = (a.tr_mul(&a)).symmetric_eigen();
        let max_eig = eig.eigenvalues.amax().max(1.0);
        let null_cols: Vec<usize> = (0..p)
            .filter(|&i| eig.eigenvalues[i] <= 1e-10 * max_eig)
            .collect();
        let mut basis = DMatrix::zeros(p, null_cols.len());
        for (col, &i) in null_cols.iter().enumerate() {
            for j in 0..p {
                basis[(j, col)] = eig.eigenvectors[(j, i)];
            }
        }
        basis
    }

    /// The boundary point along `direction`: the farthest member of the set
    /// on the ray through the projection of `direction` onto the feasible
    /// subspace. Errors when that projection is numerically zero.
    pub fn boundary_ray(&self, direction: &DVector<f64>) -> Result<DVector<f64>> {
        if direction.len() != self.p() {
            return Err(Error::invalid("direction has wrong dimension"));
        }
        if direction.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("direction must be finite"));
        }
        let basis = self.feasible_basis();
        let d = &basis * basis.tr_mul(direction);
        let norm = d.norm();
        if norm <= 1e-12 * direction.norm().max(1.0) {
            return Err(Error::invalid(
                "direction is orthogonal to the feasible subspace",
            ));
        }
        let d = d / norm;
        Ok(&d * self.ray_extent(&d))
    }

    /// Largest `t >= 0` with `t * d` in the set, for a unit `d` already in
    /// the feasible subspace. Bisection on the inequality constraints.
    fn ray_extent(&self, d: &DVector<f64>) -> f64 {
        let cd = self.regime.c() * d;
        let mut q = Vec::with_capacity(self.p());
        let mut s = Vec::with_capacity(self.p());
        for j in 0..self.p() {
            if self.regime.psi()[j] != ExtReal::PosInf {
                q.push(d[j] * cd[j]);
                s.push(self.scale * self.regime.lambda0()[j]);
            }
        }
        let feasible = |t: f64| q.iter().zip(&s).all(|(&qj, &sj)| t * t * qj <= sj);
        let mut lo = 0.0;
        let mut hi = self.radius_bound() * 1.0001 + 1e-9;
        debug_assert!(!feasible(hi), "radius bound must exclude hi");
        let width_tol = RAY_TOL * self.radius_bound().max(1.0);
        while hi - lo > width_tol {
            let mid = 0.5 * (lo + hi);
            if feasible(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Boundary points along a deterministic family of directions spanning
    /// the feasible subspace: signs in dimension 1, an angular grid in
    /// dimension 2, a Fibonacci sphere in dimension 3 and seeded random
    /// directions above that.
    pub fn sample_boundary(&self, count: usize) -> Result<BoundaryCloud> {
        self.sample_boundary_seeded(count, 0)
    }

    pub fn sample_boundary_seeded(&self, count: usize, seed: u64) -> Result<BoundaryCloud> {
        if count == 0 {
            return Err(Error::invalid("need at least one direction"));
        }
        let basis = self.feasible_basis();
        let k = basis.ncols();
        if k == 0 {
            return Err(Error::invalid("feasible subspace is trivial"));
        }
        let mut points = Vec::with_capacity(count);
        let mut directions = Vec::with_capacity(count);
        for w in unit_directions(k, count, seed) {
            let d = &basis * w;
            let t = self.ray_extent(&d);
            points.push(&d * t);
            directions.push(d);
        }
        Ok(BoundaryCloud {
            points,
            directions,
            tolerance: RAY_TOL * self.radius_bound().max(1.0),
        })
    }

    /// Reconstructs a localization whose limit minimizer is exactly `m`.
    ///
    /// Defined on the unscaled set (`scale = 1`). `z` is the Gaussian shift
    /// the minimization will be run with; it only enters coordinates with
    /// `psi_j` finite and positive. Per coordinate:
    ///
    /// * `(Cm)_j = 0` (within tolerance): `phi_j = inf`;
    /// * interior-weight coordinates with `lambda0_j > 0` and
    ///   `|m_j (Cm)_j| <= lambda0_j`: `phi_j = -m_j / lambda0_j`, ties
    ///   included;
    /// * otherwise `phi_j = 1/(Cm)_j - psi_j z_j`.
    pub fn localization_for(&self, m: &DVector<f64>, z: &DVector<f64>) -> Result<Localization> {
        if self.scale != 1.0 {
            return Err(Error::invalid(
                "localizations are reconstructed on the unscaled set",
            ));
        }
        if m.len() != self.p() || z.len() != self.p() {
            return Err(Error::invalid("m and z must have the regime's dimension"));
        }
        if !self.contains(m, MEMBERSHIP_TOL) {
            return Err(Error::NotAMember(format!(
                "margin {:.3e}",
                self.constraint_profile(m).margin
            )));
        }
        let cm = self.regime.c() * m;
        let mut phi = Vec::with_capacity(self.p());
        for j in 0..self.p() {
            let lambda0 = self.regime.lambda0()[j];
            if cm[j].abs() <= MEMBERSHIP_TOL {
                phi.push(ExtReal::PosInf);
            } else if lambda0 > 0.0 && (m[j] * cm[j]).abs() <= lambda0 + MEMBERSHIP_TOL {
                phi.push(ExtReal::Finite(-m[j] / lambda0));
            } else {
                let psi = match self.regime.psi()[j] {
                    ExtReal::Finite(x) => x,
                    _ => {
                        return Err(Error::NotAMember(format!(
                            "(Cm)_{j} = {:.3e} should vanish",
                            cm[j]
                        )))
                    }
                };
                phi.push(ExtReal::Finite(1.0 / cm[j] - psi * z[j]));
            }
        }
        Ok(Localization::new(phi))
    }

    /// CSV rows for a cloud: coordinates, binding constraint index, margin
    /// and the coloring scalar `max_j m_j (Cm)_j`.
    pub fn cloud_csv(&self, cloud: &BoundaryCloud) -> String {
        let p = self.p();
        let mut out = String::new();
        for j in 1..=p {
            out.push_str(&format!("m_{j},"));
        }
        out.push_str("binding_index,margin,max_quadratic\n");
        for m in &cloud.points {
            let profile = self.constraint_profile(m);
            for j in 0..p {
                out.push_str(&format!("{},", m[j]));
            }
            out.push_str(&format!(
                "{},{},{}\n",
                profile.binding_index, profile.margin, profile.max_quadratic
            ));
        }
        out
    }

    /// SVG rendering of a two-dimensional cloud as a closed polyline, with
    /// an optional confidence-ellipse overlay.
    pub fn cloud_svg(
        &self,
        cloud: &BoundaryCloud,
        ellipse: Option<&ConfidenceEllipse>,
    ) -> Result<String> {
        if self.p() != 2 {
            return Err(Error::invalid("SVG rendering is two-dimensional only"));
        }
        let ellipse_points = match ellipse {
            Some(e) => {
                if e.p() != 2 {
                    return Err(Error::invalid("ellipse dimension must be 2"));
                }
                e.boundary_points(256)
            }
            None => Vec::new(),
        };
        Ok(render_svg(&cloud.points, &ellipse_points))
    }
}

/// Drops one coordinate from every point of a cloud, for inspecting
/// three-or-more-dimensional boundaries as planar scatters.
pub fn project_cloud(cloud: &BoundaryCloud, drop_index: usize) -> Result<Vec<DVector<f64>>> {
    let p = match cloud.points.first() {
        Some(m) => m.len(),
        None => return Err(Error::invalid("cloud is empty")),
    };
    if p < 3 {
        return Err(Error::invalid("projection needs at least 3 dimensions"));
    }
    if drop_index >= p {
        return Err(Error::invalid(format!(
            "coordinate {drop_index} out of range for dimension {p}"
        )));
    }
    Ok(cloud
        .points
        .iter()
        .map(|m| {
            DVector::from_iterator(
                p - 1,
                m.iter().enumerate().filter(|(j, _)| *j != drop_index).map(|(_, &v)| v),
            )
        })
        .collect())
}

/// The classical least-squares confidence ellipsoid
/// `{ z : z' C z <= sigma^2 * chi2_quantile(p, 1 - alpha) }`.
#[derive(Debug, Clone)]
pub struct ConfidenceEllipse {
    c: DMatrix<f64>,
    threshold: f64,
}

impl ConfidenceEllipse {
    pub fn new(c: DMatrix<f64>, sigma: f64, alpha: f64) -> Result<Self> {
        let p = c.nrows();
        if p == 0 || c.ncols() != p {
            return Err(Error::invalid("C must be square and nonempty"));
        }
        if nalgebra::Cholesky::new(c.clone()).is_none() {
            return Err(Error::invalid("C must be positive definite"));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::invalid("sigma must be positive"));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid("alpha must lie in (0, 1)"));
        }
        let chi2 = ChiSquared::new(p as f64)
            .map_err(|e| Error::invalid(format!("chi-squared setup: {e}")))?;
        // The generic inverse is only ~1e-5 accurate; Newton steps against
        // the exact distribution function tighten it to machine precision.
        let target = 1.0 - alpha;
        let mut q = chi2.inverse_cdf(target);
        for _ in 0..8 {
            let density = chi2.pdf(q);
            if density <= 0.0 {
                break;
            }
            let step = (chi2.cdf(q) - target) / density;
            q -= step;
            if step.abs() <= 1e-14 * q.abs() {
                break;
            }
        }
        Ok(ConfidenceEllipse {
            c,
            threshold: sigma * sigma * q,
        })
    }

    pub fn p(&self) -> usize {
        self.c.nrows()
    }

    /// The quadratic-form cutoff `sigma^2 * chi2_quantile(p, 1 - alpha)`.
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn contains(&self, z: &DVector<f64>, tol: f64) -> bool {
        z.len() == self.p() && (z.transpose() * &self.c * z)[(0, 0)] <= self.threshold + tol
    }

    /// Points with `z' C z` exactly at the cutoff, one per direction of the
    /// standard direction family.
    pub fn boundary_points(&self, count: usize) -> Vec<DVector<f64>> {
        unit_directions(self.p(), count, 0)
            .into_iter()
            .map(|d| {
                let q = (d.transpose() * &self.c * &d)[(0, 0)];
                &d * (self.threshold / q).sqrt()
            })
            .collect()
    }
}

/// Deterministic unit directions in dimension `k`: alternating signs for
/// `k = 1`, an angular grid for `k = 2`, a Fibonacci sphere for `k = 3`,
/// and seeded normalized Gaussians beyond that.
fn unit_directions(k: usize, count: usize, seed: u64) -> Vec<DVector<f64>> {
    use rand_distr::StandardNormal;
    let mut out = Vec::with_capacity(count);
    match k {
        0 => {}
        1 => {
            for i in 0..count {
                out.push(DVector::from_column_slice(&[if i % 2 == 0 {
                    1.0
                } else {
                    -1.0
                }]));
            }
        }
        2 => {
            for i in 0..count {
                let theta = 2.0 * std::f64::consts::PI * i as f64 / count as f64;
                out.push(DVector::from_column_slice(&[theta.cos(), theta.sin()]));
            }
        }
        3 => {
            let golden = std::f64::consts::PI * (3.0 - 5.0_f64.sqrt());
            for i in 0..count {
                let y = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
                let r = (1.0 - y * y).sqrt();
                let theta = golden * i as f64;
                out.push(DVector::from_column_slice(&[
                    r * theta.cos(),
                    y,
                    r * theta.sin(),
                ]));
            }
        }
        _ => {
            use rand::Rng;
            let key = crate::rng::StreamKey {
                tag: "boundary-directions",
                n: k as u64,
                unit: 0,
                rep: 0,
            };
            let mut rng = crate::rng::stream(seed, &key);
            while out.len() < count {
                let d = DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
                let norm = d.norm();
                if norm > 1e-6 {
                    out.push(d / norm);
                }
            }
        }
    }
    out
}

fn render_svg(cloud: &[DVector<f64>], ellipse: &[DVector<f64>]) -> String {
    const SIZE: f64 = 640.0;
    const PAD: f64 = 40.0;
    let all = cloud.iter().chain(ellipse.iter());
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for m in all {
        for a in 0..2 {
            lo[a] = lo[a].min(m[a]);
            hi[a] = hi[a].max(m[a]);
        }
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-9);
    let map = |m: &DVector<f64>| {
        let x = PAD + (m[0] - lo[0]) / span * (SIZE - 2.0 * PAD);
        let y = SIZE - PAD - (m[1] - lo[1]) / span * (SIZE - 2.0 * PAD);
        format!("{x:.2},{y:.2}")
    };
    let polyline = |pts: &[DVector<f64>], style: &str| {
        if pts.is_empty() {
            return String::new();
        }
        let mut coords: Vec<String> = pts.iter().map(map).collect();
        coords.push(map(&pts[0]));
        format!(
            "  <polyline fill=\"none\" {style} points=\"{}\"/>\n",
            coords.join(" ")
        )
    };
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">\n"
    );
    svg.push_str("  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&polyline(cloud, "stroke=\"#4682b4\" stroke-width=\"1.5\""));
    svg.push_str(&polyline(
        ellipse,
        "stroke=\"#d2691e\" stroke-width=\"1.5\" stroke-dasharray=\"6 4\"",
    ));
    svg.push_str("</svg>\n");
    svg
}
