//! Geometry oracles for the attainable limit-minimizer set.
//!
//! Along any ray `t * v` the constraints read `t^2 * v_j (Cv)_j <=
//! scale * lambda0_j`, so the boundary extent has the closed form
//! `t* = min_j sqrt(s_j / q_j)` over the positive `q_j = v_j (Cv)_j`.
//! That formula is the independent oracle for the bisection-based
//! boundary search, for the scaling law, and for the localization
//! reconstruction round trip.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

use alcove::asymptotics::{minimize_limit_objective, ExtReal, Regime};
use alcove::mset::{project_cloud, ConfidenceEllipse, LimitSet, MEMBERSHIP_TOL};
use alcove::rng::{stream, StreamKey};

fn spd(rng: &mut impl Rng, p: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(p, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut c = &a * a.transpose();
    for j in 0..p {
        c[(j, j)] += p as f64;
    }
    let s = c.diagonal().amax();
    c / s
}

/// Random regime; `with_inf` requests at least one unpenalized diverging
/// coordinate (`psi = inf`) when p > 1.
fn random_regime(seed: u64, p: usize, with_inf: bool) -> Regime {
    let key = StreamKey {
        tag: "mset-regime",
        n: p as u64,
        unit: u64::from(with_inf),
        rep: seed,
    };
    let mut rng = stream(0x10ca_1e5e, &key);
    let c = spd(&mut rng, p);
    let mut lambda0 = DVector::zeros(p);
    let mut psi = vec![ExtReal::ZERO; p];
    lambda0[0] = 1.0;
    for j in 1..p {
        if with_inf && j == p - 1 {
            psi[j] = ExtReal::PosInf;
        } else {
            lambda0[j] = rng.gen_range(0.0..=1.0);
        }
    }
    Regime::new(c, lambda0, psi, 1.0).unwrap()
}

/// Closed-form extent along a unit direction of the feasible subspace.
fn extent_oracle(set: &LimitSet, d: &DVector<f64>) -> f64 {
    let c = set.regime().c();
    let cd = c * d;
    let mut t = f64::INFINITY;
    for j in 0..set.p() {
        if set.regime().psi()[j] == ExtReal::PosInf {
            continue;
        }
        let q = d[j] * cd[j];
        if q > 0.0 {
            t = t.min((set.scale() * set.regime().lambda0()[j] / q).sqrt());
        }
    }
    t
}

#[test]
fn boundary_matches_closed_form_extent() {
    for seed in 0..150_u64 {
        let p = 1 + (seed as usize) % 4;
        let with_inf = p > 1 && seed % 3 == 0;
        let regime = random_regime(seed, p, with_inf);
        let set = LimitSet::new(regime);
        let cloud = set.sample_boundary_seeded(40, seed).unwrap();
        for (pt, dir) in cloud.points.iter().zip(&cloud.directions) {
            let t_star = extent_oracle(&set, dir);
            assert!(t_star.is_finite(), "seed {seed}: unbounded ray in a compact set");
            let t = pt.norm();
            assert!(
                (t - t_star).abs() <= 1e-8 * (1.0 + t_star),
                "seed {seed}: bisection extent {t} vs closed form {t_star}"
            );
        }
    }
}

/// Every sampled boundary point is a member; pushing it 0.1% farther out
/// leaves the set. Together these bracket the boundary.
#[test]
fn boundary_points_straddle_membership() {
    for seed in 0..60_u64 {
        let p = 2 + (seed as usize) % 3;
        let regime = random_regime(seed, p, seed % 4 == 0);
        let set = LimitSet::new(regime);
        let cloud = set.sample_boundary_seeded(60, seed ^ 1).unwrap();
        for pt in &cloud.points {
            assert!(set.contains(pt, MEMBERSHIP_TOL));
            let outside = pt * 1.001;
            // rays with all constraints inactive cannot occur: compactness
            assert!(
                !set.contains(&outside, 1e-12),
                "seed {seed}: inflated boundary point still inside"
            );
        }
    }
}

#[test]
fn compactness_radius_bound_holds() {
    for seed in 0..60_u64 {
        let p = 1 + (seed as usize) % 5;
        let regime = random_regime(seed, p, p > 2);
        let set = LimitSet::new(regime);
        let r = set.radius_bound();
        let cloud = set.sample_boundary_seeded(80, seed).unwrap();
        for pt in &cloud.points {
            assert!(pt.norm() <= r * (1.0 + 1e-9), "seed {seed}: point beyond radius bound");
        }
    }
}

/// Scaled sets are nested: the boundary of the d-scaled set lies inside
/// any set with a larger d and outside any with smaller d.
#[test]
fn scaled_sets_are_nested() {
    let regime = random_regime(99, 3, false);
    let base = LimitSet::new(regime);
    let inner = base.scaled(0.49).unwrap();
    let outer = base.scaled(1.44).unwrap();
    let cloud = base.sample_boundary_seeded(100, 7).unwrap();
    for pt in &cloud.points {
        assert!(outer.contains(pt, MEMBERSHIP_TOL));
        assert!(!inner.contains(pt, 1e-12));
        // and the scaling law: sqrt(d) * boundary stays on the scaled boundary
        let scaled_pt = pt * 0.7; // sqrt(0.49)
        assert!(inner.contains(&scaled_pt, MEMBERSHIP_TOL));
        assert!(!inner.contains(&(&scaled_pt * 1.001), 1e-12));
    }
}

/// Minimizers of random localizations always land in the set, and sampled
/// boundary points round-trip through localization reconstruction.
#[test]
fn localization_round_trip_on_boundary() {
    for seed in 0..40_u64 {
        let p = 1 + (seed as usize) % 3;
        let regime = random_regime(seed, p, false);
        let set = LimitSet::new(regime.clone());
        let key = StreamKey {
            tag: "mset-roundtrip",
            n: p as u64,
            unit: 0,
            rep: seed,
        };
        let mut rng = stream(0x2007_1e15, &key);
        let z = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let cloud = set.sample_boundary_seeded(25, seed).unwrap();
        for m in &cloud.points {
            let phi = set.localization_for(m, &z).unwrap();
            let again = minimize_limit_objective(&regime, &phi, &z).unwrap();
            assert!(
                (&again - m).norm() <= 1e-6 * (1.0 + m.norm()),
                "seed {seed}: reconstruction drifted by {:.3e}",
                (&again - m).norm()
            );
        }
    }
}

/// With psi_j = inf the whole set lies in the subspace `(Cm)_j = 0`, and
/// the feasible basis is orthonormal and spans it.
#[test]
fn diverging_weight_flattens_the_set() {
    let regime = random_regime(3, 3, true);
    let set = LimitSet::new(regime.clone());
    let basis = set.feasible_basis();
    assert_eq!(basis.ncols(), 2);
    let gram = basis.tr_mul(&basis);
    assert!((gram - DMatrix::identity(2, 2)).amax() < 1e-10);
    let cloud = set.sample_boundary_seeded(50, 11).unwrap();
    let j = 2; // the psi = inf coordinate in random_regime
    for pt in &cloud.points {
        let cm = regime.c() * pt;
        assert!(cm[j].abs() <= 1e-8, "(Cm)_{j} = {:.3e} should vanish", cm[j]);
    }
}

#[test]
fn cloud_csv_and_projection_are_consistent() {
    let regime = random_regime(5, 3, false);
    let set = LimitSet::new(regime);
    let cloud = set.sample_boundary_seeded(12, 0).unwrap();
    let csv = set.cloud_csv(&cloud);
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    assert_eq!(header, "m_1,m_2,m_3,binding_index,margin,max_quadratic");
    assert_eq!(lines.count(), 12);

    let planar = project_cloud(&cloud, 2).unwrap();
    assert_eq!(planar.len(), 12);
    for (flat, full) in planar.iter().zip(&cloud.points) {
        assert_eq!(flat.len(), 2);
        assert_eq!(flat[0], full[0]);
        assert_eq!(flat[1], full[1]);
    }
}

#[test]
fn limit_set_json_round_trip() {
    let regime = random_regime(21, 2, false);
    let set = LimitSet::new(regime).scaled(1.21).unwrap();
    let json = serde_json::to_string(&set).unwrap();
    let back: LimitSet = serde_json::from_str(&json).unwrap();
    assert_eq!(back.scale(), set.scale());
    let cloud = set.sample_boundary_seeded(30, 2).unwrap();
    for pt in &cloud.points {
        assert!(back.contains(pt, MEMBERSHIP_TOL));
        assert!(!back.contains(&(pt * 1.001), 1e-12));
    }
}

/// Least-squares confidence ellipses: boundary points sit on the level set
/// `z'Cz = threshold` and scale as sigma^2.
#[test]
fn ellipse_boundary_on_level_set() {
    let regime = random_regime(13, 2, false);
    let c = regime.c().clone();
    let ell = ConfidenceEllipse::new(c.clone(), 1.3, 0.05).unwrap();
    for z in ell.boundary_points(64) {
        let q = (z.transpose() * &c * &z)[(0, 0)] / (1.3f64 * 1.3);
        assert!(
            (q - ell.threshold() / (1.3f64 * 1.3)).abs() <= 1e-9 * ell.threshold(),
            "point off the level set: {q}"
        );
        assert!(ell.contains(&z, 1e-9));
        assert!(!ell.contains(&(&z * 1.01), 0.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// sqrt-d scaling on arbitrary directions: extent_d(v) =
    /// sqrt(d) * extent_1(v), via boundary_ray on both sets.
    #[test]
    fn scaling_law_on_random_directions(
        seed in 0u64..2_000,
        d in 0.05f64..4.0,
        x0 in -1.0f64..1.0,
        x1 in -1.0f64..1.0,
        x2 in -1.0f64..1.0,
    ) {
        let v = DVector::from_vec(vec![x0, x1, x2]);
        prop_assume!(v.norm() > 1e-3);
        let regime = random_regime(seed, 3, false);
        let base = LimitSet::new(regime);
        let scaled = base.scaled(d).unwrap();
        let b1 = base.boundary_ray(&v).unwrap();
        let bd = scaled.boundary_ray(&v).unwrap();
        prop_assert!(
            (bd.norm() - d.sqrt() * b1.norm()).abs() <= 1e-7 * (1.0 + b1.norm()),
            "extents {} vs sqrt({d}) * {}", bd.norm(), b1.norm()
        );
    }

    /// Membership is symmetric about the origin and star-shaped: if m is a
    /// member so are -m and t*m for t in [0,1].
    #[test]
    fn symmetric_and_star_shaped(seed in 0u64..2_000, t in 0.0f64..1.0) {
        let regime = random_regime(seed, 2, false);
        let set = LimitSet::new(regime);
        let cloud = set.sample_boundary_seeded(8, seed).unwrap();
        for m in &cloud.points {
            prop_assert!(set.contains(&(-m), MEMBERSHIP_TOL));
            prop_assert!(set.contains(&(m * t), MEMBERSHIP_TOL));
        }
    }
}
