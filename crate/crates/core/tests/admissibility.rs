use std::f64::consts::E;

use gaf_zeros::admissibility::{
    check_local, check_type1, check_type2, coeff_gaussian_error, covariance_inequality_sides,
    expansion_remainder, gaussian_lattice_bounds, gaussian_lattice_sum, gaussian_pair_bounds,
    gaussian_pair_sum, gram_identity_residual, local_remainder, AdmissibilityParams,
};
use gaf_zeros::CoefficientModel;
use num_complex::Complex64;
use proptest::prelude::*;

fn params(c_g: f64) -> AdmissibilityParams {
    AdmissibilityParams {
        c_g,
        ..AdmissibilityParams::default()
    }
}

#[test]
fn exp_type1_at_six() {
    let g = CoefficientModel::exp();
    let rep = check_type1(&g, 6.0, &params(2.5)).unwrap();
    let m = rep.margins();
    assert!(rep.conditions[..3].iter().all(|c| c.passed));
    assert!(m[2] <= 0.2, "expansion margin {}", m[2]);
    // |ψ(δ)|·B² ≈ B^{2 − C_G/2} is not bounded for C_G < 4.
    assert!(!rep.conditions[3].passed);
    let rep = check_type1(&g, 6.0, &params(4.5)).unwrap();
    assert!(rep.passed(), "{:?}", rep.margins());
}

#[test]
fn exp_type2_at_six() {
    let rep = check_type2(&CoefficientModel::exp(), 6.0, &params(2.5)).unwrap();
    assert!(rep.passed(), "{:?}", rep.margins());
    let bound = 6f64.exp().powf(0.25 - 0.5) / 6.0;
    assert!(rep.conditions[2].margin <= bound * (1.0 + 1e-6));
}

#[test]
fn bounded_and_degenerate_models_fail() {
    let two = CoefficientModel::two_term(0, 1, 1.0, 1.0).unwrap();
    for rep in [
        check_type1(&two, 5.0, &params(2.5)).unwrap(),
        check_type2(&two, 5.0, &params(2.5)).unwrap(),
    ] {
        assert!(!rep.conditions[0].passed);
    }
    let mono = CoefficientModel::monomial(3);
    let rep = check_type1(&mono, 1.0, &params(2.5)).unwrap();
    assert!(rep.conditions.iter().all(|c| !c.passed));
}

#[test]
fn remainders_vanish_at_zero() {
    let w = CoefficientModel::exp().window(6.0).unwrap();
    assert_eq!(expansion_remainder(&w, 0.0), Complex64::new(0.0, 0.0));
    assert_eq!(local_remainder(&w, Complex64::new(0.0, 0.0)), Complex64::new(0.0, 0.0));
}

#[test]
fn local_admissibility_of_exp() {
    let b = 6f64.exp();
    let rep = check_local(&CoefficientModel::exp(), 6.0, b.powf(-0.5), 0.1, 0.05).unwrap();
    assert!(rep.passed);
    // |h| ≤ |τ|³B e^{|τ|}/6 gives a ratio ≤ ηδ e^{ηδ}/6.
    let r = 0.1 * b.powf(-0.5);
    assert!(rep.worst <= r * r.exp() / 6.0 * (1.0 + 1e-6));
}

#[test]
fn coefficient_gaussian_profile() {
    let g = CoefficientModel::exp();
    let e400 = coeff_gaussian_error(&g, 400f64.ln(), 60.0).unwrap();
    assert!(e400.applicable);
    assert!(e400.max_error <= 0.05);
    // Stirling: p_A √(2πA) = 1 − 1/(12A) + O(A⁻²).
    assert!((e400.center_error - 1.0 / 4800.0).abs() < 1e-6);
    let e4000 = coeff_gaussian_error(&g, 4000f64.ln(), 3.0 * 4000f64.sqrt()).unwrap();
    assert!(e4000.max_error < e400.max_error);
    let two = CoefficientModel::two_term(0, 1, 1.0, 1.0).unwrap();
    let na = coeff_gaussian_error(&two, 0.0, 1.0).unwrap();
    assert!(!na.applicable && na.max_error == 1.0);
}

/// Margins for conditions 2–4 on an increasing grid; condition 1 stays below 1.
fn assert_margins_shrink(g: &CoefficientModel, ts: &[f64], c_g: f64) {
    let reps: Vec<_> = ts.iter().map(|&t| check_type1(g, t, &params(c_g)).unwrap()).collect();
    for r in &reps {
        assert!(r.conditions[0].passed, "{} t = {}: {:?}", g.tag(), r.t, r.margins());
    }
    for w in reps.windows(2) {
        for k in 1..4 {
            let (a, b) = (w[0].conditions[k].margin, w[1].conditions[k].margin);
            assert!(b <= a * (1.0 + 1e-9), "{} condition {} at t = {} → {}: {a} → {b}", g.tag(), k + 1, w[0].t, w[1].t);
        }
    }
}

#[test]
fn type1_margins_shrink_toward_t_g() {
    assert_margins_shrink(&CoefficientModel::exp(), &[3.0, 5.0, 7.0, 9.0], 4.5);
    assert_margins_shrink(&CoefficientModel::mittag_leffler(2.0).unwrap(), &[2.0, 3.0, 4.0, 5.0], 4.5);
    assert_margins_shrink(&CoefficientModel::mittag_leffler(0.5).unwrap(), &[4.0, 6.0, 8.0, 10.0], 4.5);
    assert_margins_shrink(&CoefficientModel::double_exp(), &[0.5, 1.0, 1.5, 2.0], 4.5);
    assert_margins_shrink(&CoefficientModel::lindelof(1.0).unwrap(), &[1.5, 2.0, 2.5], 4.5);
    assert_margins_shrink(&CoefficientModel::unit_disk_exp(1.0).unwrap(), &[-0.1, -0.05, -0.025, -0.0125], 8.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn gram_identity_holds(
        a in prop::array::uniform3(-10.0f64..10.0),
        b in prop::array::uniform6(-10.0f64..10.0),
    ) {
        let z = |k: usize| Complex64::new(b[2 * k], b[2 * k + 1]);
        let r = gram_identity_residual(a[0], a[1], a[2], z(0), z(1), z(2));
        prop_assert!(r.residual <= 1e-12 * r.scale.max(1.0), "{:?}", r);
    }

    #[test]
    fn covariance_inequality_holds(
        c in prop::collection::vec(0.0f64..1.0, 1..30),
        shift in -10i64..10,
        theta in -3.2f64..3.2,
    ) {
        let terms: Vec<(i64, f64)> = c.iter().enumerate().map(|(k, &c)| (k as i64 + shift, c)).collect();
        let (lhs, rhs) = covariance_inequality_sides(&terms, theta);
        let g0: f64 = terms.iter().map(|(_, c)| c * c).sum();
        let g2: f64 = terms.iter().map(|&(n, c)| (n * n) as f64 * c * c).sum();
        let scale = g0 * g0 * g0 * g2;
        prop_assert!(lhs <= rhs + 1e-10 * scale.max(1e-300), "{lhs} > {rhs}");
    }

    #[test]
    fn gaussian_sums_within_bounds(b in 4.0f64..1e4, rel_a in 2.0f64..50.0, s in 1.0f64..4.0, frac in 0.05f64..1.0, j in 0i32..3) {
        let a = rel_a * b.sqrt() * s;
        let p = ((frac * b.sqrt()).floor() as u64).max(1);
        let sum = gaussian_lattice_sum(a, b, s, p, j);
        let (lo, hi) = gaussian_lattice_bounds(a, b, s, p, j);
        prop_assert!(lo <= sum && sum <= hi, "{lo} ≤ {sum} ≤ {hi}");
        let pair = gaussian_pair_sum(a, b, s, p);
        let (plo, phi) = gaussian_pair_bounds(b, p);
        prop_assert!(plo <= pair && pair <= phi, "{plo} ≤ {pair} ≤ {phi}");
    }
}

#[test]
fn gaussian_sum_bound_constants() {
    let (lo, hi) = gaussian_pair_bounds(100.0, 2);
    assert!((lo - 4.0 / E).abs() < 1e-15);
    assert!((hi - 24.0 * E.powi(4) * std::f64::consts::PI * 1e4 / 4.0).abs() < 1e-6);
}
