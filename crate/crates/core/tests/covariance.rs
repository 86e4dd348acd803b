use std::collections::BTreeMap;

use gaf_zeros::covariance::{central_index, read_coefficient_file, write_coefficients};
use gaf_zeros::CoefficientModel;
use num_complex::Complex64;
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn assert_closed_form(model: &CoefficientModel, t: f64) -> Result<(), TestCaseError> {
    let forms = model.reference_forms().expect("family has closed forms");
    let (a, b) = forms.ab(t.exp());
    let s = model.stats(t).unwrap();
    prop_assert!(rel(s.a, a) < 1e-8, "{} t = {t}: A {} vs {}", model.tag(), s.a, a);
    prop_assert!(rel(s.b, b) < 1e-8, "{} t = {t}: B {} vs {}", model.tag(), s.b, b);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exp_closed_form(t in -5.0f64..9.0) {
        assert_closed_form(&CoefficientModel::exp(), t)?;
    }

    #[test]
    fn unit_disk_exp_closed_form(alpha in 0.5f64..3.0, t in -3.0f64..-0.1) {
        assert_closed_form(&CoefficientModel::unit_disk_exp(alpha).unwrap(), t)?;
    }

    #[test]
    fn double_exp_closed_form(t in -3.0f64..1.8) {
        assert_closed_form(&CoefficientModel::double_exp(), t)?;
    }

    #[test]
    fn two_term_closed_form(n in 0u64..6, gap in 1u64..6, cn in 0.1f64..10.0, cm in 0.1f64..10.0, t in -4.0f64..4.0) {
        assert_closed_form(&CoefficientModel::two_term(n, n + gap, cn, cm).unwrap(), t)?;
    }

    #[test]
    fn hyperbolic_closed_form(l in 0.3f64..5.0, t in -4.0f64..-0.02) {
        assert_closed_form(&CoefficientModel::hyperbolic(l).unwrap(), t)?;
    }

    #[test]
    fn mean_increases_with_t(t in -3.0f64..4.5, dt in 0.01f64..1.0, alpha in 1.0f64..2.0) {
        for g in [CoefficientModel::exp(), CoefficientModel::mittag_leffler(alpha).unwrap(), CoefficientModel::lindelof(alpha).unwrap()] {
            let (t0, t1) = (t / 3.0, t / 3.0 + dt);
            prop_assert!(g.stats(t1).unwrap().a > g.stats(t0).unwrap().a, "{}", g.tag());
        }
    }

    #[test]
    fn char_moments_derivative(t in -2.0f64..5.0, theta in -3.0f64..3.0) {
        // φ'(θ) = i E[X e^{iθX}] = i (m + Aφ)
        let w = CoefficientModel::exp().window(t).unwrap();
        let a = w.stats().a;
        let h = 1e-5;
        let (phi_p, _) = w.char_moments(theta + h);
        let (phi_m, _) = w.char_moments(theta - h);
        let (phi, m) = w.char_moments(theta);
        let fd = (phi_p - phi_m) / (2.0 * h);
        let exact = Complex64::i() * (m + phi * a);
        prop_assert!((fd - exact).norm() < 1e-6 * (1.0 + a * a));
    }

    #[test]
    fn log_mgf_is_a_log_h_difference(t in -2.0f64..5.0, s in -0.3f64..0.3) {
        // Small |τ|√B keeps the tilted mass away from the trimmed tails.
        let g = CoefficientModel::exp();
        let w0 = g.window(t).unwrap();
        let tau = s / w0.stats().b.sqrt().max(1.0);
        let w1 = g.window(t + tau).unwrap();
        let a = w0.stats().a;
        let lhs = w0.log_centered_mgf(Complex64::new(tau, 0.0));
        let rhs = w1.log_h() - w0.log_h() - tau * a;
        prop_assert!(lhs.im.abs() < 1e-12);
        prop_assert!((lhs.re - rhs).abs() < 1e-8 * (1.0 + rhs.abs()), "{} vs {}", lhs.re, rhs);
    }

    #[test]
    fn probabilities_sum_to_one(t in -3.0f64..8.0) {
        let w = CoefficientModel::exp().window(t).unwrap();
        let s: f64 = w.p().iter().sum();
        prop_assert!((s - 1.0).abs() < 1e-12);
        prop_assert!(w.tail_mass_bound() <= 1e-12);
    }

    #[test]
    fn file_round_trip(values in prop::collection::vec(prop::option::of(-50.0f64..50.0), 1..80)) {
        let log_coeffs: Vec<f64> = values.iter().map(|v| v.unwrap_or(f64::NEG_INFINITY)).collect();
        prop_assume!(log_coeffs.iter().any(|v| v.is_finite()));
        let g = CoefficientModel::from_log_coeffs("table", log_coeffs.clone()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("coeffs.tsv");
        let mut buf = Vec::new();
        write_coefficients(&g, log_coeffs.len() as u64 - 1, &mut buf).unwrap();
        std::fs::write(&path, &buf).unwrap();
        let back = read_coefficient_file(&path).unwrap();
        for (n, &l) in log_coeffs.iter().enumerate() {
            prop_assert_eq!(back.log_coeff(n as u64), l);
        }
    }
}

#[test]
fn family_constructor_by_name() {
    let mut params = BTreeMap::new();
    params.insert("alpha".to_string(), 1.0);
    let g = CoefficientModel::family("mittag_leffler", &params).unwrap();
    // α = 1 is the exponential.
    let e = CoefficientModel::exp();
    for n in [0u64, 1, 7, 40] {
        assert!((g.log_coeff(n) - e.log_coeff(n)).abs() < 1e-12);
    }
    assert!(CoefficientModel::family("no_such_family", &params).is_err());
}

#[test]
fn central_index_of_exp() {
    // Maximal term of Σ xⁿ/n! at x = r² = e⁶ is n = ⌊x⌋.
    let info = central_index(&CoefficientModel::exp(), 3f64.exp(), 0.25).unwrap();
    assert_eq!(info.n, 403);
}

#[test]
fn unit_disk_mean_at_point_nine() {
    let g = CoefficientModel::unit_disk_exp(1.0).unwrap();
    let a = g.stats(2.0 * 0.9f64.ln()).unwrap().a;
    assert!((a - 22.4377).abs() < 1e-4);
}
