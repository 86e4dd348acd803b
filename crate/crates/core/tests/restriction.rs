use gaf_zeros::admissibility::check_local;
use gaf_zeros::restriction::{
    export, interval_partition, restrict, restrict_with_plan, similarity_report, RestrictionOptions,
};
use gaf_zeros::{CoefficientModel, Error};

#[test]
fn exp_blocks_match_arithmetic() {
    let g = CoefficientModel::exp();
    let part = interval_partition(&g, 3).unwrap();
    assert!((part.t_ell(2) - 4.158883).abs() < 1e-6);
    let (_, plan) = restrict(&g, &part, &RestrictionOptions::default()).unwrap();
    let b2 = plan.block(2).unwrap();
    assert_eq!((b2.p, b2.lo, b2.hi, b2.kept), (8, 64, 729, 84));
    let b3 = plan.block(3).unwrap();
    assert_eq!((b3.p, b3.lo, b3.hi, b3.kept), (27, 729, 4096, 125));
    // Independent count straight from the definition of δₙ.
    let kept = (64..729).filter(|n| n % 8 == 0).count() as u64;
    assert_eq!(kept, 84);
    assert!(plan.keeps(64) && plan.keeps(728) && !plan.keeps(65) && !plan.keeps(729 + 1));
    assert!(plan.keeps(729) && plan.keeps(4077) && !plan.keeps(4096));
}

#[test]
fn kept_coefficients_are_unchanged() {
    let g = CoefficientModel::exp();
    let part = interval_partition(&g, 3).unwrap();
    let (r, plan) = restrict(&g, &part, &RestrictionOptions::default()).unwrap();
    for n in 0..5000u64 {
        if plan.keeps(n) {
            assert_eq!(r.log_coeff(n), g.log_coeff(n));
        } else {
            assert_eq!(r.log_coeff(n), f64::NEG_INFINITY);
        }
    }
}

#[test]
fn restriction_is_idempotent() {
    let g = CoefficientModel::exp();
    let part = interval_partition(&g, 3).unwrap();
    let (once, plan) = restrict(&g, &part, &RestrictionOptions::default()).unwrap();
    let twice = restrict_with_plan(&once, &plan);
    assert_eq!(once.log_coeffs(0, 5000), twice.log_coeffs(0, 5000));
    assert_eq!(once.tag(), twice.tag());
}

#[test]
fn excluded_measure_decreases() {
    let part = interval_partition(&CoefficientModel::exp(), 6).unwrap();
    let excluded: Vec<f64> = (1..=6).map(|ell| part.excluded_measure(ell)).collect();
    for w in excluded.windows(2) {
        assert!(w[1] < w[0], "{excluded:?}");
    }
    // For exp every long interval loses 4/ℓ², so the total stays below 4π²/6 + |T₁|.
    let total: f64 = excluded.iter().sum();
    assert!(total < 4.0 * std::f64::consts::PI.powi(2) / 6.0 + part.length(1));
}

#[test]
fn similarity_at_interior_midpoints() {
    let g = CoefficientModel::exp();
    let part = interval_partition(&g, 3).unwrap();
    let (r, _) = restrict(&g, &part, &RestrictionOptions::default()).unwrap();
    let mids: Vec<f64> = [2, 3]
        .iter()
        .map(|&ell| {
            let (a, b) = part.interior(ell).unwrap();
            0.5 * (a + b)
        })
        .collect();
    let rows = similarity_report(&g, &r, &part, &[mids[0], mids[1], 4.2]).unwrap();
    for row in &rows[..2] {
        assert!(row.ell.is_some());
        assert!((0.1..=10.0).contains(&row.a_ratio), "{row:?}");
        assert!((0.1..=10.0).contains(&row.b_ratio), "{row:?}");
    }
    assert_eq!(rows[2].ell, None);
}

#[test]
fn restricted_model_is_locally_admissible_inside() {
    let g = CoefficientModel::exp();
    let part = interval_partition(&g, 3).unwrap();
    let (r, _) = restrict(&g, &part, &RestrictionOptions::default()).unwrap();
    let (a, b) = part.interior(2).unwrap();
    let t = 0.5 * (a + b);
    let delta = r.stats(t).unwrap().b.powf(-0.5);
    let rep = check_local(&r, t, delta, 0.1, 0.5).unwrap();
    assert!(rep.passed, "{rep:?}");
}

#[test]
fn export_round_trips() {
    let g = CoefficientModel::exp();
    let part = interval_partition(&g, 2).unwrap();
    let (r, plan) = restrict(&g, &part, &RestrictionOptions::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("restricted.tsv");
    let mut buf = Vec::new();
    export(&r, &plan, &mut buf).unwrap();
    std::fs::write(&path, buf).unwrap();
    let back = CoefficientModel::from_file(&path).unwrap();
    let hi = plan.max_index() + 10;
    assert_eq!(back.log_coeffs(0, hi), r.log_coeffs(0, hi));
    let t = 5.0;
    assert_eq!(back.stats(t).unwrap(), r.stats(t).unwrap());
}

#[test]
fn ell_min_outside_partition_is_rejected() {
    let g = CoefficientModel::exp();
    let part = interval_partition(&g, 3).unwrap();
    let opts = RestrictionOptions { ell_min: 4, ..Default::default() };
    let err = restrict(&g, &part, &opts);
    assert!(matches!(err, Err(Error::InvalidArgument(_))), "{err:?}");
}
