use std::f64::consts::PI;

use num_complex::Complex64;
use oscint_core::integrate::{
    default_grids, fourier, fubini_integrate, growth_diagnostic, integrate, locus, plancherel_roundtrip, CatalogEntry,
    Dimension, FamilySum, IntegrateError, Reason,
};
use oscint_core::model::{Domain, PreparedSum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn golden(key: &str) -> Complex64 {
    include_str!("data/golden.csv")
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect::<Vec<_>>())
        .find(|f| f[0] == key)
        .map(|f| Complex64::new(f[1].parse().unwrap(), f[2].parse().unwrap()))
        .unwrap()
}

fn ray(s: &str, a: f64) -> PreparedSum {
    PreparedSum::parse(s, Domain::ray(a)).unwrap()
}

const GOLDEN_TOL: f64 = 1e-9;
const PRODUCT_TOL: f64 = 1e-7;

#[test]
fn ray_integrals_match_reference_values() {
    for (expr, key) in [("y^(-2)*exp(i*y)", "g1"), ("y^(-3/2)*log(y)*exp(-i*y)", "g2"), ("y^(-2)*log(y)*exp(i*y)", "g3")] {
        let (r, _) = integrate(&ray(expr, 1.0)).unwrap();
        assert!(r.verdict.integrable);
        let err = (r.value - golden(key)).norm();
        assert!(err < GOLDEN_TOL, "{expr}: {} vs {} ({err:.1e})", r.value, golden(key));
        assert!(r.error_bound < 1e-7, "{expr}: bound {}", r.error_bound);
    }
}

#[test]
fn scaled_frequency_reduces_to_canonical_form() {
    // ∫_1^∞ y^{-2} e^{2iy} dy = 2 ∫_2^∞ t^{-2} e^{it} dt
    let (r, _) = integrate(&ray("y^(-2)*exp(2*i*y)", 1.0)).unwrap();
    let (s, _) = integrate(&ray("y^(-2)*exp(i*y)", 2.0)).unwrap();
    assert!((r.value - 2.0 * s.value).norm() < GOLDEN_TOL);
}

#[test]
fn non_integrable_sums_are_refused() {
    match integrate(&ray("y^(-1)*exp(i*y)", 1.0)) {
        Err(IntegrateError::NotIntegrable(v)) => {
            assert_eq!(v.reason, Reason::NonIntegrableNaive);
            assert_eq!(v.to_string(), "NonIntegrableNaive r=-1");
        }
        other => panic!("{other:?}"),
    }
    let (r, _) = integrate(&ray("0", 1.0)).unwrap();
    assert_eq!(r.value, Complex64::new(0.0, 0.0));
}

#[test]
fn cancelling_naive_parts_leave_an_integrable_sum() {
    let (r, _) = integrate(&ray("y^(-1)*exp(i*y) - y^(-1)*exp(i*y) + y^(-2)*exp(i*y)", 1.0)).unwrap();
    assert!((r.value - golden("g1")).norm() < GOLDEN_TOL);
}

#[test]
fn products_of_factors_equal_joint_integrals() {
    let g = |rho: f64, sigma: u32, orient: i32, a: f64| Dimension::new(rho, sigma, orient, a, None);
    let pairs = [
        (g(-2.0, 0, 1, 1.0), g(-2.0, 0, 1, 1.0)),
        (g(-2.0, 0, 1, 1.0), g(-1.5, 0, 1, 1.0)),
        (g(-1.5, 1, -1, 1.0), g(-2.0, 1, 1, 1.0)),
        (Dimension::new(0.0, 0, 1, 1.0, Some(1.0 + PI)), g(-3.0, 0, 1, 2.0)),
        (g(-3.0, 0, 1, 2.0), g(-1.5, 1, -1, 1.0)),
    ];
    let g1 = golden("g1");
    for (k, (d1, d2)) in pairs.into_iter().enumerate() {
        let p = fubini_integrate(&[d1, d2]).unwrap();
        let gap = (p.value - p.product_of_factors).norm();
        assert!(gap < PRODUCT_TOL, "pair {k}: {} vs {} ({gap:.1e})", p.value, p.product_of_factors);
        if k == 0 {
            assert!((p.value - g1 * g1).norm() < PRODUCT_TOL);
        }
    }
}

#[test]
fn e_abs_transform_matches_closed_form() {
    let xs = [0.0, 0.1, 0.5, 1.0, 2.0];
    for s in fourier(CatalogEntry::EAbs, &xs).unwrap() {
        let exact = 2.0 / (1.0 + 4.0 * PI * PI * s.xi * s.xi);
        assert!((s.value - exact).norm() / exact < 1e-6, "xi={}: {} vs {exact}", s.xi, s.value);
    }
}

#[test]
fn plancherel_trends_and_parseval() {
    let ys = [2.0, 4.0, 8.0, 16.0];
    let ind = plancherel_roundtrip(CatalogEntry::Indicator, &ys, default_grids(CatalogEntry::Indicator)).unwrap();
    assert!(ind.inverse_decreasing, "{:?}", ind.inverse_errors);
    assert!(ind.forward_nonincreasing, "{:?}", ind.forward_errors);
    assert!(ind.parseval_gap < 1e-4, "{}", ind.parseval_gap);

    let e = plancherel_roundtrip(CatalogEntry::EAbs, &[2.0, 8.0], default_grids(CatalogEntry::EAbs)).unwrap();
    assert!(e.forward_errors[1] < e.forward_errors[0], "{:?}", e.forward_errors);
    assert!(e.parseval_gap < 1e-4, "{}", e.parseval_gap);

    let z = plancherel_roundtrip(CatalogEntry::Zero, &ys, default_grids(CatalogEntry::Zero)).unwrap();
    assert!(z.forward_errors.iter().chain(&z.inverse_errors).all(|v| *v == 0.0));
    assert_eq!(z.f_norm_sq, 0.0);
}

#[test]
fn verdicts_agree_with_growth_on_random_naive_terms() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let rs = ["-2", "-3/2", "-1", "-1/2", "0"];
    let phases = ["", "*exp(i*y)", "*exp(i*sqrt2*y)", "*exp(-i*y^(1/2))", "*exp(i*y^(2))"];
    for _ in 0..20 {
        let r = rs[rng.gen_range(0..rs.len())];
        let logs = if rng.gen_bool(0.5) { "*log(y)" } else { "" };
        let c = rng.gen_range(1..=5);
        let expr = format!("{c}*y^({r}){logs}{}", phases[rng.gen_range(0..phases.len())]);
        let sum = ray(&expr, 1.0);
        let integrable = match integrate(&sum) {
            Ok((i, _)) => i.verdict.integrable,
            Err(IntegrateError::NotIntegrable(_)) => false,
            Err(e) => panic!("{expr}: {e}"),
        };
        let growth = growth_diagnostic(&sum, 4).unwrap();
        assert_eq!(integrable, !growth.diverges, "{expr}: blocks {:?}", growth.blocks);
    }
}

#[test]
fn locus_points_match_integrability() {
    let family: FamilySum = serde_json::from_str(
        r#"{"parameters":["x1","x2"],"entries":[
            {"coefficient":"x1","template":"exp(i*y)"},
            {"coefficient":"x2","template":"exp(i*sqrt2*y)"},
            {"coefficient":"1","template":"y^(-2)*exp(i*y)"}]}"#,
    )
    .unwrap();
    let l = locus(&family).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let x = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        assert!(l.h(&x).unwrap() > 0.0);
        assert!(growth_diagnostic(&family.instantiate(&x).unwrap(), 4).unwrap().diverges, "{x:?}");
    }
    assert!(l.contains(&[0.0, 0.0], 0.0).unwrap());
    let (r, _) = integrate(&family.instantiate(&[0.0, 0.0]).unwrap()).unwrap();
    assert!((r.value - golden("g1")).norm() < GOLDEN_TOL);
}
