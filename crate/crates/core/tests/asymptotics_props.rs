use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use num_rational::Rational64;
use oscint_core::asymptotics::{
    check_uniqueness, expand, limit, si_demonstration, AsymptoticsError, ScaleElement,
};
use oscint_core::coeff::Coeff;
use oscint_core::exponent::Exponent;
use oscint_core::model::{Domain, PreparedSum};
use oscint_core::phase::Phase;
use proptest::prelude::*;

fn parsed(s: &str) -> PreparedSum {
    PreparedSum::parse(s, Domain::ray(1.0)).unwrap_or_else(|e| panic!("{s}: {e}"))
}

fn el(r: i64, d: i64, s: u32) -> ScaleElement {
    ScaleElement::new(Exponent::new(r, d), s)
}

#[test]
fn binomial_unit_expands_term_by_term() {
    let e = expand(&parsed("(1+y^(-1))^(1/2)*exp(i*y)"), 2).unwrap();
    assert_eq!(e.scale, vec![el(0, 1, 0), el(-1, 1, 0), el(-2, 1, 0)]);
    let lin = Phase::linear(oscint_core::constant::ConstantValue::one());
    let want = [Rational64::new(1, 1), Rational64::new(1, 2), Rational64::new(-1, 8)];
    for (c, w) in e.coefficients.iter().zip(want) {
        assert_eq!(c.atoms.len(), 1);
        assert_eq!(c.atoms[0].phase, lin);
        assert_eq!(c.atoms[0].c, Coeff::rational(w));
    }
    assert_eq!(e.next, Some(el(-3, 1, 0)));
    // Next binomial coefficient C(1/2, 3) = 1/16 bounds the remainder constant from below.
    assert!(e.remainder_c > 0.06 && e.remainder_c < 0.07, "{}", e.remainder_c);
}

#[test]
fn exponential_sums_are_a_single_coefficient() {
    let e = expand(&parsed("exp(i*y) + exp(i*sqrt2*y)"), 3).unwrap();
    assert_eq!(e.scale, vec![ScaleElement::ONE]);
    assert_eq!(e.coefficients[0].atoms.len(), 2);
    assert!(e.next.is_none());
    assert!(e.remainder_c < 1e-14);
}

#[test]
fn remainder_constant_is_stable() {
    for expr in [
        "(1+y^(-1))^(1/2)*exp(i*y)",
        "y*exptail(i*y^(-1/2), 0)",
        "(1+y^(-1/2)+y^(-1))^(-3/2) + log(y)*y^(-1)",
        "gamma(0, 0, 1, 1, 1+y^(-1))",
    ] {
        let f = parsed(expr);
        for n in 0..=5 {
            let e = expand(&f, n).unwrap();
            let c3 = e.checks.iter().find(|c| c.y == 1e3).unwrap().ratio;
            let c4 = e.checks.iter().find(|c| c.y == 1e4).unwrap().ratio;
            assert!(c4 <= 10.0 * c3 + 1e-12, "{expr} N={n}: C(1e4)={c4:e} vs C(1e3)={c3:e}");
        }
    }
}

#[test]
fn frozen_correction_expands_in_the_bound_shift() {
    // ∫_1^{1+1/y} e^{it} dt = e^{i}·Σ_{k≥1} i^{k−1}/(k!·y^k).
    let e = expand(&parsed("gamma(0, 0, 1, 1, 1+y^(-1))"), 4).unwrap();
    let mut fact = 1.0;
    for (k, (g, c)) in e.scale.iter().zip(&e.coefficients).enumerate() {
        let k = k + 1;
        fact *= k as f64;
        assert_eq!(*g, el(-(k as i64), 1, 0));
        let want = Complex64::from_polar(1.0, 1.0) * Complex64::new(0.0, 1.0).powu(k as u32 - 1) / fact;
        assert!((c.eval(5.0) - want).norm() < 1e-13, "k={k}");
    }
}

#[test]
fn y_dependent_rays_are_not_naive() {
    let err = expand(&parsed("gamma(-2, 0, 1, y, inf)"), 2).unwrap_err();
    assert!(matches!(err, AsymptoticsError::NotNaive(_)), "{err}");
}

#[test]
fn uniqueness_on_fixed_examples() {
    for expr in ["(1+y^(-1))^(1/2)*exp(i*y)", "3*y - 2*y + y^(-1)*log(y)", "exp(i*y)*(1 + 2*y^(-1))"] {
        assert!(check_uniqueness(&parsed(expr), 4).unwrap(), "{expr}");
    }
}

fn term_strategy() -> impl Strategy<Value = String> {
    let coeff = (-4i64..=4, 1i64..=3).prop_filter("nonzero", |(n, _)| *n != 0);
    let r = prop::sample::select(vec!["", "*y^(-1/2)", "*y^(-1)", "*y^(-3/2)", "*y^(-2)", "*y"]);
    let s = prop::sample::select(vec!["", "*log(y)"]);
    let phase = prop::sample::select(vec!["", "*exp(i*y)", "*exp(i*sqrt2*y)", "*exp(-i*y^(1/2))"]);
    let unit = prop::sample::select(vec!["", "*(1+y^(-1))^(1/2)", "*exptail(i*y^(-1), 0)", "*(1+y^(-1/2))^(-1)"]);
    (coeff, r, s, phase, unit).prop_map(|((n, d), r, s, p, u)| format!("({n}/{d}){r}{s}{p}{u}"))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 20, ..ProptestConfig::default() })]

    #[test]
    fn expansions_do_not_depend_on_the_written_form(terms in prop::collection::vec(term_strategy(), 1..5)) {
        let f = parsed(&terms.join(" + "));
        prop_assert!(check_uniqueness(&f, 3).unwrap());
        // Re-associating the written sum gives the same expansion.
        let mut rev = terms.clone();
        rev.reverse();
        let g = parsed(&rev.join(" + "));
        let (a, b) = (expand(&f, 3).unwrap(), expand(&g, 3).unwrap());
        prop_assert_eq!(a.scale, b.scale);
        prop_assert_eq!(a.coefficients, b.coefficients);
    }
}

#[test]
fn oscillation_has_no_limit() {
    let r = limit(&parsed("exp(i*y)")).unwrap();
    assert!(!r.exists && r.value.is_none());
    let eps = r.certificate.epsilon.unwrap();
    assert!((eps - 0.4).abs() < 1e-9);
    let dv = r.certificate.dovetail.unwrap();
    assert_eq!(dv.pairs.len(), 11);
    assert!(dv.separated && dv.increasing);
}

#[test]
fn decaying_oscillation_has_limit_three() {
    let r = limit(&parsed("3 + y^(-1/2)*exp(i*y^(1/2))")).unwrap();
    assert!(r.exists);
    assert!((r.value.unwrap() - Complex64::new(3.0, 0.0)).norm() < 1e-15);
    let d = r.certificate.decay.as_ref().unwrap();
    assert_eq!(d.element, el(-1, 2, 0));
    assert_eq!(r.certificate.checks.len(), 3);
    for c in &r.certificate.checks {
        assert!(c.ok && c.deviation <= 10.0 * c.y.powf(-0.5), "{c:?}");
    }
}

#[test]
fn cancelled_growth_has_limit_zero() {
    let r = limit(&parsed("y*exp(i*y) - y*exp(i*y)")).unwrap();
    assert!(r.exists);
    assert_eq!(r.value, Some(Complex64::new(0.0, 0.0)));
}

#[test]
fn unbounded_terms_obstruct() {
    for expr in ["y", "log(y)", "y^(1/2)*exp(i*y)", "1 + exp(i*sqrt2*y) + y^(-1)"] {
        let r = limit(&parsed(expr)).unwrap();
        assert!(!r.exists, "{expr}");
        let dv = r.certificate.dovetail.unwrap();
        assert!(dv.separated && dv.increasing, "{expr}: {dv:?}");
    }
}

#[test]
fn sine_integral_family_tends_to_half_pi() {
    let s = parsed("-1/2*i*gamma(-1,0,1,1,y) + 1/2*i*gamma(-1,0,-1,1,y) + 0.946083070367183");
    let r = limit(&s).unwrap();
    assert!(r.exists);
    assert!((r.value.unwrap().re - FRAC_PI_2).abs() < 1e-9);
    assert!(r.certificate.checks.iter().all(|c| c.ok), "{:?}", r.certificate.checks);
}

#[test]
fn sine_integral_matches_its_asymptotic_formula() {
    let r = si_demonstration(20.0, 2).unwrap();
    assert!((r.si - 1.5482417010434398).abs() < 1e-12);
    assert!((r.next_term - 24.0 / 20f64.powi(5)).abs() < 1e-18);
    assert!(r.within_next_term, "{r:?}");
    assert!(!r.cos_series.convergent);
}
