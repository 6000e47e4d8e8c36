//! Integrability verdicts and values of `∫_a^∞ f(y) dy` for prepared sums,
//! plus the parametric pieces built on them: integrability loci, product
//! integrals and Fourier transforms.

mod fourier;
mod fubini;
mod locus;

use std::f64::consts::PI;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exponent::Exponent;
use crate::model::{binomial, Bound, Domain, ModelError, ParamError, PreparedSum, Term};
use crate::phase::Phase;
use crate::powersum::PowerSum;
use crate::prepare::{frozen_form, prepare, term_envelope, Decomposition, PrepareError};
use crate::quad::{self, Kernel, Oscillation, QuadError, QuadResult, RayOptions, Upper};

pub use fourier::{catalog, default_grids, fourier, fourier_sum, plancherel_roundtrip, CatalogEntry, FourierSample, PlancherelReport};
pub use fubini::{fubini_integrate, fubini_term, Dimension, ProductIntegral};
pub use locus::{growth_diagnostic, locus, FamilyEntry, FamilySum, GrowthReport, LocusComponent, LocusCondition};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrateError {
    #[error("NotIntegrable: {0}")]
    NotIntegrable(Verdict),
    #[error(transparent)]
    Prepare(#[from] PrepareError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("OracleError: {0}")]
    Oracle(#[from] QuadError),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("FamilyError: {0}")]
    Family(String),
    #[error("DimensionError: {0}")]
    Dimension(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Reason {
    AllSuperintegrable,
    NaiveDecay,
    NonIntegrableNaive,
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// `(r, s, φ)` of a naive term.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NaiveSignature {
    pub r: Exponent,
    pub s: u32,
    pub phase: Phase,
}

impl NaiveSignature {
    pub fn of(t: &Term) -> Self {
        NaiveSignature { r: t.r, s: t.s, phase: t.phase.clone() }
    }
}

impl fmt::Display for NaiveSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r={}", self.r)?;
        if self.s > 0 {
            write!(f, " s={}", self.s)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub integrable: bool,
    pub reason: Reason,
    pub offending: Vec<NaiveSignature>,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.reason)?;
        for s in &self.offending {
            write!(f, " {s}")?;
        }
        Ok(())
    }
}

/// Whether a naive term is integrable on `[a, ∞)`.
///
/// Plain naive terms need `r < −1`. Frozen corrections carry a γ whose bound
/// tends to a fixed point; for them the envelope exponent decides.
pub fn naive_term_integrable(t: &Term, a: f64) -> bool {
    if t.coeff.is_zero() {
        return true;
    }
    if t.gammas.iter().any(|g| frozen_form(g).is_some()) {
        return term_envelope(t, a).is_some_and(|e| e.integrable());
    }
    t.r < Exponent::MINUS_ONE
}

pub fn is_integrable(dec: &Decomposition) -> Verdict {
    let a = dec.domain().lower();
    let mut offending: Vec<NaiveSignature> = Vec::new();
    for t in dec.naive.terms() {
        if !naive_term_integrable(t, a) {
            let s = NaiveSignature::of(t);
            if !offending.contains(&s) {
                offending.push(s);
            }
        }
    }
    let reason = if !offending.is_empty() {
        Reason::NonIntegrableNaive
    } else if dec.naive.is_zero() {
        Reason::AllSuperintegrable
    } else {
        Reason::NaiveDecay
    };
    Verdict { integrable: offending.is_empty(), reason, offending }
}

/// Integral of one term, as reported alongside the total.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub term: String,
    pub result: QuadResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Integral {
    pub value: Complex64,
    pub error_bound: f64,
    pub verdict: Verdict,
    pub pieces: Vec<Piece>,
}

/// Prepares, checks integrability and integrates over the domain.
pub fn integrate(sum: &PreparedSum) -> Result<(Integral, Option<Decomposition>), IntegrateError> {
    match sum.domain {
        Domain::Ray { .. } => {
            let dec = prepare(sum)?;
            let r = integrate_ray(&dec)?;
            Ok((r, Some(dec)))
        }
        Domain::Interval { .. } => Ok((integrate_interval(sum)?, None)),
    }
}

/// `∫_a^∞` of a prepared decomposition on its ray.
pub fn integrate_ray(dec: &Decomposition) -> Result<Integral, IntegrateError> {
    let verdict = is_integrable(dec);
    if !verdict.integrable {
        return Err(IntegrateError::NotIntegrable(verdict));
    }
    let a = dec.domain().lower();
    let terms: Vec<&Term> = dec.superintegrable.terms().iter().chain(dec.naive.terms()).collect();
    let results: Vec<Result<QuadResult, IntegrateError>> = terms.par_iter().map(|t| term_integral(t, a)).collect();
    let mut pieces = Vec::with_capacity(terms.len());
    let mut value = Complex64::new(0.0, 0.0);
    let mut error_bound = 0.0;
    for (t, r) in terms.iter().zip(results) {
        let r = r?;
        value += r.value;
        error_bound += r.error_bound;
        pieces.push(Piece { term: t.to_string(), result: r });
    }
    Ok(Integral { value, error_bound, verdict, pieces })
}

/// `∫_a^b` of a sum on a bounded interval. Bounded cells never block
/// integrability.
pub fn integrate_interval(sum: &PreparedSum) -> Result<Integral, IntegrateError> {
    let Domain::Interval { lower, upper } = sum.domain else {
        return Err(IntegrateError::Model(ModelError::Domain(format!("{} is not a bounded interval", sum.domain))));
    };
    let results: Vec<Result<QuadResult, IntegrateError>> =
        sum.terms().par_iter().map(|t| interval_term_integral(t, lower, upper)).collect();
    let mut pieces = Vec::new();
    let mut value = Complex64::new(0.0, 0.0);
    let mut error_bound = 0.0;
    for (t, r) in sum.terms().iter().zip(results) {
        let r = r?;
        value += r.value;
        error_bound += r.error_bound;
        pieces.push(Piece { term: t.to_string(), result: r });
    }
    let verdict = Verdict { integrable: true, reason: Reason::AllSuperintegrable, offending: vec![] };
    Ok(Integral { value, error_bound, verdict, pieces })
}

fn scaled(mut r: QuadResult, c: Complex64) -> QuadResult {
    r.value *= c;
    r.error_bound *= c.norm();
    r
}

fn interval_term_integral(t: &Term, lo: f64, hi: f64) -> Result<QuadResult, IntegrateError> {
    let c = t.coeff.value();
    if c == Complex64::new(0.0, 0.0) {
        return Ok(QuadResult::zero());
    }
    let plain = t.units.is_empty() && t.gammas.is_empty() && t.s == 0 && t.r.is_integer() && t.r >= Exponent::ZERO;
    if plain {
        if let Some(w) = t.phase.as_linear().map(|w| w.to_f64()) {
            // ∫ y^n e^{iωy} dy = |ω|^{-n-1} ∫ t^n e^{±it} dt
            let n = t.r.numer() as f64;
            let k = Kernel::new(n, 0, w.signum() as i32);
            let r = quad::osc_integral(&k, lo * w.abs(), Upper::Finite(hi * w.abs()))?;
            return Ok(scaled(r, c * w.abs().powf(-n - 1.0)));
        }
    }
    let f = |y: f64| t.eval_with_error(y).map(|v| v.0).unwrap_or(Complex64::new(f64::NAN, f64::NAN));
    let mut slope: f64 = 0.0;
    for k in 0..=64 {
        let y = lo + (hi - lo) * k as f64 / 64.0;
        slope = slope.max(t.phase.derivative(y).abs());
    }
    let panel = PI / (1.0 + slope);
    // Surface evaluation errors before integrating.
    t.eval_with_error(0.5 * (lo + hi))?;
    Ok(quad::truncated_integral_panels(&f, lo, hi, panel)?)
}

/// `∫_a^∞ y^r (log y)^s dy` for `r < −1`.
fn power_log_tail(r: f64, s: u32, a: f64) -> f64 {
    let m = -(r + 1.0);
    let la = a.ln();
    let mut sum = 0.0;
    let mut fall = 1.0;
    for j in 0..=s {
        sum += fall * la.powi((s - j) as i32) / m.powi(j as i32 + 1);
        fall *= (s - j) as f64;
    }
    a.powf(-m) * sum
}

/// `∫_a^∞` of a single term.
pub fn term_integral(t: &Term, a: f64) -> Result<QuadResult, IntegrateError> {
    let c = t.coeff.value();
    if c == Complex64::new(0.0, 0.0) {
        return Ok(QuadResult::zero());
    }
    if t.units.is_empty() && t.gammas.is_empty() {
        if t.r >= Exponent::MINUS_ONE {
            return Err(QuadError::Diverges { rho: t.r.to_f64() }.into());
        }
        let r = t.r.to_f64();
        if t.phase.is_zero() {
            let v = power_log_tail(r, t.s, a);
            return Ok(QuadResult { value: c * v, error_bound: 1e-15 * (c * v).norm(), method: quad::Method::ClosedForm, pieces: 0 });
        }
        if let Some(w) = t.phase.as_linear().map(|w| w.to_f64()) {
            // y = t/|ω|: |ω|^{−r−1} Σ_j C(s,j) (−log|ω|)^{s−j} γ(r, j, ±, |ω|a)
            let aw = w.abs();
            let mut acc = QuadResult::zero();
            acc.method = quad::Method::ZeroSliceAcceleration;
            for j in 0..=t.s {
                let wj = binomial(t.s as f64, j) * (-aw.ln()).powi((t.s - j) as i32);
                if wj == 0.0 {
                    continue;
                }
                let g = quad::improper_gamma(r, j, w.signum() as i32, aw * a)?;
                acc.value += g.value * wj;
                acc.error_bound += g.error_bound * wj.abs();
                acc.pieces += g.pieces;
            }
            return Ok(scaled(acc, c * aw.powf(-r - 1.0)));
        }
    }
    let mut total = QuadResult::zero();
    for piece in split_for_integration(t)? {
        let r = numeric_term_integral(&piece, a)?;
        total.value += r.value;
        total.error_bound += r.error_bound;
        total.pieces += r.pieces;
        total.method = r.method;
    }
    Ok(total)
}

/// Additivity splits `∫_L^U = ∫_L^∞ − ∫_U^∞` on γ-factors with a growing
/// finite upper bound, so each piece oscillates with a single phase.
fn split_for_integration(t: &Term) -> Result<Vec<Term>, IntegrateError> {
    let grows = |p: &PowerSum| p.leading_exponent().is_some_and(|e| e > Exponent::ZERO);
    let k = t.gammas.iter().position(|g| {
        g.unit.is_one() && g.rho < Exponent::MINUS_ONE && frozen_form(g).is_none() && g.upper.finite().is_some_and(grows)
    });
    let Some(k) = k else {
        return Ok(vec![t.clone()]);
    };
    let g = &t.gammas[k];
    let mut rest = t.clone();
    rest.gammas.remove(k);
    let u = g.upper.finite().expect("finite upper").clone();
    let head = crate::model::GammaFactor { upper: Bound::Infinity, ..g.clone() };
    let tail = crate::model::GammaFactor { lower: u, upper: Bound::Infinity, ..g.clone() };
    let mut out = split_for_integration(&rest.clone().with_gamma(head))?;
    let neg = rest.scale(&crate::coeff::Coeff::rational(num_rational::Rational64::from_integer(-1)));
    out.extend(split_for_integration(&neg.with_gamma(tail))?);
    Ok(out)
}

/// Phase of the term plus the phases carried by ray γ-factors whose lower
/// bound grows: `∫_{L(y)}^∞ k(t)e^{iωt}dt ≈ k(L) e^{iωL}/(−iω)`.
fn effective_phase(t: &Term) -> Phase {
    let mut p = t.phase.clone();
    for g in &t.gammas {
        if g.upper != Bound::Infinity {
            continue;
        }
        let pos: Vec<_> = g
            .lower
            .terms()
            .iter()
            .filter(|(e, _)| *e > Exponent::ZERO)
            .map(|(e, c)| (*e, if g.orientation > 0 { c.clone() } else { -c }))
            .collect();
        if let Ok(q) = Phase::from_terms(pos) {
            p = p.add(&q);
        }
    }
    p
}

fn numeric_term_integral(t: &Term, a: f64) -> Result<QuadResult, IntegrateError> {
    let env = term_envelope(t, a).filter(|e| e.integrable()).ok_or_else(|| {
        IntegrateError::NotIntegrable(Verdict {
            integrable: false,
            reason: Reason::NonIntegrableNaive,
            offending: vec![NaiveSignature::of(t)],
        })
    })?;
    // Largest ratio of oracle error to envelope seen at the nodes.
    let worst = AtomicU64::new(0f64.to_bits());
    let failure = std::sync::Mutex::new(None);
    let f = |y: f64| match t.eval_with_error(y) {
        Ok((v, e)) => {
            let ratio = e / env.eval(y).max(f64::MIN_POSITIVE);
            worst.fetch_max(ratio.to_bits(), Ordering::Relaxed);
            v
        }
        Err(err) => {
            failure.lock().expect("poisoned").get_or_insert(err);
            Complex64::new(0.0, 0.0)
        }
    };
    let phase = effective_phase(t);
    let r = if phase.is_zero() {
        quad::decaying_ray(&f, a, -env.exponent.to_f64() - 1e-9, 1e-13)?
    } else {
        let ph = |y: f64| phase.eval(y);
        let dph = |y: f64| phase.derivative(y);
        let start = monotone_start(&phase, a);
        let head = if start > a { quad::truncated_integral(&f, a, start)? } else { QuadResult::zero() };
        let osc = Oscillation::General { phase: &ph, derivative: &dph };
        let mut tail = quad::oscillatory_ray(&f, osc, start, &RayOptions::default())?;
        tail.value += head.value;
        tail.error_bound += head.error_bound;
        tail.pieces += head.pieces;
        tail
    };
    if let Some(err) = failure.into_inner().expect("poisoned") {
        return Err(err.into());
    }
    let eval_error = f64::from_bits(worst.load(Ordering::Relaxed)) * env.tail_integral(a);
    Ok(QuadResult { error_bound: r.error_bound + eval_error, ..r })
}

/// A point past which `φ'` keeps the sign of the leading coefficient.
fn monotone_start(phase: &Phase, a: f64) -> f64 {
    let lead = phase.leading().map(|c| c.to_f64().signum()).unwrap_or(1.0);
    let mut last_bad = None;
    for k in 0..=80 {
        let y = a * 2f64.powf(k as f64 / 2.0);
        if phase.derivative(y) * lead <= 0.0 {
            last_bad = Some(y);
        }
    }
    match last_bad {
        None => a,
        Some(y) => 2.0 * y,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sum(s: &str, a: f64) -> PreparedSum {
        PreparedSum::parse(s, Domain::ray(a)).unwrap()
    }

    #[test]
    fn verdicts() {
        let d = prepare(&sum("y^(-1)*exp(i*y)", 1.0)).unwrap();
        let v = is_integrable(&d);
        assert!(!v.integrable);
        assert_eq!(v.to_string(), "NonIntegrableNaive r=-1");
        let d = prepare(&sum("y^(-3/2)*exp(i*y)", 1.0)).unwrap();
        assert_eq!(is_integrable(&d).reason, Reason::AllSuperintegrable);
        let (r, _) = integrate(&PreparedSum::zero(Domain::ray(1.0))).unwrap();
        assert_eq!(r.value, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn bounded_interval_closed_form() {
        let s = PreparedSum::parse("exp(i*y)", Domain::Interval { lower: -PI / 2.0, upper: PI / 2.0 }).unwrap();
        let (r, _) = integrate(&s).unwrap();
        assert!((r.value - Complex64::new(2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn scaled_frequency_matches_panels() {
        let s = sum("y^(-2)*log(y)*exp(2*i*y)", 1.0);
        let (r, _) = integrate(&s).unwrap();
        // same integral through the general-phase slicer
        let g = numeric_term_integral(&s.terms()[0], 1.0).unwrap();
        assert!((r.value - g.value).norm() < 1e-9, "{} vs {}", r.value, g.value);
    }

    #[test]
    fn power_log_closed_form() {
        // ∫_2^∞ y^{-3} log y dy = (2 log 2 + 1)/16
        let v = power_log_tail(-3.0, 1, 2.0);
        assert!((v - (2.0 * 2f64.ln() + 1.0) / 16.0).abs() < 1e-15);
    }
}
