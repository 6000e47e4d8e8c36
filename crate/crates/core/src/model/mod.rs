//! Expression fragment: sums of prepared generators
//! `c·y^r·(log y)^s·e^{iφ(y)}·units·Πγ` on a ray or an interval.

mod gamma;
mod param;
mod parse;
mod unit;

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use num_complex::Complex64;
use num_rational::Rational64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use gamma::{Bound, GammaFactor, TailBound, UnitSeries, UNIT_ORDER};
pub(crate) use gamma::abs_kernel_tail;
pub use param::{ParamError, ParamExpr};
pub use parse::parse_phase;
pub use unit::{binomial, binomial_remainder, exp_remainder, UnitFactor};

use crate::coeff::Coeff;
use crate::constant::ConstantValue;
use crate::exponent::Exponent;
use crate::phase::Phase;
use crate::powersum::PowerSum;
use crate::quad::QuadError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("SyntaxError at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("GrammarError: {0}")]
    Grammar(String),
    #[error("DomainError: {0}")]
    Domain(String),
    #[error("DomainMismatch: {0} vs {1}")]
    DomainMismatch(Domain, Domain),
    #[error("OracleError: {0}")]
    Oracle(#[from] QuadError),
}

/// Where a sum lives: the ray `[a, ∞)` or the interval `[a, b]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Ray { lower: f64 },
    Interval { lower: f64, upper: f64 },
}

impl Default for Domain {
    fn default() -> Self {
        Domain::Ray { lower: 1.0 }
    }
}

impl Domain {
    pub fn ray(lower: f64) -> Self {
        Domain::Ray { lower }
    }

    pub fn lower(&self) -> f64 {
        match self {
            Domain::Ray { lower } | Domain::Interval { lower, .. } => *lower,
        }
    }

    pub fn upper(&self) -> Option<f64> {
        match self {
            Domain::Ray { .. } => None,
            Domain::Interval { upper, .. } => Some(*upper),
        }
    }

    pub fn contains(&self, y: f64) -> bool {
        y >= self.lower() && self.upper().is_none_or(|u| y <= u)
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Ray { lower } => write!(f, "[{lower}, inf)"),
            Domain::Interval { lower, upper } => write!(f, "[{lower}, {upper}]"),
        }
    }
}

/// One generator `c·y^r·(log y)^s·e^{iφ(y)}·Π units·Π γ`.
///
/// Two or more γ-factors mark a product integral.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coeff: Coeff,
    pub r: Exponent,
    pub s: u32,
    #[serde(default, skip_serializing_if = "Phase::is_zero")]
    pub phase: Phase,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub units: Vec<UnitFactor>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gammas: Vec<GammaFactor>,
}

/// Everything about a term except its coefficient.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Signature {
    pub r: Exponent,
    pub s: u32,
    pub phase: Phase,
    pub units: Vec<UnitFactor>,
    pub gammas: Vec<GammaFactor>,
}

impl Signature {
    /// `(r, s)` descending, then phase, units and γ-factors ascending.
    pub fn canonical_cmp(&self, other: &Self) -> Ordering {
        other
            .r
            .cmp(&self.r)
            .then(other.s.cmp(&self.s))
            .then_with(|| self.phase.cmp(&other.phase))
            .then_with(|| self.units.cmp(&other.units))
            .then_with(|| self.gammas.cmp(&other.gammas))
    }
}

impl Term {
    pub fn constant(c: Coeff) -> Self {
        Term { coeff: c, r: Exponent::ZERO, s: 0, phase: Phase::zero(), units: Vec::new(), gammas: Vec::new() }
    }

    pub fn monomial(c: Coeff, r: Exponent, s: u32) -> Self {
        Term { r, s, ..Term::constant(c) }
    }

    pub fn with_phase(mut self, phase: Phase) -> Self {
        self.phase = phase;
        self
    }

    pub fn with_unit(mut self, u: UnitFactor) -> Self {
        self.units.push(u);
        self
    }

    pub fn with_gamma(mut self, g: GammaFactor) -> Self {
        self.gammas.push(g);
        self
    }

    pub fn signature(&self) -> Signature {
        Signature {
            r: self.r,
            s: self.s,
            phase: self.phase.clone(),
            units: self.units.clone(),
            gammas: self.gammas.clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeff.is_zero()
    }

    /// No γ-factor depends on `y`.
    pub fn gammas_y_free(&self) -> bool {
        self.gammas.iter().all(GammaFactor::is_y_free)
    }

    pub fn mul(&self, other: &Term) -> Term {
        let mut units = self.units.clone();
        units.extend(other.units.iter().cloned());
        let mut gammas = self.gammas.clone();
        gammas.extend(other.gammas.iter().cloned());
        Term {
            coeff: self.coeff.mul(&other.coeff),
            r: self.r + other.r,
            s: self.s + other.s,
            phase: self.phase.add(&other.phase),
            units,
            gammas,
        }
    }

    pub fn conj(&self) -> Term {
        Term {
            coeff: self.coeff.conj(),
            r: self.r,
            s: self.s,
            phase: self.phase.neg(),
            units: self.units.iter().map(UnitFactor::conj).collect(),
            gammas: self.gammas.iter().map(GammaFactor::conj).collect(),
        }
    }

    pub fn scale(&self, c: &Coeff) -> Term {
        Term { coeff: self.coeff.mul(c), ..self.clone() }
    }

    /// `c·y^r·(log y)^s·e^{iφ}·units`, leaving out the γ-factors.
    pub fn prefactor(&self, y: f64) -> Result<Complex64, ModelError> {
        let mut v = self.coeff.value() * y.powf(self.r.to_f64());
        if self.s > 0 {
            v *= y.ln().powi(self.s as i32);
        }
        if !self.phase.is_zero() {
            v *= Complex64::from_polar(1.0, self.phase.eval(y));
        }
        for u in &self.units {
            v *= u.eval(y)?;
        }
        Ok(v)
    }

    /// Value at `y` and an error bound from the γ oracle calls.
    pub fn eval_with_error(&self, y: f64) -> Result<(Complex64, f64), ModelError> {
        let pre = self.prefactor(y)?;
        if self.gammas.is_empty() {
            return Ok((pre, 0.0));
        }
        let mut value = pre;
        let mut rel = 0.0;
        for g in &self.gammas {
            let r = g.eval(y)?;
            value *= r.value;
            rel += r.error_bound / r.value.norm().max(f64::MIN_POSITIVE);
        }
        let err = if value.norm() > 0.0 {
            value.norm() * rel
        } else {
            // Some γ vanished; bound by the product of magnitudes plus errors.
            let mut b = pre.norm();
            for g in &self.gammas {
                let r = g.eval(y)?;
                b *= r.value.norm() + r.error_bound;
            }
            b
        };
        Ok((value, err))
    }

    /// Merges whole exponential tails and whole binomials with equal bases,
    /// then sorts factor lists. Returns several terms when a merged binomial
    /// power became a natural number and had to be expanded.
    fn canonical(mut self) -> Vec<Term> {
        let mut psi = PowerSum::zero();
        let mut powers: Vec<(PowerSum, Exponent)> = Vec::new();
        let mut rest = Vec::new();
        for u in self.units.drain(..) {
            match u {
                UnitFactor::ExpTail { psi: p, skip: 0 } => psi = psi.add(&p),
                UnitFactor::BinomialTail { base, power, skip: 0 } => match powers.iter_mut().find(|(b, _)| *b == base) {
                    Some((_, p)) => *p = *p + power,
                    None => powers.push((base, power)),
                },
                other => rest.push(other),
            }
        }
        if !psi.is_zero() {
            rest.push(UnitFactor::ExpTail { psi, skip: 0 });
        }
        let mut expand = Vec::new();
        for (base, power) in powers {
            if power.is_zero() {
                continue;
            }
            if power.is_integer() && power > Exponent::ZERO {
                expand.push((base, power.numer() as u32));
            } else {
                rest.push(UnitFactor::BinomialTail { base, power, skip: 0 });
            }
        }
        rest.sort();
        self.units = rest;
        self.gammas.sort();
        let mut out = vec![self];
        for (base, n) in expand {
            let mut factor = vec![Term::constant(Coeff::one())];
            factor.extend(base.terms().iter().map(|(e, c)| Term::monomial(Coeff::real(c.clone()), *e, 0)));
            for _ in 0..n {
                out = out.iter().flat_map(|t| factor.iter().map(move |f| t.mul(f))).collect();
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for g in &self.gammas {
            g.validate()?;
        }
        for u in &self.units {
            match u {
                UnitFactor::ExpTail { psi, skip } => {
                    UnitFactor::exp_tail(psi.clone(), *skip)?;
                }
                UnitFactor::BinomialTail { base, power, skip } => {
                    UnitFactor::binomial_tail(base.clone(), *power, *skip)?;
                }
            }
        }
        Ok(())
    }
}

/// Normalized finite sum of terms with pairwise distinct signatures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSum")]
pub struct PreparedSum {
    pub domain: Domain,
    terms: Vec<Term>,
}

#[derive(Deserialize)]
struct RawSum {
    #[serde(default)]
    domain: Domain,
    terms: Vec<Term>,
}

impl TryFrom<RawSum> for PreparedSum {
    type Error = ModelError;
    fn try_from(raw: RawSum) -> Result<Self, ModelError> {
        for t in &raw.terms {
            t.validate()?;
        }
        Ok(PreparedSum::new(raw.domain, raw.terms))
    }
}

impl PreparedSum {
    pub fn new(domain: Domain, terms: Vec<Term>) -> Self {
        PreparedSum { domain, terms }.normalize()
    }

    pub fn zero(domain: Domain) -> Self {
        PreparedSum { domain, terms: Vec::new() }
    }

    pub fn constant(domain: Domain, c: Coeff) -> Self {
        PreparedSum::new(domain, vec![Term::constant(c)])
    }

    pub fn single(domain: Domain, t: Term) -> Self {
        PreparedSum::new(domain, vec![t])
    }

    pub fn parse(text: &str, domain: Domain) -> Result<Self, ModelError> {
        parse::parse(text, domain)
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn into_terms(self) -> Vec<Term> {
        self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn with_domain(&self, domain: Domain) -> Self {
        PreparedSum { domain, terms: self.terms.clone() }
    }

    /// Merges like signatures, drops zero terms, sorts canonically.
    pub fn normalize(self) -> Self {
        let mut order: Vec<Signature> = Vec::new();
        let mut merged: HashMap<Signature, Coeff> = HashMap::new();
        for t in self.terms.into_iter().flat_map(Term::canonical) {
            let sig = t.signature();
            match merged.get_mut(&sig) {
                Some(c) => *c = c.add(&t.coeff),
                None => {
                    order.push(sig.clone());
                    merged.insert(sig, t.coeff);
                }
            }
        }
        order.sort_by(Signature::canonical_cmp);
        let terms: Vec<Term> = order
            .into_iter()
            .filter_map(|sig| {
                let coeff = merged.remove(&sig)?;
                (!coeff.is_zero()).then(|| Term {
                    coeff,
                    r: sig.r,
                    s: sig.s,
                    phase: sig.phase,
                    units: sig.units,
                    gammas: sig.gammas,
                })
            })
            .collect();
        let out = PreparedSum { domain: self.domain, terms };
        debug_assert!(out.signatures_distinct());
        out
    }

    pub fn signatures_distinct(&self) -> bool {
        self.terms.windows(2).all(|w| w[0].signature().canonical_cmp(&w[1].signature()) == Ordering::Less)
    }

    fn same_domain(&self, other: &PreparedSum) -> Result<(), ModelError> {
        if self.domain == other.domain {
            Ok(())
        } else {
            Err(ModelError::DomainMismatch(self.domain, other.domain))
        }
    }

    pub fn add(&self, other: &PreparedSum) -> Result<PreparedSum, ModelError> {
        self.same_domain(other)?;
        let terms = self.terms.iter().chain(&other.terms).cloned().collect();
        Ok(PreparedSum::new(self.domain, terms))
    }

    pub fn sub(&self, other: &PreparedSum) -> Result<PreparedSum, ModelError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> PreparedSum {
        self.scale(&Coeff::rational(Rational64::from_integer(-1)))
    }

    pub fn scale(&self, c: &Coeff) -> PreparedSum {
        PreparedSum::new(self.domain, self.terms.iter().map(|t| t.scale(c)).collect())
    }

    pub fn mul(&self, other: &PreparedSum) -> Result<PreparedSum, ModelError> {
        self.same_domain(other)?;
        let terms = self.terms.iter().flat_map(|a| other.terms.iter().map(move |b| a.mul(b))).collect();
        Ok(PreparedSum::new(self.domain, terms))
    }

    pub fn conj(&self) -> PreparedSum {
        PreparedSum::new(self.domain, self.terms.iter().map(Term::conj).collect())
    }

    fn check_point(&self, y: f64) -> Result<(), ModelError> {
        if !(y > 0.0) || !self.domain.contains(y) {
            return Err(ModelError::Domain(format!("y={y} is outside {}", self.domain)));
        }
        Ok(())
    }

    pub fn evaluate(&self, y: f64) -> Result<Complex64, ModelError> {
        Ok(self.evaluate_with_error(y)?.0)
    }

    pub fn evaluate_with_error(&self, y: f64) -> Result<(Complex64, f64), ModelError> {
        self.check_point(y)?;
        let mut v = Complex64::new(0.0, 0.0);
        let mut err = 0.0;
        for t in &self.terms {
            let (tv, te) = t.eval_with_error(y)?;
            v += tv;
            err += te;
        }
        Ok((v, err))
    }

    /// The sum as a real power sum in `y`, if it is one with exact coefficients.
    pub fn as_power_sum(&self) -> Option<PowerSum> {
        let mut out = Vec::new();
        for t in &self.terms {
            let re = match &t.coeff {
                Coeff::Exact { re, im } if im.is_zero() => re.clone(),
                _ => return None,
            };
            if t.s != 0 || !t.phase.is_zero() || !t.units.is_empty() || !t.gammas.is_empty() {
                return None;
            }
            out.push((t.r, re));
        }
        Some(PowerSum::from_terms(out))
    }

    /// The sum as a single exact real constant.
    pub fn as_constant(&self) -> Option<ConstantValue> {
        let p = self.as_power_sum()?;
        if p.is_zero() {
            return Some(ConstantValue::zero());
        }
        p.as_constant()
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut factors: Vec<String> = Vec::new();
        if self.coeff != Coeff::one() {
            factors.push(self.coeff.to_string());
        }
        if !self.r.is_zero() {
            factors.push(crate::powersum::format_power(self.r));
        }
        match self.s {
            0 => {}
            1 => factors.push("log(y)".into()),
            s => factors.push(format!("log(y)^({s})")),
        }
        if !self.phase.is_zero() {
            factors.push(format!("exp(i*({}))", self.phase));
        }
        factors.extend(self.units.iter().map(|u| u.to_string()));
        factors.extend(self.gammas.iter().map(|g| g.to_string()));
        if factors.is_empty() {
            return f.write_str("1");
        }
        f.write_str(&factors.join("*"))
    }
}

impl fmt::Display for PreparedSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self.terms.iter().map(|t| t.to_string()).collect();
        f.write_str(&parts.join(" + "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constant::Basis;

    fn p(s: &str) -> PreparedSum {
        PreparedSum::parse(s, Domain::default()).unwrap()
    }

    #[test]
    fn like_terms_merge_and_cancel() {
        assert_eq!(p("2*exp(i*y) + 3*exp(i*y)"), p("5*exp(i*y)"));
        assert!(p("y^(-1)*exp(i*y) - y^(-1)*exp(i*y)").is_zero());
        let s = p("y^(1/2) + y^(2/4)");
        assert_eq!(s.terms().len(), 1);
        assert_eq!(s.terms()[0].r, Exponent::new(1, 2));
    }

    #[test]
    fn normalize_is_idempotent_and_sorted() {
        let s = p("exp(i*sqrt2*y) + y^(-2) + y*log(y) + y + exp(i*y)");
        assert_eq!(s.clone().normalize(), s);
        let rs: Vec<(Exponent, u32)> = s.terms().iter().map(|t| (t.r, t.s)).collect();
        assert_eq!(rs[0], (Exponent::ONE, 1));
        assert_eq!(rs.last().unwrap().0, Exponent::integer(-2));
    }

    #[test]
    fn ring_operations() {
        let a = p("y*exp(i*y)");
        let b = p("y^(-2)*exp(i*sqrt2*y)");
        let m = a.mul(&b).unwrap();
        let t = &m.terms()[0];
        assert_eq!(t.r, Exponent::MINUS_ONE);
        assert_eq!(t.phase, Phase::linear(&ConstantValue::one() + &ConstantValue::basis(Basis::Sqrt2)));
        let c = p("exp(i*y)").conj();
        assert_eq!(c.terms()[0].phase, Phase::linear(ConstantValue::integer(-1)));
        assert!(a.add(&PreparedSum::zero(Domain::ray(2.0))).is_err());
    }

    #[test]
    fn pointwise_values() {
        let v = p("exp(i*y)").evaluate(std::f64::consts::PI).unwrap();
        assert!((v - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
        let e = std::f64::consts::E;
        let v = p("y^(-1)*log(y)").evaluate(e).unwrap();
        assert!((v.re - 1.0 / e).abs() < 1e-15);
        assert!(p("1").evaluate(0.5).is_err());
    }

    #[test]
    fn merged_binomials_with_natural_power_expand() {
        let s = p("(1 + y^(-1))^(1/2) * (1 + y^(-1))^(1/2)");
        assert_eq!(s, p("1 + y^(-1)"));
    }
}
