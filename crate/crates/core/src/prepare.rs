//! Rewriting into prepared form: a superintegrable part plus naive-in-`y`
//! terms with distinct `(r, s, φ)` tuples.
//!
//! The rules are unit splitting, additivity splitting with integration by
//! parts on bounded intervals, integration by parts on rays whose lower bound
//! grows with `y`, bound freezing, phase-tail and binomial expansion, and
//! folding of `y`-free γ-factors into coefficients via the oracle.

use std::fmt;

use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::One;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coeff::Coeff;
use crate::constant::ConstantValue;
use crate::exponent::Exponent;
use crate::model::{abs_kernel_tail, Bound, Domain, GammaFactor, ModelError, PreparedSum, Term, UnitFactor, UnitSeries};
use crate::phase::Phase;
use crate::powersum::PowerSum;

/// Largest accumulated rewrite tolerance accepted on the check window.
pub const MAX_TOLERANCE: f64 = 1e-6;
/// Upper end of the window on which fold tolerances are measured.
pub const WINDOW_END: f64 = 1e3;
pub const MAX_IBP_STEPS: usize = 64;
const MAX_REWRITES: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PrepareError {
    #[error("RuleNotApplicable: {0}")]
    RuleNotApplicable(String),
    #[error("InternalError: {0}")]
    Internal(String),
    #[error("Diverged: no fixed point after {0} rewrites")]
    Diverged(usize),
    #[error("ToleranceExceeded: certificate bound {0:.3e} > {MAX_TOLERANCE:e}")]
    ToleranceExceeded(f64),
    #[error("NotARay: prepare works on rays, got {0}")]
    NotARay(Domain),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// `|f(y)| ≤ C·y^e·(1 + log y)^ℓ` for `y` on the ray.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub constant: f64,
    pub exponent: Exponent,
    pub log_power: u32,
}

impl Envelope {
    pub fn new(constant: f64, exponent: Exponent, log_power: u32) -> Self {
        Envelope { constant, exponent, log_power }
    }

    pub fn unit() -> Self {
        Envelope::new(1.0, Exponent::ZERO, 0)
    }

    pub fn times(self, o: Envelope) -> Envelope {
        Envelope::new(self.constant * o.constant, self.exponent + o.exponent, self.log_power + o.log_power)
    }

    pub fn eval(&self, y: f64) -> f64 {
        self.constant * y.powf(self.exponent.to_f64()) * (1.0 + y.ln()).powi(self.log_power as i32)
    }

    pub fn integrable(&self) -> bool {
        self.exponent < Exponent::MINUS_ONE
    }

    /// `∫_a^∞` of the envelope; infinite unless integrable.
    pub fn tail_integral(&self, a: f64) -> f64 {
        if !self.integrable() {
            return f64::INFINITY;
        }
        let m = -(self.exponent.to_f64() + 1.0);
        let ell = self.log_power;
        let u0 = 1.0 + a.ln();
        let mut head = 0.0;
        let mut start = a;
        if u0 < 0.0 && ell > 0 {
            // 1 + log y changes sign at 1/e; integrate |·| up to there directly.
            start = (-1.0f64).exp();
            let f = |y: f64| Complex64::new(self.eval(y).abs(), 0.0);
            let r = crate::quad::Adaptive::default().integrate(&f, a, start);
            head = r.value.re + r.error;
        }
        // y = e^{u−1}: ∫_{u₀}^∞ C e^{−m(u−1)} u^ℓ du
        let u = (1.0 + start.ln()).max(0.0);
        let mut sum = 0.0;
        let mut fall = 1.0;
        for j in 0..=ell {
            sum += fall * u.powi((ell - j) as i32) / m.powi(j as i32 + 1);
            fall *= (ell - j) as f64;
        }
        head + self.constant * (-m * (u - 1.0)).exp() * sum
    }
}

impl fmt::Display for Envelope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3e}*y^({})", self.constant, self.exponent)?;
        if self.log_power > 0 {
            write!(f, "*(1+log y)^({})", self.log_power)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rule {
    /// Expand `e^{iψ}` with `ψ → 0` into a polynomial plus a remainder.
    PhaseTail,
    /// Expand `(1 + b)^p` with `b → 0` likewise.
    UnitExpansion,
    /// Unit split and `∫_L^U = ∫_L^∞ − ∫_U^∞`, lowering `ρ` by parts first.
    Splitting,
    /// Integration by parts on `∫_{ℓy^α}^∞`.
    IbpReduce,
    /// Replace `L(y) = ℓ₀ + o(1)` by `ℓ₀` plus a correction integral.
    FreezeBounds,
    /// Evaluate `y`-free γ-factors with the oracle.
    FoldConstant,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Classification {
    Superintegrable { envelope: Envelope },
    /// No `y`-dependent unit or γ. Frozen corrections are the exception: their
    /// γ depends on `y` only through a bound tending to the fixed one.
    NaiveInY { also_superintegrable: bool, frozen_correction: bool },
    Reducible { rule: Rule },
}

/// One recorded rewrite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub rule: Rule,
    pub input: String,
    pub outputs: usize,
    /// Bound on `|before − after|` over the check window.
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub steps: Vec<Step>,
    pub tolerance: f64,
    pub window: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub superintegrable: PreparedSum,
    /// Aligned with `superintegrable.terms()`.
    pub envelopes: Vec<Envelope>,
    pub naive: PreparedSum,
    pub certificate: Certificate,
}

impl Decomposition {
    pub fn domain(&self) -> Domain {
        self.naive.domain
    }

    pub fn evaluate(&self, y: f64) -> Result<Complex64, ModelError> {
        Ok(self.superintegrable.evaluate(y)? + self.naive.evaluate(y)?)
    }

    pub fn evaluate_with_error(&self, y: f64) -> Result<(Complex64, f64), ModelError> {
        let (a, ea) = self.superintegrable.evaluate_with_error(y)?;
        let (b, eb) = self.naive.evaluate_with_error(y)?;
        Ok((a + b, ea + eb))
    }

    /// Structural invariants: envelopes integrable, naive terms with `r ≥ −1`
    /// and no `y`-dependent unit or γ, distinct naive signatures.
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.envelopes.len() != self.superintegrable.terms().len() {
            return Err("envelope list misaligned".into());
        }
        if let Some(e) = self.envelopes.iter().find(|e| !e.integrable()) {
            return Err(format!("superintegrable envelope {e} is not integrable"));
        }
        for t in self.naive.terms() {
            if !t.units.is_empty() {
                return Err(format!("naive term {t} carries a unit"));
            }
            if !t.gammas.iter().all(|g| g.is_y_free() || frozen_form(g).is_some()) {
                return Err(format!("naive term {t} has a y-dependent γ"));
            }
            if t.gammas.is_empty() && t.r < Exponent::MINUS_ONE {
                return Err(format!("naive term {t} has r < -1"));
            }
        }
        if !self.naive.signatures_distinct() {
            return Err("naive signatures are not distinct".into());
        }
        Ok(())
    }
}

fn not_applicable(msg: impl Into<String>) -> PrepareError {
    PrepareError::RuleNotApplicable(msg.into())
}

fn exact_i(scale: Rational64) -> Coeff {
    Coeff::Exact { re: ConstantValue::zero(), im: ConstantValue::rational(scale) }
}

/// `sup t^ρ |log t|^σ` on `[lo, hi] ⊂ (0, ∞)`.
pub fn kernel_sup(rho: f64, sigma: u32, lo: f64, hi: f64) -> f64 {
    let s = sigma as f64;
    let f = |t: f64| t.powf(rho) * t.ln().abs().powi(sigma as i32);
    let mut cands = vec![lo, hi];
    if sigma > 0 && rho < 0.0 {
        cands.push((s / -rho).exp());
    }
    if sigma > 0 && rho > 0.0 {
        cands.push((-s / rho).exp());
    }
    cands.into_iter().filter(|t| *t >= lo && *t <= hi).map(f).fold(0.0, f64::max)
}

/// `(inf, sup)` of `p(y)/y^α` on `[a, ∞)`, sampled on a log grid plus the limit.
fn ratio_range(p: &PowerSum, alpha: Exponent, a: f64) -> (f64, f64) {
    let lead = p.terms()[0].1.to_f64();
    if p.terms().len() == 1 {
        return (lead, lead);
    }
    let (mut lo, mut hi) = (lead, lead);
    for k in 0..=240 {
        let y = a * 10f64.powf(k as f64 / 20.0);
        let v = p.eval(y) / y.powf(alpha.to_f64());
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo * (1.0 - 1e-9), hi * (1.0 + 1e-9))
}

/// For a frozen correction `∫_{c}^{c + δ(y)}` returns `(c, δ)`.
pub fn frozen_form(g: &GammaFactor) -> Option<(ConstantValue, PowerSum)> {
    let c = g.lower.as_constant()?;
    let u = g.upper.finite()?;
    if u.as_constant().is_some() {
        return None;
    }
    let delta = u.add(&PowerSum::constant(-&c));
    (delta.leading_exponent()? < Exponent::ZERO).then_some((c, delta))
}

/// Bound on `|γ(y)|` for `y ≥ a`, if one of the supported shapes applies.
pub fn gamma_envelope(g: &GammaFactor, a: f64) -> Option<Envelope> {
    let rho = g.rho.to_f64();
    let usup = g.unit.sup();
    if g.is_y_free() {
        let r = g.eval(a).ok()?;
        return Some(Envelope::new(r.value.norm() + r.error_bound, Exponent::ZERO, 0));
    }
    if let Some((c, delta)) = frozen_form(g) {
        let c = c.to_f64();
        let (b, m) = delta.decay_envelope(a)?;
        let w = b * a.powf(-m.to_f64());
        let signs: Vec<f64> = delta.terms().iter().map(|(_, q)| q.to_f64().signum()).collect();
        let (lo, hi) = if signs.iter().all(|s| *s > 0.0) {
            (c, c + w)
        } else if signs.iter().all(|s| *s < 0.0) {
            (c - w, c)
        } else {
            (c - w, c + w)
        };
        if lo <= 0.0 {
            return None;
        }
        if c == 1.0 && g.sigma > 0 {
            // |log t| ≤ |t − 1|/min(t, 1), so the integral is O(δ^{σ+1}).
            let k = kernel_sup(rho, 0, lo, hi) / lo.min(1.0).powi(g.sigma as i32);
            let p = g.sigma as i64 + 1;
            let cst = usup * k * b.powi(p as i32) / p as f64;
            return Some(Envelope::new(cst, -m.mul_int(p), 0));
        }
        return Some(Envelope::new(usup * kernel_sup(rho, g.sigma, lo, hi) * b, -m, 0));
    }
    if rho >= -1.0 {
        return None;
    }
    let growth = |p: &PowerSum| p.leading_exponent();
    let anchor = match &g.upper {
        Bound::Infinity => &g.lower,
        Bound::Finite(u) => {
            if growth(u)? < growth(&g.lower)? {
                u
            } else {
                &g.lower
            }
        }
    };
    let alpha = growth(anchor)?;
    if alpha < Exponent::ZERO {
        return None;
    }
    let (c_low, c_high) = ratio_range(anchor, alpha, a);
    if c_low <= 0.0 {
        return None;
    }
    if alpha.is_zero() {
        return Some(Envelope::new(usup * abs_kernel_tail(rho, g.sigma, c_low), Exponent::ZERO, 0));
    }
    if c_low * a.powf(alpha.to_f64()) < 1.0 {
        return None;
    }
    // ∫_A^∞ ≤ A^{ρ+1} Σ_j σ!/(σ−j)! (log A)^{σ−j}/|ρ+1|^{j+1}, log A ≤ κ(1 + log y).
    let kappa = c_high.ln().max(0.0).max(alpha.to_f64());
    let m = -(rho + 1.0);
    let mut sum = 0.0;
    let mut fall = 1.0;
    for j in 0..=g.sigma {
        sum += fall * kappa.powi((g.sigma - j) as i32) / m.powi(j as i32 + 1);
        fall *= (g.sigma - j) as f64;
    }
    let e = alpha.mul(g.rho + Exponent::ONE);
    Some(Envelope::new(usup * c_low.powf(rho + 1.0) * sum, e, g.sigma))
}

/// Envelope of a whole term, if every factor has one.
pub fn term_envelope(t: &Term, a: f64) -> Option<Envelope> {
    let mut env = Envelope::new(t.coeff.value().norm(), t.r, t.s);
    for u in &t.units {
        let (c, m) = u.envelope(a)?;
        env = env.times(Envelope::new(c, -m, 0));
    }
    for g in &t.gammas {
        env = env.times(gamma_envelope(g, a)?);
    }
    Some(env)
}

fn first_y_gamma(t: &Term) -> Option<usize> {
    t.gammas.iter().position(|g| !g.is_y_free() && frozen_form(g).is_none())
}

/// Classifies a term on the ray `[a, ∞)`.
pub fn classify(t: &Term, a: f64) -> Classification {
    let y_units = !t.units.is_empty();
    let frozen = t.gammas.iter().any(|g| frozen_form(g).is_some());
    let naive_shape = !y_units && first_y_gamma(t).is_none();
    let env = term_envelope(t, a);
    if naive_shape && !frozen {
        return Classification::NaiveInY {
            also_superintegrable: env.is_some_and(|e| e.integrable()),
            frozen_correction: false,
        };
    }
    if let Some(e) = env.filter(Envelope::integrable) {
        return Classification::Superintegrable { envelope: e };
    }
    if naive_shape {
        return Classification::NaiveInY { also_superintegrable: false, frozen_correction: true };
    }
    if let Some(k) = first_y_gamma(t) {
        let g = &t.gammas[k];
        let grows = |p: &PowerSum| p.leading_exponent().is_some_and(|e| e > Exponent::ZERO);
        let rule = if !g.unit.is_one() || g.upper.finite().is_some_and(grows) {
            Rule::Splitting
        } else if grows(&g.lower) {
            Rule::IbpReduce
        } else {
            Rule::FreezeBounds
        };
        return Classification::Reducible { rule };
    }
    match t.units.iter().find(|u| u.argument().leading_exponent().is_some()) {
        Some(UnitFactor::BinomialTail { .. }) => Classification::Reducible { rule: Rule::UnitExpansion },
        _ => Classification::Reducible { rule: Rule::PhaseTail },
    }
}

fn without_gamma(t: &Term, k: usize) -> Term {
    let mut rest = t.clone();
    rest.gammas.remove(k);
    rest
}

/// `c·y^{eρ}`-type power of a bound: `B(y)^q` for a monomial or constant `B`.
fn bound_power(bound: &PowerSum, q: Exponent) -> Result<Term, PrepareError> {
    if let Some(c) = bound.as_constant() {
        return Ok(Term::constant(Coeff::float(Complex64::new(c.to_f64().powf(q.to_f64()), 0.0))));
    }
    let (b, beta) = bound.as_monomial().ok_or_else(|| not_applicable(format!("bound {bound} is not a monomial")))?;
    let coeff = if b == ConstantValue::one() {
        Coeff::one()
    } else {
        match (b.as_rational(), q.is_integer()) {
            (Some(r), true) => Coeff::rational(r.pow(q.numer() as i32)),
            _ => Coeff::float(Complex64::new(b.to_f64().powf(q.to_f64()), 0.0)),
        }
    };
    Ok(Term::monomial(coeff, beta.mul(q), 0))
}

/// `sign·B^ρ (log B)^σ e^{iωB}/(iω)` at `B = bound(y)`, times `rest`.
fn boundary(rest: &Term, bound: &PowerSum, rho: Exponent, sigma: u32, omega: i8, sign: i64) -> Result<Vec<Term>, PrepareError> {
    let w = omega as f64;
    if let Some(c) = bound.as_constant() {
        let c = c.to_f64();
        let v = Complex64::from_polar(1.0, w * c) * c.powf(rho.to_f64()) * c.ln().powi(sigma as i32)
            / Complex64::new(0.0, w)
            * sign as f64;
        return Ok(vec![rest.scale(&Coeff::float(v))]);
    }
    let (b, beta) = bound.as_monomial().ok_or_else(|| not_applicable(format!("bound {bound} is not a monomial")))?;
    // 1/(iω) = −iω
    let lead = exact_i(Rational64::from_integer(-sign * omega as i64));
    let phase = Phase::monomial(b.scale(Rational64::from_integer(omega as i64)), beta).map_err(not_applicable)?;
    let power = bound_power(bound, rho)?;
    let mut out = Vec::new();
    // (log b + β log y)^σ = Σ_j C(σ,j) (log b)^{σ−j} β^j (log y)^j
    let lb = b.to_f64().ln();
    for j in 0..=sigma {
        let binom = crate::model::binomial(sigma as f64, j);
        let c = if b == ConstantValue::one() {
            if j < sigma {
                continue;
            }
            Coeff::rational(beta.ratio().pow(sigma as i32))
        } else {
            Coeff::float(Complex64::new(binom * lb.powi((sigma - j) as i32) * beta.to_f64().powi(j as i32), 0.0))
        };
        let piece = Term::monomial(c, Exponent::ZERO, j).with_phase(phase.clone());
        out.push(rest.mul(&power).mul(&piece).scale(&lead));
    }
    Ok(out)
}

fn lowered(g: &GammaFactor, sigma: u32) -> GammaFactor {
    GammaFactor { rho: g.rho - Exponent::ONE, sigma, ..g.clone() }
}

/// One integration by parts on γ-factor `k` (unit must be 1):
/// `∫_L^U k e^{iωt} = [k e^{iωt}/(iω)]_L^U − (ρ/(iω))γ(ρ−1,σ) − (σ/(iω))γ(ρ−1,σ−1)`.
fn ibp_step(t: &Term, k: usize) -> Result<Vec<Term>, PrepareError> {
    let g = &t.gammas[k];
    if !g.unit.is_one() {
        return Err(not_applicable("integration by parts needs a trivial unit; split it first"));
    }
    let rest = without_gamma(t, k);
    let mut out = Vec::new();
    match &g.upper {
        Bound::Finite(u) => out.extend(boundary(&rest, u, g.rho, g.sigma, g.orientation, 1)?),
        Bound::Infinity if g.rho >= Exponent::ZERO => {
            return Err(not_applicable(format!("ray integral with rho={} diverges", g.rho)));
        }
        Bound::Infinity => {}
    }
    out.extend(boundary(&rest, &g.lower, g.rho, g.sigma, g.orientation, -1)?);
    let w = Rational64::from_integer(g.orientation as i64);
    // −ρ/(iω) = iρω
    if !g.rho.is_zero() {
        out.push(rest.scale(&exact_i(g.rho.ratio() * w)).with_gamma(lowered(g, g.sigma)));
    }
    if g.sigma > 0 {
        out.push(rest.scale(&exact_i(Rational64::from_integer(g.sigma as i64) * w)).with_gamma(lowered(g, g.sigma - 1)));
    }
    Ok(out)
}

/// Integration by parts on the first ray γ with growing lower bound until the
/// term's envelope exponent drops below `target`.
pub fn ibp_reduce(t: &Term, target: Exponent, a: f64) -> Result<Vec<Term>, PrepareError> {
    let below = |t: &Term| term_envelope(t, a).is_some_and(|e| e.exponent < target);
    if below(t) {
        return Ok(vec![t.clone()]);
    }
    let k = t
        .gammas
        .iter()
        .position(|g| g.upper == Bound::Infinity && g.lower.leading_exponent().is_some_and(|e| e > Exponent::ZERO))
        .ok_or_else(|| not_applicable("no ray γ with a growing lower bound"))?;
    let mut done = Vec::new();
    let mut current = t.clone();
    for _ in 0..MAX_IBP_STEPS {
        let mut next = None;
        for piece in ibp_step(&current, k)? {
            let is_main = piece.gammas.len() == t.gammas.len() && piece.gammas[k].sigma == current.gammas[k].sigma && piece.gammas[k].rho < current.gammas[k].rho;
            if is_main && next.is_none() {
                next = Some(piece);
            } else {
                done.push(piece);
            }
        }
        let main = next.ok_or_else(|| PrepareError::Internal("integration by parts lost its integral".into()))?;
        if below(&main) {
            done.push(main);
            return Ok(done);
        }
        // The σ−1 descendants are reduced in later passes.
        current = main;
    }
    Err(PrepareError::Internal(format!("ibp_reduce exceeded {MAX_IBP_STEPS} steps")))
}

/// Unit split and additivity split of the first γ with a growing finite upper bound.
pub fn split_gamma(t: &Term) -> Result<Vec<Term>, PrepareError> {
    let Some(k) = first_y_gamma(t) else {
        return Ok(vec![t.clone()]);
    };
    let g = &t.gammas[k];
    let rest = without_gamma(t, k);
    if !g.unit.is_one() {
        let d = g.unit.denom();
        let mut out = vec![rest.clone().with_gamma(GammaFactor { unit: UnitSeries::one(), ..g.clone() })];
        for (j, a) in g.unit.lower_coeffs().iter().enumerate() {
            let e = Exponent::new(j as i64 + 1, d);
            let gj = GammaFactor { rho: g.rho - e, unit: UnitSeries::one(), ..g.clone() };
            out.push(rest.mul(&bound_power(&g.lower, e)?).scale(&Coeff::real(a.clone())).with_gamma(gj));
        }
        if let Some(u) = g.upper.finite() {
            for (j, b) in g.unit.upper_coeffs().iter().enumerate() {
                let e = Exponent::new(j as i64 + 1, d);
                let gj = GammaFactor { rho: g.rho + e, unit: UnitSeries::one(), ..g.clone() };
                out.push(rest.mul(&bound_power(u, -e)?).scale(&Coeff::real(b.clone())).with_gamma(gj));
            }
        }
        return Ok(out);
    }
    let Bound::Finite(u) = &g.upper else {
        return Err(not_applicable("split_gamma needs a finite upper bound"));
    };
    if g.rho >= Exponent::MINUS_ONE {
        return ibp_step(t, k);
    }
    let head = GammaFactor { upper: Bound::Infinity, ..g.clone() };
    let tail = GammaFactor { lower: u.clone(), upper: Bound::Infinity, ..g.clone() };
    Ok(vec![rest.clone().with_gamma(head), rest.scale(&Coeff::rational(-Rational64::one())).with_gamma(tail)])
}

/// `∫_L^U = ∫_{ℓ₀}^{u₀} − ∫_{ℓ₀}^{L} + ∫_{u₀}^{U}` for bounds `ℓ₀ + o(1)`.
pub fn freeze_bounds(t: &Term, a: f64) -> Result<Vec<Term>, PrepareError> {
    let Some(k) = t.gammas.iter().position(|g| !g.is_y_free()) else {
        return Ok(vec![t.clone()]);
    };
    let g = &t.gammas[k];
    let rest = without_gamma(t, k);
    let settle = |p: &PowerSum| -> Result<Option<(ConstantValue, PowerSum)>, PrepareError> {
        if p.as_constant().is_some() {
            return Ok(None);
        }
        match p.leading_exponent() {
            Some(e) if e > Exponent::ZERO => Err(not_applicable(format!("bound {p} grows; use ibp_reduce or split_gamma"))),
            _ => {
                let c0 = p.constant_term();
                let delta = p.decaying_part();
                let (b, m) = delta.decay_envelope(a).expect("non-constant decaying part");
                let w = b * a.powf(-m.to_f64());
                if w > 1.0 || c0.to_f64() - w <= 0.0 {
                    return Err(not_applicable(format!(
                        "|{p} - {c0}| ≤ 1 cannot be certified on [{a}, inf); raise the ray start"
                    )));
                }
                Ok(Some((c0, delta)))
            }
        }
    };
    let lo = settle(&g.lower)?;
    let hi = match &g.upper {
        Bound::Finite(u) => settle(u)?,
        Bound::Infinity => None,
    };
    if lo.is_none() && hi.is_none() {
        return Ok(vec![t.clone()]);
    }
    if !g.unit.is_one() {
        return Err(not_applicable("freezing bounds of a γ with a nontrivial unit"));
    }
    let mut main = g.clone();
    let mut out = Vec::new();
    if let Some((c0, _)) = &lo {
        main.lower = PowerSum::constant(c0.clone());
        let corr = GammaFactor { lower: PowerSum::constant(c0.clone()), upper: Bound::Finite(g.lower.clone()), ..g.clone() };
        out.push(rest.scale(&Coeff::rational(-Rational64::one())).with_gamma(corr));
    }
    if let (Some((c0, _)), Bound::Finite(u)) = (&hi, &g.upper) {
        main.upper = Bound::Finite(PowerSum::constant(c0.clone()));
        let corr = GammaFactor { lower: PowerSum::constant(c0.clone()), upper: Bound::Finite(u.clone()), ..g.clone() };
        out.push(rest.clone().with_gamma(corr));
    }
    out.insert(0, rest.with_gamma(main));
    Ok(out)
}

/// Powers `arg^k` as terms, for series expansion of units.
fn power_terms(arg: &PowerSum, k: u32, scale: Coeff) -> Vec<Term> {
    let mut acc = vec![Term::constant(scale)];
    for _ in 0..k {
        acc = acc
            .iter()
            .flat_map(|t| arg.terms().iter().map(move |(e, c)| t.mul(&Term::monomial(Coeff::real(c.clone()), *e, 0))))
            .collect();
    }
    acc
}

/// Expands unit `j` of a term to the minimal order that leaves a superintegrable remainder.
pub fn expand_unit(t: &Term, j: usize, a: f64) -> Result<Vec<Term>, PrepareError> {
    let u = &t.units[j];
    let mut rest = t.clone();
    rest.units.remove(j);
    let base = term_envelope(&rest, a).ok_or_else(|| not_applicable(format!("no envelope for {rest}")))?;
    let m = -u.argument().leading_exponent().ok_or_else(|| not_applicable("zero unit argument"))?;
    let k0 = u.skip();
    let mut k = k0.max(1);
    while base.exponent - m.mul_int(k as i64) >= Exponent::MINUS_ONE {
        k += 1;
    }
    let remainder = match u {
        UnitFactor::ExpTail { psi, .. } => UnitFactor::exp_tail(psi.clone(), k)?,
        UnitFactor::BinomialTail { base, power, .. } => UnitFactor::binomial_tail(base.clone(), *power, k)?,
    };
    if remainder.envelope(a).is_none() {
        return Err(not_applicable(format!("unit argument {} is not below 1 on [{a}, inf)", u.argument())));
    }
    let mut out = Vec::new();
    let mut fact = Rational64::one();
    for n in 0..k {
        if n > 0 {
            fact *= Rational64::from_integer(n as i64);
        }
        if n < k0 {
            continue;
        }
        let (arg, c) = match u {
            // (iψ)^n/n!
            UnitFactor::ExpTail { psi, .. } => {
                let i_n = match n % 4 {
                    0 => Coeff::one(),
                    1 => Coeff::i(),
                    2 => Coeff::rational(-Rational64::one()),
                    _ => exact_i(-Rational64::one()),
                };
                (psi, i_n.scale(fact.recip()))
            }
            UnitFactor::BinomialTail { base, power, .. } => {
                let mut b = Rational64::one();
                for i in 0..n {
                    b = b * (power.ratio() - Rational64::from_integer(i as i64)) / Rational64::from_integer(i as i64 + 1);
                }
                (base, Coeff::rational(b))
            }
        };
        out.extend(power_terms(arg, n, c).into_iter().map(|p| rest.mul(&p)));
    }
    let mut rem = rest;
    rem.units.push(remainder);
    out.push(rem);
    Ok(out)
}

/// Folds every `y`-free γ into the coefficient; returns the term and the
/// absolute coefficient error introduced.
fn fold_constants(t: &Term) -> Result<(Term, f64), PrepareError> {
    let mut out = t.clone();
    out.gammas.clear();
    let mut value = Complex64::new(1.0, 0.0);
    let mut rel = 0.0;
    let mut folded = false;
    for g in &t.gammas {
        if g.is_y_free() {
            let r = g.eval(1.0)?;
            value *= r.value;
            rel += r.error_bound / r.value.norm().max(f64::MIN_POSITIVE);
            folded = true;
        } else {
            out.gammas.push(g.clone());
        }
    }
    if !folded {
        return Ok((t.clone(), 0.0));
    }
    let coeff = t.coeff.mul_complex(value);
    let err = t.coeff.value().norm() * value.norm() * rel;
    out.coeff = coeff;
    Ok((out, err))
}

fn window_sup(t: &Term, a: f64) -> Result<f64, PrepareError> {
    let hi = if a < WINDOW_END { WINDOW_END } else { 10.0 * a };
    let mut unit = t.clone();
    unit.coeff = Coeff::one();
    let mut m: f64 = 0.0;
    for k in 0..=48 {
        let y = a * (hi / a).powf(k as f64 / 48.0);
        let (v, e) = unit.eval_with_error(y)?;
        m = m.max(v.norm() + e);
    }
    Ok(1.5 * m)
}

/// One rewrite of a term: the rule used and its outputs, or `None` if the
/// term is already final.
pub fn rewrite(t: &Term, a: f64) -> Result<Option<(Rule, Vec<Term>)>, PrepareError> {
    match classify(t, a) {
        Classification::Superintegrable { .. } | Classification::NaiveInY { .. } => Ok(None),
        Classification::Reducible { rule } => {
            let out = match rule {
                Rule::Splitting => split_gamma(t)?,
                Rule::IbpReduce => ibp_reduce(t, Exponent::MINUS_ONE, a)?,
                Rule::FreezeBounds => freeze_bounds(t, a)?,
                Rule::PhaseTail | Rule::UnitExpansion => {
                    let j = t.units.iter().position(|u| u.argument().leading_exponent().is_some()).expect("unit present");
                    expand_unit(t, j, a)?
                }
                Rule::FoldConstant => unreachable!("folding happens before classification"),
            };
            Ok(Some((rule, out)))
        }
    }
}

/// Rewrites a sum on a ray into its prepared decomposition.
pub fn prepare(sum: &PreparedSum) -> Result<Decomposition, PrepareError> {
    let Domain::Ray { lower: a } = sum.domain else {
        return Err(PrepareError::NotARay(sum.domain));
    };
    let mut work: Vec<Term> = sum.terms().iter().rev().cloned().collect();
    let mut steps = Vec::new();
    let mut tolerance = 0.0;
    let mut superint = Vec::new();
    let mut naive = Vec::new();
    let mut rewrites = 0usize;
    while let Some(t) = work.pop() {
        rewrites += 1;
        if rewrites > MAX_REWRITES {
            return Err(PrepareError::Diverged(MAX_REWRITES));
        }
        if t.is_zero() {
            continue;
        }
        let (t, err) = fold_constants(&t)?;
        if err > 0.0 {
            let tol = err * window_sup(&{ let mut u = t.clone(); u.coeff = Coeff::one(); u }, a)?;
            tolerance += tol;
            steps.push(Step { rule: Rule::FoldConstant, input: t.to_string(), outputs: 1, tolerance: tol });
        }
        match classify(&t, a) {
            Classification::Superintegrable { .. } => superint.push(t),
            Classification::NaiveInY { also_superintegrable: true, .. } => superint.push(t),
            Classification::NaiveInY { .. } => naive.push(t),
            Classification::Reducible { .. } => {
                let (rule, out) = rewrite(&t, a)?.expect("reducible term rewrites");
                steps.push(Step { rule, input: t.to_string(), outputs: out.len(), tolerance: 0.0 });
                work.extend(out.into_iter().rev());
            }
        }
    }
    if tolerance > MAX_TOLERANCE {
        return Err(PrepareError::ToleranceExceeded(tolerance));
    }
    let superintegrable = PreparedSum::new(sum.domain, superint);
    // Merging can only combine like signatures, whose envelopes add.
    let envelopes = superintegrable
        .terms()
        .iter()
        .map(|t| term_envelope(t, a).ok_or_else(|| PrepareError::Internal(format!("lost envelope for {t}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let naive = PreparedSum::new(sum.domain, naive);
    let hi = if a < WINDOW_END { WINDOW_END } else { 10.0 * a };
    let dec = Decomposition { superintegrable, envelopes, naive, certificate: Certificate { steps, tolerance, window: (a, hi) } };
    dec.check_invariants().map_err(PrepareError::Internal)?;
    Ok(dec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn term(s: &str, a: f64) -> Term {
        PreparedSum::parse(s, Domain::ray(a)).unwrap().terms()[0].clone()
    }

    fn eval_terms(ts: &[Term], y: f64) -> Complex64 {
        ts.iter().map(|t| t.eval_with_error(y).unwrap().0).sum()
    }

    #[test]
    fn one_sided_frozen_shift_has_an_envelope_at_the_edge() {
        let t = term("gamma(-1/2, 0, 1, 1, 1+y^(-1))", 1.0);
        let e = gamma_envelope(&t.gammas[0], 1.0).unwrap();
        assert_eq!(e.exponent, Exponent::MINUS_ONE);
        for y in [1.0, 1.5, 4.0, 100.0] {
            let v = t.gammas[0].eval(y).unwrap().value.norm();
            assert!(v <= e.eval(y), "y={y}: {v} > {}", e.eval(y));
        }
        // Mixed signs still need the symmetric window, which touches 0 here.
        let t = term("gamma(-1/2, 0, 1, 1, 1+y^(-1)-y^(-2))", 1.0);
        assert!(gamma_envelope(&t.gammas[0], 1.0).is_none());
    }

    #[test]
    fn classification_examples() {
        let c = classify(&term("y^(-2)*exp(i*y)", 1.0), 1.0);
        assert_eq!(c, Classification::NaiveInY { also_superintegrable: true, frozen_correction: false });
        let c = classify(&term("exp(i*y)", 1.0), 1.0);
        assert_eq!(c, Classification::NaiveInY { also_superintegrable: false, frozen_correction: false });
        let c = classify(&term("gamma(-1/2, 0, 1, 1, y^(3/2))", 1.0), 1.0);
        assert_eq!(c, Classification::Reducible { rule: Rule::Splitting });
        let c = classify(&term("gamma(-3, 0, 1, y, inf)", 1.0), 1.0);
        assert!(matches!(c, Classification::Superintegrable { .. }));
        let c = classify(&term("gamma(-2, 0, 1, y, inf)", 1.0), 1.0);
        assert_eq!(c, Classification::Reducible { rule: Rule::IbpReduce });
    }

    #[test]
    fn ibp_on_a_growing_lower_bound() {
        let t = term("gamma(-2, 0, 1, y, inf)", 1.0);
        let out = ibp_reduce(&t, Exponent::MINUS_ONE, 1.0).unwrap();
        // one boundary term and one lowered integral
        assert_eq!(out.len(), 2);
        for y in [5.0, 50.0] {
            let before = t.eval_with_error(y).unwrap().0;
            assert!((before - eval_terms(&out, y)).norm() < 1e-10);
        }
        let same = term("gamma(-4, 0, 1, y, inf)", 1.0);
        assert_eq!(ibp_reduce(&same, Exponent::MINUS_ONE, 1.0).unwrap(), vec![same]);
    }

    #[test]
    fn log_kernel_ibp_has_two_descendants() {
        let t = term("gamma(-2, 1, 1, y, inf)", 2.0);
        let out = ibp_step(&t, 0).unwrap();
        let sigmas: Vec<u32> = out.iter().filter(|t| !t.gammas.is_empty()).map(|t| t.gammas[0].sigma).collect();
        assert_eq!(sigmas, vec![1, 0]);
        for y in [3.0, 30.0] {
            assert!((t.eval_with_error(y).unwrap().0 - eval_terms(&out, y)).norm() < 1e-10);
        }
    }

    #[test]
    fn additivity_split_is_exact() {
        let t = term("gamma(-3/2, 0, 1, 2, y)", 2.0);
        let out = split_gamma(&t).unwrap();
        assert_eq!(out.len(), 2);
        for y in [10.0, 100.0] {
            assert!((t.eval_with_error(y).unwrap().0 - eval_terms(&out, y)).norm() < 1e-9);
        }
        let free = term("gamma(-3/2, 0, 1, 2, 5)", 2.0);
        assert_eq!(split_gamma(&free).unwrap(), vec![free]);
    }

    #[test]
    fn freezing_bounds() {
        let t = term("gamma(-2, 0, 1, 2 + y^(-1), inf)", 1.0);
        let out = freeze_bounds(&t, 1.0).unwrap();
        assert_eq!(out.len(), 2);
        let y = 10.0;
        assert!((t.eval_with_error(y).unwrap().0 - eval_terms(&out, y)).norm() < 1e-8);
        assert!(matches!(freeze_bounds(&term("gamma(-2, 0, 1, y, 2*y)", 1.0), 1.0), Err(PrepareError::RuleNotApplicable(_))));
        assert!(matches!(freeze_bounds(&term("gamma(-2, 0, 1, 2 + 3*y^(-1), inf)", 1.0), 1.0), Err(PrepareError::RuleNotApplicable(_))));
    }

    #[test]
    fn phase_tail_uses_minimal_order() {
        let t = term("y^(-1)*exp(i*(y + y^(-1/2)))", 4.0);
        let out = expand_unit(&t, 0, 4.0).unwrap();
        // r − K/2 < −1 with r = −1 gives K = 1: one polynomial term plus the remainder
        assert_eq!(out.len(), 2);
        assert_eq!(out.last().unwrap().units[0].skip(), 1);
        for y in [4.0, 40.0, 400.0] {
            assert!((t.eval_with_error(y).unwrap().0 - eval_terms(&out, y)).norm() < 1e-12);
        }
    }

    #[test]
    fn already_naive_sum_is_untouched() {
        let s = PreparedSum::parse("exp(i*y) + y^(-1/2)*exp(i*sqrt2*y)", Domain::ray(1.0)).unwrap();
        let d = prepare(&s).unwrap();
        assert_eq!(d.naive, s);
        assert!(d.superintegrable.is_zero());
    }
}
