//! Expansions at `+∞` over the scale `y^r (log y)^s` with coefficients in
//! the space of finite exponential sums `Σ c_j e^{i p_j(y)}`, pointwise limits,
//! and coefficient-growth diagnostics.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, LN_10};
use std::fmt;

use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::{CheckedMul, One};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coeff::Coeff;
use crate::constant::ConstantValue;
use crate::equidist::{dovetail, laurent_form, torus_max, Dovetail, EquidistError, EPSILON_SHARE};
use crate::exponent::Exponent;
use crate::model::{Domain, ModelError, PreparedSum, Term, UnitFactor};
use crate::phase::Phase;
use crate::powersum::{format_power, PowerSum};
use crate::prepare::{frozen_form, prepare, PrepareError};
use crate::quad::{self, QuadResult};

/// Terms taken from any one unit or correction series.
pub const MAX_SERIES_TERMS: u32 = 30;
/// Float coefficients below this share of their summands count as cancelled.
pub const FLOAT_ZERO: f64 = 1e-12;
pub const REMAINDER_POINTS: [f64; 3] = [1e2, 1e3, 1e4];
pub const LIMIT_POINTS: [f64; 3] = [1e3, 1e4, 1e5];
/// Allowed `|f(y) − lim|` in units of the first decaying scale element.
pub const LIMIT_FACTOR: f64 = 10.0;
pub const DOVETAIL_BLOCKS: u32 = 11;
const MAX_FLOOR_STEPS: i64 = 64;

#[derive(Debug, Error)]
pub enum AsymptoticsError {
    #[error("NotNaive: {0}")]
    NotNaive(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Prepare(#[from] PrepareError),
    #[error(transparent)]
    Equidist(#[from] EquidistError),
}

type Result<T> = std::result::Result<T, AsymptoticsError>;

/// `y^r (log y)^s`, ordered lexicographically on `(r, s)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ScaleElement {
    pub r: Exponent,
    pub s: u32,
}

impl ScaleElement {
    pub const ONE: ScaleElement = ScaleElement { r: Exponent::ZERO, s: 0 };

    pub fn new(r: Exponent, s: u32) -> Self {
        ScaleElement { r, s }
    }

    pub fn eval(&self, y: f64) -> f64 {
        y.powf(self.r.to_f64()) * y.ln().powi(self.s as i32)
    }

    pub fn is_decaying(&self) -> bool {
        *self < ScaleElement::ONE
    }
}

impl fmt::Display for ScaleElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if !self.r.is_zero() {
            parts.push(format_power(self.r));
        }
        match self.s {
            0 => {}
            1 => parts.push("log(y)".into()),
            s => parts.push(format!("log(y)^{s}")),
        }
        if parts.is_empty() {
            write!(f, "1")
        } else {
            write!(f, "{}", parts.join("*"))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub c: Coeff,
    #[serde(default)]
    pub phase: Phase,
}

impl Atom {
    pub fn eval(&self, y: f64) -> Complex64 {
        self.c.value() * Complex64::from_polar(1.0, self.phase.eval(y))
    }
}

/// `E(y) = Σ c_j e^{i p_j(y)}` with distinct phases, sorted, no zero `c_j`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ExpCoefficient {
    pub atoms: Vec<Atom>,
}

impl ExpCoefficient {
    pub fn is_zero(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn eval(&self, y: f64) -> Complex64 {
        self.atoms.iter().map(|a| a.eval(y)).sum()
    }

    /// `Σ |c_j|`.
    pub fn l1_norm(&self) -> f64 {
        self.atoms.iter().map(|a| a.c.value().norm()).sum()
    }

    pub fn numeric(&self) -> Vec<(Complex64, Phase)> {
        self.atoms.iter().map(|a| (a.c.value(), a.phase.clone())).collect()
    }
}

impl fmt::Display for ExpCoefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.atoms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .atoms
            .iter()
            .map(|a| if a.phase.is_zero() { a.c.to_string() } else { format!("{}*exp(i*({}))", a.c, a.phase) })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemainderCheck {
    pub y: f64,
    pub residual: f64,
    /// Rounding level of `f(y)` and the partial sum; not charged to `C`.
    pub noise: f64,
    /// `g_{N+1}(y)`, or 1 when the expansion is exact.
    pub gauge: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticExpansion {
    pub scale: Vec<ScaleElement>,
    pub coefficients: Vec<ExpCoefficient>,
    pub order: usize,
    /// `g_{N+1}`; `None` when nothing follows the reported terms.
    pub next: Option<ScaleElement>,
    /// Empirical `C` in `|f − Σ_{n≤N} E_n g_n| ≤ C·g_{N+1}`.
    #[serde(rename = "remainderC")]
    pub remainder_c: f64,
    pub checks: Vec<RemainderCheck>,
}

impl AsymptoticExpansion {
    pub fn partial(&self, y: f64) -> Complex64 {
        self.scale.iter().zip(&self.coefficients).map(|(g, e)| e.eval(y) * g.eval(y)).sum()
    }

    fn same_terms(&self, other: &Self) -> bool {
        self.scale == other.scale && self.coefficients == other.coefficients
    }
}

impl fmt::Display for AsymptoticExpansion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.scale.is_empty() {
            return write!(f, "0");
        }
        for (n, (g, e)) in self.scale.iter().zip(&self.coefficients).enumerate() {
            if n > 0 {
                writeln!(f)?;
            }
            write!(f, "[{g}] {e}")?;
        }
        if let Some(g) = &self.next {
            write!(f, "\n+ O({g}), C = {:.3e}", self.remainder_c)?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Series of single terms

/// `y`-power series `Σ c_e y^e`.
type Series = BTreeMap<Exponent, Coeff>;

/// Truncation bookkeeping of one expansion pass.
#[derive(Default)]
struct Cut {
    /// Some monomial fell below the floor.
    below_floor: bool,
    /// Largest exponent that may be missing because a series hit the term cap.
    capped_at: Option<Exponent>,
}

impl Cut {
    fn cap(&mut self, e: Exponent) {
        self.capped_at = Some(self.capped_at.map_or(e, |c| c.max(e)));
    }
}

fn series_mul(a: &Series, b: &Series, budget: Exponent, cut: &mut Cut) -> Series {
    let mut out = Series::new();
    for (ea, ca) in a {
        for (eb, cb) in b {
            let e = *ea + *eb;
            if e < budget {
                cut.below_floor = true;
                continue;
            }
            let c = ca.mul(cb);
            let slot = out.entry(e).or_insert_with(Coeff::zero);
            *slot = slot.add(&c);
        }
    }
    out.retain(|_, c| !c.is_zero());
    out
}

fn from_power_sum(p: &PowerSum) -> Series {
    p.terms().iter().map(|(e, c)| (*e, Coeff::real(c.clone()))).collect()
}

/// `Σ_{k ≥ skip} a_k·arg^k` down to exponent `budget`, at most
/// `MAX_SERIES_TERMS` terms. `offset` is the exponent of the rest of the term.
fn power_series(arg: &PowerSum, skip: u32, a: impl Fn(u32) -> Coeff, budget: Exponent, offset: Exponent, cut: &mut Cut) -> Series {
    let base = from_power_sum(arg);
    let lead = arg.leading_exponent().expect("decaying argument");
    let mut pow: Series = [(Exponent::ZERO, Coeff::one())].into_iter().collect();
    for _ in 0..skip {
        pow = series_mul(&pow, &base, budget, cut);
    }
    let mut out = Series::new();
    for k in skip..skip + MAX_SERIES_TERMS {
        if pow.is_empty() {
            return out;
        }
        let ak = a(k);
        for (e, c) in &pow {
            let slot = out.entry(*e).or_insert_with(Coeff::zero);
            *slot = slot.add(&ak.mul(c));
        }
        pow = series_mul(&pow, &base, budget, cut);
    }
    if !pow.is_empty() {
        cut.cap(offset + lead.mul_int((skip + MAX_SERIES_TERMS) as i64));
    }
    out.retain(|_, c| !c.is_zero());
    out
}

/// `1/k!`, exact while it fits.
fn inv_factorial(k: u32) -> Rational64 {
    (1..=k as i64).try_fold(1i64, |acc, j| acc.checked_mul(j)).map(|f| Rational64::new(1, f)).unwrap_or_else(|| {
        // Only reached for k > 20, where an f64 reciprocal is as good as it gets.
        Rational64::approximate_float((1..=k).fold(1.0f64, |acc, j| acc / j as f64)).unwrap_or_default()
    })
}

fn inv_factorial_coeff(k: u32) -> Coeff {
    match (1..=k as i64).try_fold(1i64, |acc, j| acc.checked_mul(j)) {
        Some(f) => Coeff::rational(Rational64::new(1, f)),
        None => Coeff::float(Complex64::new((1..=k).fold(1.0f64, |acc, j| acc / j as f64), 0.0)),
    }
}

fn i_power(k: u32) -> Coeff {
    match k % 4 {
        0 => Coeff::one(),
        1 => Coeff::i(),
        2 => Coeff::rational(-Rational64::one()),
        _ => Coeff::Exact { re: ConstantValue::zero(), im: ConstantValue::integer(-1) },
    }
}

/// `C(p, k)`, exact while it fits.
fn binomial_coeff(p: Rational64, k: u32) -> Coeff {
    let exact = (0..k as i64).try_fold(Rational64::one(), |acc, i| {
        acc.checked_mul(&(p - Rational64::from_integer(i)))?.checked_mul(&Rational64::new(1, i + 1))
    });
    match exact {
        Some(b) => Coeff::rational(b),
        None => {
            let pf = *p.numer() as f64 / *p.denom() as f64;
            Coeff::float(Complex64::new(crate::model::binomial(pf, k), 0.0))
        }
    }
}

fn unit_series(u: &UnitFactor, budget: Exponent, offset: Exponent, cut: &mut Cut) -> Series {
    match u {
        UnitFactor::ExpTail { psi, skip } => power_series(psi, *skip, |k| i_power(k).mul(&inv_factorial_coeff(k)), budget, offset, cut),
        UnitFactor::BinomialTail { base, power, skip } => {
            power_series(base, *skip, |k| binomial_coeff(power.ratio(), k), budget, offset, cut)
        }
    }
}

/// `h^{(n)}(c)` for `h(t) = t^ρ (log t)^σ e^{iωt}`, `n < count`.
fn kernel_derivatives(rho: f64, sigma: u32, omega: f64, c: f64, count: usize) -> Vec<Complex64> {
    // A^{(j)}(t) = Σ_l P_j[l]·t^{ρ−j}(log t)^l.
    let mut p = vec![0.0; sigma as usize + 1];
    p[sigma as usize] = 1.0;
    let lc = c.ln();
    let mut amp = Vec::with_capacity(count);
    for j in 0..count {
        let tj = c.powf(rho - j as f64);
        amp.push(p.iter().enumerate().map(|(l, w)| w * tj * lc.powi(l as i32)).sum::<f64>());
        let mut next = vec![0.0; p.len()];
        for l in 0..p.len() {
            next[l] += p[l] * (rho - j as f64);
            if l + 1 < p.len() {
                next[l] += p[l + 1] * (l + 1) as f64;
            }
        }
        p = next;
    }
    let phase = Complex64::from_polar(1.0, omega * c);
    let iw = Complex64::new(0.0, omega);
    (0..count)
        .map(|m| {
            let mut binom = 1.0;
            let mut sum = Complex64::new(0.0, 0.0);
            for j in 0..=m {
                if j > 0 {
                    binom = binom * (m - j + 1) as f64 / j as f64;
                }
                sum += binom * amp[j] * iw.powu((m - j) as u32);
            }
            sum * phase
        })
        .collect()
}

fn term_series(t: &Term, floor: Exponent, cut: &mut Cut) -> Result<Vec<(ScaleElement, Coeff)>> {
    if t.r < floor {
        cut.below_floor = true;
        return Ok(Vec::new());
    }
    let budget = floor - t.r;
    let mut acc: Series = [(Exponent::ZERO, t.coeff.clone())].into_iter().collect();
    for u in &t.units {
        let s = unit_series(u, budget, t.r, cut);
        acc = series_mul(&acc, &s, budget, cut);
    }
    for g in &t.gammas {
        if g.is_y_free() {
            let v = g.eval(1.0)?.value;
            for c in acc.values_mut() {
                *c = c.mul_complex(v);
            }
            continue;
        }
        let Some((c, delta)) = frozen_form(g).filter(|_| g.unit.is_one()) else {
            return Err(AsymptoticsError::NotNaive(format!("γ-factor {g} depends on y")));
        };
        let d = kernel_derivatives(g.rho.to_f64(), g.sigma, g.orientation as f64, c.to_f64(), MAX_SERIES_TERMS as usize + 1);
        let s = power_series(&delta, 1, |k| Coeff::float(d[k as usize - 1] * inv_factorial(k).to_f64()), budget, t.r, cut);
        acc = series_mul(&acc, &s, budget, cut);
    }
    Ok(acc.into_iter().map(|(e, c)| (ScaleElement::new(t.r + e, t.s), c)).collect())
}

trait RationalF64 {
    fn to_f64(&self) -> f64;
}

impl RationalF64 for Rational64 {
    fn to_f64(&self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
}

fn sum_coeffs(mut cs: Vec<Coeff>) -> Option<Coeff> {
    let magnitude: f64 = cs.iter().map(|c| c.value().norm()).sum();
    // Exact summands first; floats in a fixed order so equal inputs give equal bits.
    cs.sort_by(|a, b| match (a, b) {
        (Coeff::Exact { .. }, Coeff::Float { .. }) => std::cmp::Ordering::Less,
        (Coeff::Float { .. }, Coeff::Exact { .. }) => std::cmp::Ordering::Greater,
        (Coeff::Float { re: a, im: b }, Coeff::Float { re: c, im: d }) => a.total_cmp(c).then(b.total_cmp(d)),
        _ => std::cmp::Ordering::Equal,
    });
    let total = cs.iter().fold(Coeff::zero(), |acc, c| acc.add(c));
    let zero = match &total {
        Coeff::Exact { .. } => total.is_zero(),
        Coeff::Float { .. } => total.value().norm() <= FLOAT_ZERO * magnitude,
    };
    (!zero).then_some(total)
}

struct Collected {
    /// Descending.
    elements: Vec<(ScaleElement, ExpCoefficient)>,
    cut: Cut,
}

impl Collected {
    /// Elements whose coefficients no truncation can have touched.
    fn complete(&self, floor: Exponent) -> Vec<(ScaleElement, ExpCoefficient)> {
        self.elements
            .iter()
            .filter(|(g, _)| g.r >= floor && self.cut.capped_at.is_none_or(|c| g.r > c))
            .cloned()
            .collect()
    }
}

fn collect(terms: &[Term], floor: Exponent) -> Result<Collected> {
    let mut cut = Cut::default();
    let mut buckets: BTreeMap<(ScaleElement, Phase), Vec<Coeff>> = BTreeMap::new();
    for t in terms {
        for (g, c) in term_series(t, floor, &mut cut)? {
            buckets.entry((g, t.phase.clone())).or_default().push(c);
        }
    }
    let mut grouped: BTreeMap<ScaleElement, ExpCoefficient> = BTreeMap::new();
    for ((g, phase), cs) in buckets {
        if let Some(c) = sum_coeffs(cs) {
            grouped.entry(g).or_default().atoms.push(Atom { c, phase });
        }
    }
    Ok(Collected { elements: grouped.into_iter().rev().collect(), cut })
}

/// Points of `REMAINDER_POINTS`-like grids inside the domain.
fn sample_points(domain: &Domain, grid: &[f64]) -> Vec<f64> {
    let inside: Vec<f64> = grid.iter().copied().filter(|y| domain.contains(*y)).collect();
    if !inside.is_empty() {
        return inside;
    }
    let a = domain.lower().max(1.0);
    grid.iter().map(|g| a * g / grid[0] * 10.0).collect()
}

fn expand_terms(terms: &[Term], f: &PreparedSum, order: usize) -> Result<AsymptoticExpansion> {
    let Some(rmax) = terms.iter().map(|t| t.r).max() else {
        return Ok(AsymptoticExpansion { scale: vec![], coefficients: vec![], order, next: None, remainder_c: 0.0, checks: vec![] });
    };
    let mut floor = rmax - Exponent::ONE;
    let mut complete;
    let mut step = 0;
    loop {
        let collected = collect(terms, floor)?;
        complete = collected.complete(floor);
        let more = collected.cut.below_floor || collected.cut.capped_at.is_some();
        if complete.len() >= order + 2 || !more || step >= MAX_FLOOR_STEPS {
            break;
        }
        floor = floor - Exponent::ONE;
        step += 1;
    }
    let next = complete.get(order + 1).map(|(g, _)| *g);
    complete.truncate(order + 1);
    let (scale, coefficients): (Vec<_>, Vec<_>) = complete.into_iter().unzip();
    let mut exp = AsymptoticExpansion { scale, coefficients, order, next, remainder_c: 0.0, checks: vec![] };
    for y in sample_points(&f.domain, &REMAINDER_POINTS) {
        let (v, err) = f.evaluate_with_error(y)?;
        let residual = (v - exp.partial(y)).norm();
        let scale: f64 = v.norm() + exp.scale.iter().zip(&exp.coefficients).map(|(g, e)| e.l1_norm() * g.eval(y).abs()).sum::<f64>();
        let noise = err + 8.0 * f64::EPSILON * scale;
        let gauge = next.map_or(1.0, |g| g.eval(y));
        exp.checks.push(RemainderCheck { y, residual, noise, gauge, ratio: (residual - noise).max(0.0) / gauge });
    }
    exp.remainder_c = exp.checks.iter().map(|c| c.ratio).fold(0.0, f64::max);
    Ok(exp)
}

/// The first `order + 1` elements of the expansion of a naive sum, with an
/// empirical remainder constant.
///
/// Units are expanded into their power series; `y`-free γ-factors become
/// numeric coefficients and frozen corrections `∫_c^{c+δ(y)}` are expanded
/// in `δ`.
pub fn expand(sum: &PreparedSum, order: usize) -> Result<AsymptoticExpansion> {
    expand_terms(sum.terms(), sum, order)
}

/// Expands `f`, `f + 0` and `f` with every term split in two halves in
/// reverse order, and compares the coefficients exactly.
pub fn check_uniqueness(f: &PreparedSum, order: usize) -> Result<bool> {
    let base = expand(f, order)?;
    let plus_zero = f.add(&PreparedSum::zero(f.domain))?;
    let with_zero = expand(&plus_zero, order)?;
    let half = Rational64::new(1, 2);
    let split: Vec<Term> = f
        .terms()
        .iter()
        .rev()
        .flat_map(|t| {
            let h = t.scale(&Coeff::rational(half));
            [h.clone(), h]
        })
        .collect();
    let unmerged = expand_terms(&split, f, order)?;
    Ok(base.same_terms(&with_zero) && base.same_terms(&unmerged))
}

// ---------------------------------------------------------------------------
// Limits

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitCheck {
    pub y: f64,
    pub value: Complex64,
    pub deviation: f64,
    pub bound: f64,
    pub ok: bool,
}

/// First decaying part of `f`: a scale element of the naive expansion or the
/// envelope of a superintegrable term.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decay {
    pub element: ScaleElement,
    pub weight: f64,
    /// Envelope gauges use `(1 + log y)^s`.
    pub envelope: bool,
}

impl Decay {
    pub fn eval(&self, y: f64) -> f64 {
        if self.envelope {
            y.powf(self.element.r.to_f64()) * (1.0 + y.ln()).powi(self.element.s as i32)
        } else {
            self.element.eval(y)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Obstruction {
    pub element: ScaleElement,
    pub atoms: ExpCoefficient,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitCertificate {
    /// The expansion down to and including `(0, 0)`.
    pub scale: Vec<ScaleElement>,
    pub coefficients: Vec<ExpCoefficient>,
    pub obstruction: Option<Obstruction>,
    pub decay: Option<Decay>,
    pub checks: Vec<LimitCheck>,
    pub epsilon: Option<f64>,
    pub dovetail: Option<Dovetail>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    pub exists: bool,
    pub value: Option<Complex64>,
    pub certificate: LimitCertificate,
}

fn first_decay(dec: &crate::prepare::Decomposition) -> Result<Option<Decay>> {
    let mut best: Option<Decay> = None;
    let terms = dec.naive.terms();
    let mut floor = -Exponent::ONE;
    for _ in 0..MAX_FLOOR_STEPS {
        let c = collect(terms, floor)?;
        if let Some((g, e)) = c.complete(floor).into_iter().find(|(g, _)| g.is_decaying()) {
            best = Some(Decay { element: g, weight: e.l1_norm(), envelope: false });
            break;
        }
        if !c.cut.below_floor && c.cut.capped_at.is_none() {
            break;
        }
        floor = floor - Exponent::ONE;
    }
    for env in &dec.envelopes {
        let cand = Decay { element: ScaleElement::new(env.exponent, env.log_power), weight: env.constant, envelope: true };
        best = match best {
            Some(b) if b.element > cand.element || (b.element == cand.element && b.weight >= cand.weight) => Some(b),
            _ => Some(cand),
        };
    }
    Ok(best)
}

/// Decides whether `lim_{y→∞} f(y)` exists and computes it.
///
/// The limit exists iff the expansion has no nonzero coefficient above
/// `(0, 0)` and the `(0, 0)` coefficient has no atom with a nonzero phase.
/// Otherwise the certificate carries `ε` and dovetailed pairs with
/// `|f(t_{2j}) − f(t_{2j+1})| ≥ ε`.
pub fn limit(f: &PreparedSum) -> Result<LimitReport> {
    let dec = prepare(f)?;
    let head = collect(dec.naive.terms(), Exponent::ZERO)?.complete(Exponent::ZERO);
    let value = head
        .iter()
        .find(|(g, _)| *g == ScaleElement::ONE)
        .and_then(|(_, e)| e.atoms.iter().find(|a| a.phase.is_zero()))
        .map_or(Complex64::new(0.0, 0.0), |a| a.c.value());
    let obstruction = head.iter().find_map(|(g, e)| {
        let atoms: Vec<Atom> = if *g > ScaleElement::ONE {
            e.atoms.clone()
        } else {
            e.atoms.iter().filter(|a| !a.phase.is_zero()).cloned().collect()
        };
        (!atoms.is_empty()).then(|| Obstruction { element: *g, atoms: ExpCoefficient { atoms } })
    });
    let (scale, coefficients): (Vec<_>, Vec<_>) = head.iter().cloned().unzip();
    let mut cert = LimitCertificate { scale, coefficients, obstruction, decay: None, checks: vec![], epsilon: None, dovetail: None };

    let Some(obs) = cert.obstruction.clone() else {
        cert.decay = first_decay(&dec)?;
        for y in sample_points(&f.domain, &LIMIT_POINTS) {
            let (v, err) = f.evaluate_with_error(y)?;
            let deviation = (v - value).norm();
            let bound = match &cert.decay {
                Some(d) => LIMIT_FACTOR * d.weight.max(1.0) * d.eval(y),
                None => 1e-12 * value.norm().max(1.0),
            } + err;
            cert.checks.push(LimitCheck { y, value: v, deviation, bound, ok: deviation <= bound });
        }
        return Ok(LimitReport { exists: true, value: Some(value), certificate: cert });
    };

    let a = f.domain.lower().max(1.0);
    let k0 = (a.log2().ceil() as u32 + 1).max(4);
    let ks = k0..=k0 + DOVETAIL_BLOCKS - 1;
    let epsilon = if obs.atoms.atoms.iter().any(|x| !x.phase.is_zero()) {
        let (m, _) = torus_max(&laurent_form(&obs.atoms.numeric()));
        EPSILON_SHARE * m
    } else {
        // Unbounded growth: the leading term alone moves by this much across a block.
        let lo = 2f64.powi(k0 as i32);
        EPSILON_SHARE * obs.atoms.eval(lo).norm() * (obs.element.eval(2.0 * lo) - obs.element.eval(lo))
    };
    // Candidate pairs from the non-decaying part, confirmed on f itself.
    let proxy = |y: f64| head.iter().map(|(g, e)| e.eval(y) * g.eval(y)).sum::<Complex64>();
    let rate = |y: f64| {
        head.iter().flat_map(|(_, e)| e.atoms.iter()).map(|x| x.phase.derivative(y).abs()).fold(0.0, f64::max)
    };
    let mut dv = dovetail(&proxy, &rate, epsilon, ks);
    for p in dv.pairs.iter_mut() {
        p.f0 = f.evaluate(p.t0)?;
        p.f1 = f.evaluate(p.t1)?;
        p.gap = (p.f0 - p.f1).norm();
    }
    dv.separated = dv.pairs.iter().all(|p| p.gap >= epsilon);
    cert.epsilon = Some(epsilon);
    cert.dovetail = Some(dv);
    Ok(LimitReport { exists: false, value: None, certificate: cert })
}

// ---------------------------------------------------------------------------
// Coefficient growth and the two non-membership demonstrations

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub convergent: bool,
    /// `1/lim |a_{k+1}/a_k|`; infinite for eventually zero sequences.
    pub radius_estimate: f64,
    /// `(k, |a_k/a_j|^{1/(k−j)})` for consecutive nonzero `a_j, a_k`.
    pub ratios: Vec<(usize, f64)>,
    /// Last ratio over first ratio.
    pub growth: f64,
}

/// Ratio test over `k ∈ [10, 30]`: a ratio that at least doubles across the
/// window means factorial growth.
pub fn divergence_diagnostic(coeffs: &[f64]) -> DivergenceReport {
    let hi = coeffs.len().saturating_sub(1).min(30);
    let lo = 10.min(hi / 3);
    let nz: Vec<usize> = (lo..=hi).filter(|&k| coeffs.get(k).is_some_and(|a| *a != 0.0 && a.is_finite())).collect();
    let ratios: Vec<(usize, f64)> =
        nz.windows(2).map(|w| (w[1], (coeffs[w[1]].abs() / coeffs[w[0]].abs()).powf(1.0 / (w[1] - w[0]) as f64))).collect();
    let (Some(first), Some(last)) = (ratios.first(), ratios.last()) else {
        return DivergenceReport { convergent: true, radius_estimate: f64::INFINITY, ratios, growth: 1.0 };
    };
    let growth = last.1 / first.1;
    DivergenceReport { convergent: growth < 2.0, radius_estimate: 1.0 / last.1, ratios, growth }
}

/// `(−1)^k (2k)!`, `k < n`: the series multiplying `cos y` in `Si(y)`.
pub fn si_cos_coefficients(n: usize) -> Vec<f64> {
    (0..n).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 } * (1..=2 * k).map(|j| j as f64).product::<f64>()).collect()
}

/// `(−1)^k (2k+1)!`, `k < n`: the series multiplying `sin y`.
pub fn si_sin_coefficients(n: usize) -> Vec<f64> {
    (0..n).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 } * (1..=2 * k + 1).map(|j| j as f64).product::<f64>()).collect()
}

/// `π/2 − cos y·Σ_{k<n} a_k y^{−2k−1} − sin y·Σ_{k<n} b_k y^{−2k−2}`.
pub fn si_asymptotic(y: f64, n: usize) -> f64 {
    let f1: f64 = si_cos_coefficients(n).iter().enumerate().map(|(k, a)| a / y.powi(2 * k as i32 + 1)).sum();
    let f2: f64 = si_sin_coefficients(n).iter().enumerate().map(|(k, b)| b / y.powi(2 * k as i32 + 2)).sum();
    FRAC_PI_2 - y.cos() * f1 - y.sin() * f2
}

/// `Si(y) = ∫_0^y sin t / t dt` by panel quadrature.
pub fn sine_integral(y: f64) -> std::result::Result<QuadResult, quad::QuadError> {
    let sinc = |t: f64| Complex64::new(if t == 0.0 { 1.0 } else { t.sin() / t }, 0.0);
    quad::truncated_integral(&sinc, 0.0, y)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SiReport {
    pub y: f64,
    pub terms: usize,
    pub si: f64,
    pub si_error: f64,
    pub asymptotic: f64,
    pub deviation: f64,
    /// Magnitude of the first omitted term, `(2n)!/y^{2n+1}`.
    pub next_term: f64,
    pub within_next_term: bool,
    /// The `cos y` series is divergent, so `Si` has no convergent expansion.
    pub cos_series: DivergenceReport,
}

pub fn si_demonstration(y: f64, terms: usize) -> std::result::Result<SiReport, quad::QuadError> {
    let q = sine_integral(y)?;
    let asymptotic = si_asymptotic(y, terms);
    let deviation = (q.value.re - asymptotic).abs();
    let next_term = si_cos_coefficients(terms + 1)[terms].abs() / y.powi(2 * terms as i32 + 1);
    Ok(SiReport {
        y,
        terms,
        si: q.value.re,
        si_error: q.error_bound,
        asymptotic,
        deviation,
        next_term,
        within_next_term: deviation <= next_term + q.error_bound,
        cos_series: divergence_diagnostic(&si_cos_coefficients(31)),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForcedZeroEntry {
    pub element: ScaleElement,
    /// `log10(e^{−y}/g(y))` at `FORCED_ZERO_POINTS`.
    pub log10_ratio: Vec<f64>,
    pub forced_zero: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForcedZeroReport {
    pub entries: Vec<ForcedZeroEntry>,
    pub all_forced_zero: bool,
    pub function_nonzero: bool,
}

pub const FORCED_ZERO_POINTS: [f64; 3] = [50.0, 100.0, 200.0];

/// `e^{−y}` against `y^{−n}`, `n ≤ max_order`: every ratio tends to zero, so
/// every coefficient of a putative expansion vanishes although `e^{−y} ≠ 0`.
pub fn forced_zero_demonstration(max_order: u32) -> ForcedZeroReport {
    let entries: Vec<ForcedZeroEntry> = (0..=max_order)
        .map(|n| {
            let log10_ratio: Vec<f64> = FORCED_ZERO_POINTS.iter().map(|y| (n as f64 * y.ln() - y) / LN_10).collect();
            let forced_zero = log10_ratio.windows(2).all(|w| w[1] < w[0]) && *log10_ratio.last().unwrap() < -10.0;
            ForcedZeroEntry { element: ScaleElement::new(Exponent::integer(-(n as i64)), 0), log10_ratio, forced_zero }
        })
        .collect();
    let all_forced_zero = entries.iter().all(|e| e.forced_zero);
    ForcedZeroReport { entries, all_forced_zero, function_nonzero: (-FORCED_ZERO_POINTS[2]).exp() > 0.0 }
}
