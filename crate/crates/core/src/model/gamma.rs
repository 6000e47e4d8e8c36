use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::constant::ConstantValue;
use crate::exponent::Exponent;
use crate::powersum::PowerSum;
use crate::quad::{self, Kernel, QuadResult, Upper};

/// Default number of kept coefficients on each side of a unit series.
pub const UNIT_ORDER: usize = 16;

/// Upper integration bound of a γ-factor.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    Finite(PowerSum),
    Infinity,
}

impl Bound {
    pub fn finite(&self) -> Option<&PowerSum> {
        match self {
            Bound::Finite(p) => Some(p),
            Bound::Infinity => None,
        }
    }
}

/// A float compared and hashed by bit pattern, so it can sit in a signature.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TailBound(pub f64);

impl PartialEq for TailBound {
    fn eq(&self, other: &Self) -> bool {
        self.0.to_bits() == other.0.to_bits()
    }
}
impl Eq for TailBound {}
impl Hash for TailBound {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.to_bits().hash(state)
    }
}
impl PartialOrd for TailBound {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for TailBound {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Truncated unit `u(t) = 1 + Σ aₖ(L/t)^{k/d} + Σ bₖ(t/U)^{k/d}`.
///
/// `tail` bounds the dropped part of the series on the integration interval.
/// The factor denotes the integral against the truncated series; the tail is
/// carried into error bounds only.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct UnitSeries {
    d: i64,
    lower: Vec<ConstantValue>,
    upper: Vec<ConstantValue>,
    tail: TailBound,
}

impl Default for UnitSeries {
    fn default() -> Self {
        UnitSeries::one()
    }
}

impl UnitSeries {
    pub fn one() -> Self {
        UnitSeries { d: 1, lower: Vec::new(), upper: Vec::new(), tail: TailBound(0.0) }
    }

    /// Builds a series truncated at [`UNIT_ORDER`].
    pub fn new(d: i64, lower: Vec<ConstantValue>, upper: Vec<ConstantValue>, tail: f64) -> Result<Self, ModelError> {
        Self::with_order(d, lower, upper, tail, UNIT_ORDER)
    }

    /// Keeps `order` coefficients per side; each dropped coefficient adds its
    /// magnitude to the tail since `(L/t)`, `(t/U)` are at most 1 on the interval.
    pub fn with_order(
        d: i64,
        mut lower: Vec<ConstantValue>,
        mut upper: Vec<ConstantValue>,
        tail: f64,
        order: usize,
    ) -> Result<Self, ModelError> {
        if d <= 0 {
            return Err(ModelError::Grammar(format!("unit denominator {d} must be positive")));
        }
        if !(tail >= 0.0) || !tail.is_finite() {
            return Err(ModelError::Grammar(format!("unit tail bound {tail} must be finite and non-negative")));
        }
        let mut tail = tail;
        for side in [&mut lower, &mut upper] {
            if side.len() > order {
                tail += side.drain(order..).map(|c| c.to_f64().abs()).sum::<f64>();
            }
            while side.last().is_some_and(ConstantValue::is_zero) {
                side.pop();
            }
        }
        let d = if lower.is_empty() && upper.is_empty() { 1 } else { d };
        Ok(UnitSeries { d, lower, upper, tail: TailBound(tail) })
    }

    pub fn is_one(&self) -> bool {
        self.lower.is_empty() && self.upper.is_empty()
    }

    pub fn denom(&self) -> i64 {
        self.d
    }

    pub fn lower_coeffs(&self) -> &[ConstantValue] {
        &self.lower
    }

    pub fn upper_coeffs(&self) -> &[ConstantValue] {
        &self.upper
    }

    pub fn tail(&self) -> f64 {
        self.tail.0
    }

    /// `u(t)` given numeric bounds.
    pub fn eval(&self, t: f64, lo: f64, hi: Option<f64>) -> f64 {
        let d = self.d as f64;
        let mut v = 1.0;
        for (k, a) in self.lower.iter().enumerate() {
            v += a.to_f64() * (lo / t).powf((k + 1) as f64 / d);
        }
        if let Some(hi) = hi {
            for (k, b) in self.upper.iter().enumerate() {
                v += b.to_f64() * (t / hi).powf((k + 1) as f64 / d);
            }
        }
        v
    }

    /// `sup |u|` on the interval, using `(L/t), (t/U) ≤ 1`.
    pub fn sup(&self) -> f64 {
        1.0 + self.lower.iter().chain(&self.upper).map(|c| c.to_f64().abs()).sum::<f64>() + self.tail.0
    }
}

/// `γ(y) = ∫_{L(y)}^{U(y)} t^ρ (log t)^σ e^{iσ₀t} u(t) dt`.
///
/// Bounds are power sums in `y`. When `U < L` the integral is oriented
/// (`∫_L^U = −∫_U^L`); such factors arise as bound-freezing corrections.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GammaFactor {
    pub rho: Exponent,
    pub sigma: u32,
    pub orientation: i8,
    pub lower: PowerSum,
    pub upper: Bound,
    #[serde(default, skip_serializing_if = "UnitSeries::is_one")]
    pub unit: UnitSeries,
}

impl GammaFactor {
    pub fn new(rho: Exponent, sigma: u32, orientation: i8, lower: PowerSum, upper: Bound) -> Result<Self, ModelError> {
        let g = GammaFactor { rho, sigma, orientation, lower, upper, unit: UnitSeries::one() };
        g.validate()?;
        Ok(g)
    }

    pub fn with_unit(mut self, unit: UnitSeries) -> Result<Self, ModelError> {
        self.unit = unit;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.orientation != 1 && self.orientation != -1 {
            return Err(ModelError::Grammar(format!("orientation {} is not ±1", self.orientation)));
        }
        let positive = |p: &PowerSum| p.terms().first().is_some_and(|(_, c)| c.to_f64() > 0.0);
        if !positive(&self.lower) {
            return Err(ModelError::Grammar(format!("γ lower bound {} is not eventually positive", self.lower)));
        }
        match &self.upper {
            Bound::Finite(u) if !positive(u) => {
                return Err(ModelError::Grammar(format!("γ upper bound {u} is not eventually positive")));
            }
            Bound::Infinity if !self.unit.upper.is_empty() => {
                return Err(ModelError::Grammar("unit has (t/U) terms but U = inf".into()));
            }
            _ => {}
        }
        Ok(())
    }

    /// True when neither bound depends on `y`.
    pub fn is_y_free(&self) -> bool {
        self.lower.as_constant().is_some() && self.upper.finite().is_none_or(|u| u.as_constant().is_some())
    }

    pub fn conj(&self) -> GammaFactor {
        GammaFactor { orientation: -self.orientation, ..self.clone() }
    }

    pub fn bounds_at(&self, y: f64) -> (f64, Option<f64>) {
        (self.lower.eval(y), self.upper.finite().map(|u| u.eval(y)))
    }

    /// `sup |t^ρ (log t)^σ|` over `t ≥ lo`, used for crude bounds.
    pub fn kernel_sup_from(&self, lo: f64, hi: Option<f64>) -> f64 {
        let rho = self.rho.to_f64();
        let s = self.sigma as f64;
        let f = |t: f64| t.powf(rho) * t.ln().abs().powf(s);
        let mut m = f(lo);
        if let Some(h) = hi {
            m = m.max(f(h));
        }
        if self.sigma > 0 && rho < 0.0 {
            let crit = (s / -rho).exp();
            if crit > lo && hi.is_none_or(|h| crit < h) {
                m = m.max(f(crit));
            }
        }
        m
    }

    /// Value at `y` with an error bound that includes the unit tail.
    pub fn eval(&self, y: f64) -> Result<QuadResult, ModelError> {
        let (lo, hi) = self.bounds_at(y);
        if !(lo > 0.0) || hi.is_some_and(|h| !(h > 0.0)) {
            return Err(ModelError::Domain(format!("γ bounds ({lo}, {hi:?}) at y={y} leave (0, ∞)")));
        }
        let mut r = match hi {
            Some(hi) => {
                let unit = |t: f64| self.unit.eval(t, lo, Some(hi));
                let mut k = Kernel::new(self.rho.to_f64(), self.sigma, self.orientation as i32);
                if !self.unit.is_one() {
                    k = k.with_unit(&unit);
                }
                quad::osc_integral(&k, lo, Upper::Finite(hi))?
            }
            None => {
                let d = self.unit.d as f64;
                let mut acc = ray_value(self.rho.to_f64(), self.sigma, self.orientation as i32, lo)?;
                for (k, a) in self.unit.lower.iter().enumerate() {
                    let e = (k + 1) as f64 / d;
                    let piece = ray_value(self.rho.to_f64() - e, self.sigma, self.orientation as i32, lo)?;
                    let w = a.to_f64() * lo.powf(e);
                    acc.value += piece.value * w;
                    acc.error_bound += piece.error_bound * w.abs();
                }
                acc
            }
        };
        if self.unit.tail() > 0.0 {
            r.error_bound += self.unit.tail() * self.abs_integral_bound(lo, hi);
        }
        Ok(r)
    }

    /// Upper bound for `∫ |t^ρ (log t)^σ| dt` over the interval.
    pub(crate) fn abs_integral_bound(&self, lo: f64, hi: Option<f64>) -> f64 {
        match hi {
            Some(h) => (h - lo).abs() * self.kernel_sup_from(lo.min(h), Some(lo.max(h))),
            None => abs_kernel_tail(self.rho.to_f64(), self.sigma, lo),
        }
    }
}

/// `∫_L^∞ t^ρ |log t|^σ dt` for `ρ < −1`; infinite otherwise.
pub(crate) fn abs_kernel_tail(rho: f64, sigma: u32, lo: f64) -> f64 {
    if rho >= -1.0 {
        return f64::INFINITY;
    }
    if lo < 1.0 {
        let f = |t: f64| Complex64::new(t.powf(rho) * t.ln().abs().powi(sigma as i32), 0.0);
        let head = quad::Adaptive::default().integrate(&f, lo, 1.0);
        return head.value.re + head.error + abs_kernel_tail(rho, sigma, 1.0);
    }
    // ∫_L^∞ t^ρ (log t)^σ = L^{ρ+1} Σ_j σ!/(σ−j)! (log L)^{σ−j} / |ρ+1|^{j+1}
    let m = -(rho + 1.0);
    let ll = lo.ln();
    let mut sum = 0.0;
    let mut fall = 1.0;
    for j in 0..=sigma {
        sum += fall * ll.powi((sigma - j) as i32) / m.powi(j as i32 + 1);
        fall *= (sigma - j) as f64;
    }
    lo.powf(rho + 1.0) * sum
}

/// `∫_a^∞ t^ρ (log t)^σ e^{iωt} dt` for `ρ < 0`; kernels with `ρ ≥ −1` are
/// reduced by integration by parts to absolutely convergent ones.
pub(crate) fn ray_value(rho: f64, sigma: u32, orientation: i32, a: f64) -> Result<QuadResult, ModelError> {
    if rho < -1.0 {
        return Ok(quad::improper_gamma(rho, sigma, orientation, a)?);
    }
    if rho >= 0.0 {
        return Err(ModelError::Oracle(quad::QuadError::Diverges { rho }));
    }
    let iw = Complex64::new(0.0, orientation as f64);
    let boundary = -Complex64::from_polar(1.0, orientation as f64 * a) * a.powf(rho) * a.ln().powi(sigma as i32) / iw;
    let mut r = ray_value(rho - 1.0, sigma, orientation, a)?;
    r.value = boundary - r.value * rho / iw;
    r.error_bound *= rho.abs();
    if sigma > 0 {
        let lower = ray_value(rho - 1.0, sigma - 1, orientation, a)?;
        r.value -= lower.value * sigma as f64 / iw;
        r.error_bound += lower.error_bound * sigma as f64;
    }
    Ok(r)
}

impl fmt::Display for GammaFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let upper = match &self.upper {
            Bound::Finite(u) => u.to_string(),
            Bound::Infinity => "inf".to_string(),
        };
        write!(f, "gamma({}, {}, {}, {}, {upper}", self.rho, self.sigma, self.orientation, self.lower)?;
        if !self.unit.is_one() || self.unit.tail() > 0.0 {
            let list = |v: &[ConstantValue]| v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", ");
            write!(f, ", d={}", self.unit.d)?;
            if !self.unit.lower.is_empty() {
                write!(f, ", lo=[{}]", list(&self.unit.lower))?;
            }
            if !self.unit.upper.is_empty() {
                write!(f, ", hi=[{}]", list(&self.unit.upper))?;
            }
            if self.unit.tail() > 0.0 {
                write!(f, ", tail={:?}", self.unit.tail())?;
            }
        }
        write!(f, ")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ray(rho: Exponent, sigma: u32, orient: i8, a: i64) -> GammaFactor {
        GammaFactor::new(rho, sigma, orient, PowerSum::constant(ConstantValue::integer(a)), Bound::Infinity).unwrap()
    }

    #[test]
    fn conditionally_convergent_rays_go_through_parts() {
        // ∫_1^∞ e^{it}/t dt = −Ci(1) − i(π/2 − Si(1))... compare with the bounded integral plus IBP tail.
        let g = ray(Exponent::MINUS_ONE, 0, 1, 1).eval(0.0).unwrap();
        let ci1 = 0.337_403_922_900_968_1;
        let si1 = 0.946_083_070_367_183_0;
        let exact = Complex64::new(-ci1, std::f64::consts::FRAC_PI_2 - si1);
        assert!((g.value - exact).norm() < 1e-9, "{}", g.value);
    }

    #[test]
    fn unit_series_truncation_moves_mass_to_tail() {
        let coeffs = vec![ConstantValue::rational(num_rational::Rational64::new(1, 2)); 20];
        let u = UnitSeries::with_order(1, coeffs, vec![], 0.0, 16).unwrap();
        assert_eq!(u.lower_coeffs().len(), 16);
        assert!((u.tail() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn lower_unit_terms_on_a_ray() {
        // u = 1 + (L/t) turns t^{-2} into t^{-2} + L t^{-3}
        let mut g = ray(Exponent::integer(-2), 0, 1, 2);
        g.unit = UnitSeries::new(1, vec![ConstantValue::one()], vec![], 0.0).unwrap();
        let v = g.eval(0.0).unwrap().value;
        let a = quad::improper_gamma(-2.0, 0, 1, 2.0).unwrap().value;
        let b = quad::improper_gamma(-3.0, 0, 1, 2.0).unwrap().value;
        assert!((v - (a + b * 2.0)).norm() < 1e-12);
    }

    #[test]
    fn display_lists_unit_data() {
        let mut g = ray(Exponent::new(-3, 2), 1, -1, 1);
        assert_eq!(g.to_string(), "gamma(-3/2, 1, -1, 1, inf)");
        g.unit = UnitSeries::new(2, vec![ConstantValue::zero(), ConstantValue::integer(3)], vec![], 1e-9).unwrap();
        assert_eq!(g.to_string(), "gamma(-3/2, 1, -1, 1, inf, d=2, lo=[0, 3], tail=1e-9)");
    }
}
