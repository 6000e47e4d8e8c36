use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::exponent::Exponent;
use crate::powersum::PowerSum;

/// A factor tending to a constant (or to zero) as `y → ∞`.
///
/// `skip = 0` is the whole function; `skip = K` is the remainder after the
/// first `K` terms of its power series, which is what phase-tail and unit
/// expansion leave behind.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UnitFactor {
    /// `e^{iψ(y)} − Σ_{k<K} (iψ)^k/k!` with `ψ → 0`.
    ExpTail { psi: PowerSum, skip: u32 },
    /// `(1 + b(y))^p − Σ_{k<K} C(p,k) b^k` with `b → 0`.
    BinomialTail { base: PowerSum, power: Exponent, skip: u32 },
}

fn decaying(p: &PowerSum, what: &str) -> Result<(), ModelError> {
    match p.leading_exponent() {
        None => Err(ModelError::Grammar(format!("{what} is zero"))),
        Some(e) if e >= Exponent::ZERO => {
            Err(ModelError::Grammar(format!("{what} {p} must have only negative exponents")))
        }
        _ => Ok(()),
    }
}

/// `C(p, k)` for rational `p`.
pub fn binomial(p: f64, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (p - j as f64) / (j + 1) as f64)
}

impl UnitFactor {
    pub fn exp_tail(psi: PowerSum, skip: u32) -> Result<Self, ModelError> {
        decaying(&psi, "phase tail")?;
        Ok(UnitFactor::ExpTail { psi, skip })
    }

    /// Whole-function binomials with a natural power are polynomials and are
    /// refused here; callers expand them instead.
    pub fn binomial_tail(base: PowerSum, power: Exponent, skip: u32) -> Result<Self, ModelError> {
        decaying(&base, "binomial base")?;
        if power.is_zero() {
            return Err(ModelError::Grammar("binomial unit with power 0".into()));
        }
        if skip == 0 && power.is_integer() && power > Exponent::ZERO {
            return Err(ModelError::Grammar(format!("binomial power {power} is a polynomial")));
        }
        Ok(UnitFactor::BinomialTail { base, power, skip })
    }

    pub fn skip(&self) -> u32 {
        match self {
            UnitFactor::ExpTail { skip, .. } | UnitFactor::BinomialTail { skip, .. } => *skip,
        }
    }

    pub fn argument(&self) -> &PowerSum {
        match self {
            UnitFactor::ExpTail { psi, .. } => psi,
            UnitFactor::BinomialTail { base, .. } => base,
        }
    }

    pub fn conj(&self) -> UnitFactor {
        match self {
            UnitFactor::ExpTail { psi, skip } => UnitFactor::ExpTail { psi: psi.neg(), skip: *skip },
            b => b.clone(),
        }
    }

    pub fn eval(&self, y: f64) -> Result<Complex64, ModelError> {
        match self {
            UnitFactor::ExpTail { psi, skip } => {
                let z = Complex64::new(0.0, psi.eval(y));
                Ok(exp_remainder(z, *skip))
            }
            UnitFactor::BinomialTail { base, power, skip } => {
                let b = base.eval(y);
                if !(1.0 + b > 0.0) {
                    return Err(ModelError::Domain(format!("binomial base 1 + ({base}) is not positive at y={y}")));
                }
                Ok(Complex64::new(binomial_remainder(b, power.to_f64(), *skip), 0.0))
            }
        }
    }

    /// `(C, m)` with `|u(y)| ≤ C·y^{-m}` for `y ≥ a`, or `None` if the
    /// argument is not small enough there for the bound to hold.
    pub fn envelope(&self, a: f64) -> Option<(f64, Exponent)> {
        if let UnitFactor::ExpTail { skip: 0, .. } = self {
            // e^{iψ} with real ψ has modulus one.
            return Some((1.0, Exponent::ZERO));
        }
        let (beta, m) = self.argument().decay_envelope(a)?;
        let sup = beta * a.powf(-m.to_f64());
        let k = self.skip();
        match self {
            UnitFactor::ExpTail { .. } => {
                let fact: f64 = (1..=k).map(|j| j as f64).product();
                Some((beta.powi(k as i32) * sup.exp() / fact, m.mul_int(k as i64)))
            }
            UnitFactor::BinomialTail { power, .. } => {
                if sup >= 1.0 {
                    return None;
                }
                let p = power.to_f64();
                if k == 0 {
                    let c = (1.0 + sup).powf(p).max((1.0 - sup).powf(p));
                    return Some((c, Exponent::ZERO));
                }
                // Σ_{j≥0} |C(p, K+j)| sup^j, summed until the terms are negligible.
                let mut total = 0.0;
                let mut j = 0u32;
                loop {
                    let t = binomial(p, k + j).abs() * sup.powi(j as i32);
                    total += t;
                    j += 1;
                    if t < 1e-17 * total || j > 10_000 {
                        break;
                    }
                }
                Some((beta.powi(k as i32) * total, m.mul_int(k as i64)))
            }
        }
    }
}

/// `e^z − Σ_{k<K} z^k/k!`, summed directly for small `|z|`.
pub fn exp_remainder(z: Complex64, skip: u32) -> Complex64 {
    if skip == 0 {
        return z.exp();
    }
    if z.norm() < 1.0 {
        let mut term = Complex64::new(1.0, 0.0);
        for k in 1..=skip {
            term *= z / k as f64;
        }
        let mut sum = Complex64::new(0.0, 0.0);
        let mut k = skip;
        loop {
            sum += term;
            k += 1;
            term *= z / k as f64;
            if term.norm() <= 1e-18 * sum.norm() || term.norm() == 0.0 {
                return sum;
            }
        }
    }
    let mut head = Complex64::new(0.0, 0.0);
    let mut term = Complex64::new(1.0, 0.0);
    for k in 0..skip {
        head += term;
        term *= z / (k + 1) as f64;
    }
    z.exp() - head
}

/// `(1+b)^p − Σ_{k<K} C(p,k) b^k`.
pub fn binomial_remainder(b: f64, p: f64, skip: u32) -> f64 {
    if skip == 0 {
        return (1.0 + b).powf(p);
    }
    if b.abs() < 0.5 {
        let mut sum = 0.0;
        let mut k = skip;
        loop {
            let t = binomial(p, k) * b.powi(k as i32);
            sum += t;
            k += 1;
            if t.abs() <= 1e-18 * sum.abs() || t == 0.0 || k > skip + 2000 {
                return sum;
            }
        }
    }
    let head: f64 = (0..skip).map(|k| binomial(p, k) * b.powi(k as i32)).sum();
    (1.0 + b).powf(p) - head
}

impl fmt::Display for UnitFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UnitFactor::ExpTail { psi, skip: 0 } => write!(f, "exp(i*({psi}))"),
            UnitFactor::ExpTail { psi, skip } => write!(f, "exptail(i*({psi}), {skip})"),
            UnitFactor::BinomialTail { base, power, skip: 0 } => write!(f, "(1 + {base})^({power})"),
            UnitFactor::BinomialTail { base, power, skip } => write!(f, "bintail({power}, {base}, {skip})"),
        }
    }
}
