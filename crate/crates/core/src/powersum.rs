use std::fmt;

use serde::{Deserialize, Serialize};

use crate::constant::ConstantValue;
use crate::exponent::Exponent;

/// Finite sum `Σ cₖ·y^{eₖ}` with exact coefficients and rational exponents.
///
/// Used for integration bounds (`2 + y^(-1)`, `y`, `(1/2)*y^(3/2)`) and for the
/// decaying arguments of unit factors. Terms are kept sorted by exponent,
/// descending, with no zero coefficients and no repeated exponents.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PowerSum {
    terms: Vec<(Exponent, ConstantValue)>,
}

impl PowerSum {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: ConstantValue) -> Self {
        Self::from_terms([(Exponent::ZERO, c)])
    }

    pub fn monomial(c: ConstantValue, e: Exponent) -> Self {
        Self::from_terms([(e, c)])
    }

    pub fn from_terms<I: IntoIterator<Item = (Exponent, ConstantValue)>>(it: I) -> Self {
        let mut terms: Vec<(Exponent, ConstantValue)> = Vec::new();
        for (e, c) in it {
            match terms.iter_mut().find(|(f, _)| *f == e) {
                Some((_, acc)) => *acc = &*acc + &c,
                None => terms.push((e, c)),
            }
        }
        terms.retain(|(_, c)| !c.is_zero());
        terms.sort_by(|a, b| b.0.cmp(&a.0));
        Self { terms }
    }

    pub fn terms(&self) -> &[(Exponent, ConstantValue)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, y: f64) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c.to_f64() * y.powf(e.to_f64()))
            .sum()
    }

    /// The value if the sum does not depend on `y`.
    pub fn as_constant(&self) -> Option<ConstantValue> {
        match self.terms.as_slice() {
            [] => Some(ConstantValue::zero()),
            [(e, c)] if e.is_zero() => Some(c.clone()),
            _ => None,
        }
    }

    pub fn as_monomial(&self) -> Option<(ConstantValue, Exponent)> {
        match self.terms.as_slice() {
            [(e, c)] => Some((c.clone(), *e)),
            _ => None,
        }
    }

    pub fn leading_exponent(&self) -> Option<Exponent> {
        self.terms.first().map(|(e, _)| *e)
    }

    pub fn constant_term(&self) -> ConstantValue {
        self.terms
            .iter()
            .find(|(e, _)| e.is_zero())
            .map(|(_, c)| c.clone())
            .unwrap_or_default()
    }

    /// The terms with negative exponent.
    pub fn decaying_part(&self) -> PowerSum {
        Self {
            terms: self.terms.iter().filter(|(e, _)| *e < Exponent::ZERO).cloned().collect(),
        }
    }

    /// `sup_{y ≥ a} |Σ cₖ y^{eₖ}|` bound for sums with only negative exponents,
    /// written as `B·y^{-m}` with `m` the slowest decay: returns `(B, m)`.
    pub fn decay_envelope(&self, a: f64) -> Option<(f64, Exponent)> {
        let slowest = self.terms.first()?.0;
        if slowest >= Exponent::ZERO {
            return None;
        }
        let b = self
            .terms
            .iter()
            .map(|(e, c)| c.to_f64().abs() * a.powf((*e - slowest).to_f64()))
            .sum();
        Some((b, -slowest))
    }

    pub fn neg(&self) -> PowerSum {
        Self {
            terms: self.terms.iter().map(|(e, c)| (*e, -c)).collect(),
        }
    }

    pub fn add(&self, other: &PowerSum) -> PowerSum {
        Self::from_terms(self.terms.iter().chain(other.terms.iter()).cloned())
    }

    /// Product, when every coefficient product stays inside the constant span.
    pub fn checked_mul(&self, other: &PowerSum) -> Option<PowerSum> {
        let mut out = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (e, c) in &self.terms {
            for (f, k) in &other.terms {
                out.push((*e + *f, c.checked_mul(k)?));
            }
        }
        Some(Self::from_terms(out))
    }

    /// Numeric `(coefficient, exponent)` pairs.
    pub fn numeric_terms(&self) -> Vec<(f64, f64)> {
        self.terms.iter().map(|(e, c)| (c.to_f64(), e.to_f64())).collect()
    }

    pub fn derivative(&self, y: f64) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                let e = e.to_f64();
                if e == 0.0 { 0.0 } else { c.to_f64() * e * y.powf(e - 1.0) }
            })
            .sum()
    }

    /// Exponent grid `1/d` shared by all terms.
    pub fn common_denom(&self) -> i64 {
        self.terms
            .iter()
            .fold(1, |acc, (e, _)| num_integer::lcm(acc, e.denom()))
    }
}

fn write_monomial(f: &mut fmt::Formatter<'_>, c: &ConstantValue, e: Exponent, first: bool) -> fmt::Result {
    let sign = c.leading_sign();
    let mag = if sign < 0 { -c } else { c.clone() };
    let is_single = mag.weights().iter().filter(|w| **w != num_rational::Rational64::from_integer(0)).count() == 1;
    let coeff = if is_single { mag.to_string() } else { format!("({mag})") };
    let body = if e.is_zero() {
        coeff
    } else if mag == ConstantValue::one() {
        format_power(e)
    } else {
        format!("{coeff}*{}", format_power(e))
    };
    match (first, sign < 0) {
        (true, true) => write!(f, "-{body}"),
        (true, false) => write!(f, "{body}"),
        (false, true) => write!(f, " - {body}"),
        (false, false) => write!(f, " + {body}"),
    }
}

pub(crate) fn format_power(e: Exponent) -> String {
    if e == Exponent::ONE {
        "y".to_string()
    } else {
        format!("y^({e})")
    }
}

impl fmt::Display for PowerSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (e, c)) in self.terms.iter().enumerate() {
            write_monomial(f, c, *e, i == 0)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constant::Basis;

    #[test]
    fn merges_and_sorts() {
        let p = PowerSum::from_terms([
            (Exponent::integer(-1), ConstantValue::one()),
            (Exponent::ZERO, ConstantValue::integer(2)),
            (Exponent::integer(-1), ConstantValue::one()),
        ]);
        assert_eq!(p.to_string(), "2 + 2*y^(-1)");
        assert_eq!(p.constant_term(), ConstantValue::integer(2));
        assert!((p.eval(4.0) - 2.5).abs() < 1e-15);
        assert_eq!(p.decaying_part().decay_envelope(2.0).unwrap(), (2.0, Exponent::ONE));
    }

    #[test]
    fn monomials_and_constants() {
        let m = PowerSum::monomial(ConstantValue::basis(Basis::Sqrt2), Exponent::new(1, 2));
        assert_eq!(m.to_string(), "sqrt2*y^(1/2)");
        assert!(m.as_constant().is_none());
        assert_eq!(PowerSum::constant(ConstantValue::integer(3)).as_constant(), Some(ConstantValue::integer(3)));
    }
}
