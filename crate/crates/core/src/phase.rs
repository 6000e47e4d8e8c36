use std::fmt;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::constant::ConstantValue;
use crate::exponent::Exponent;
use crate::powersum::PowerSum;

/// Real phase `φ(y) = Σ_{k=1..K} cₖ·y^{k/d}`, a polynomial in `y^{1/d}` with no
/// constant term.
///
/// Stored normalized: trailing zero coefficients are trimmed and `d` is the
/// smallest denominator that represents every exponent, so structural
/// equality is equality of functions. The derived order is lexicographic on
/// `(d, coefficients)`, which is the canonical phase ordering.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Phase {
    #[serde(rename = "d")]
    denom: i64,
    coeffs: Vec<ConstantValue>,
}

impl Default for Phase {
    fn default() -> Self {
        Phase::zero()
    }
}

impl Phase {
    pub fn zero() -> Self {
        Phase { denom: 1, coeffs: Vec::new() }
    }

    /// `c·y`.
    pub fn linear(c: ConstantValue) -> Self {
        Phase::from_coeffs(1, vec![c])
    }

    pub fn monomial(c: ConstantValue, e: Exponent) -> Result<Self, String> {
        Phase::from_terms([(e, c)])
    }

    /// `coeffs[k-1]` multiplies `y^{k/d}`.
    pub fn from_coeffs(denom: i64, coeffs: Vec<ConstantValue>) -> Self {
        assert!(denom > 0, "phase denominator must be positive");
        let mut p = Phase { denom, coeffs };
        p.normalize();
        p
    }

    /// Builds a phase from `(exponent, coefficient)` pairs; every exponent with
    /// a nonzero coefficient must be positive.
    pub fn from_terms<I: IntoIterator<Item = (Exponent, ConstantValue)>>(it: I) -> Result<Self, String> {
        let sum = PowerSum::from_terms(it);
        let mut d = 1i64;
        for (e, _) in sum.terms() {
            if *e <= Exponent::ZERO {
                return Err(format!("phase exponent {e} is not positive"));
            }
            d = d.lcm(&e.denom());
        }
        let top = sum.terms().first().map(|(e, _)| (e.numer() * (d / e.denom())) as usize).unwrap_or(0);
        let mut coeffs = vec![ConstantValue::zero(); top];
        for (e, c) in sum.terms() {
            let k = (e.numer() * (d / e.denom())) as usize;
            coeffs[k - 1] = c.clone();
        }
        Ok(Phase::from_coeffs(d, coeffs))
    }

    fn normalize(&mut self) {
        while self.coeffs.last().is_some_and(ConstantValue::is_zero) {
            self.coeffs.pop();
        }
        if self.coeffs.is_empty() {
            self.denom = 1;
            return;
        }
        let mut g = self.denom;
        for (i, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                g = g.gcd(&(i as i64 + 1));
            }
        }
        if g > 1 {
            let n = self.coeffs.len() / g as usize;
            let coeffs = (1..=n).map(|k| self.coeffs[k * g as usize - 1].clone()).collect();
            self.coeffs = coeffs;
            self.denom /= g;
        }
    }

    pub fn denom(&self) -> i64 {
        self.denom
    }

    pub fn coeffs(&self) -> &[ConstantValue] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Nonzero `(exponent, coefficient)` pairs, ascending in exponent.
    pub fn terms(&self) -> impl Iterator<Item = (Exponent, &ConstantValue)> + '_ {
        let d = self.denom;
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(move |(i, c)| (Exponent::new(i as i64 + 1, d), c))
    }

    pub fn degree(&self) -> Exponent {
        Exponent::new(self.coeffs.len() as i64, self.denom)
    }

    pub fn leading(&self) -> Option<&ConstantValue> {
        self.coeffs.last()
    }

    /// Numeric terms `(coefficient, exponent)`.
    pub fn numeric_terms(&self) -> Vec<(f64, f64)> {
        self.terms().map(|(e, c)| (c.to_f64(), e.to_f64())).collect()
    }

    pub fn eval(&self, y: f64) -> f64 {
        self.terms().map(|(e, c)| c.to_f64() * y.powf(e.to_f64())).sum()
    }

    pub fn derivative(&self, y: f64) -> f64 {
        self.terms()
            .map(|(e, c)| {
                let e = e.to_f64();
                c.to_f64() * e * y.powf(e - 1.0)
            })
            .sum()
    }

    pub fn to_power_sum(&self) -> PowerSum {
        PowerSum::from_terms(self.terms().map(|(e, c)| (e, c.clone())))
    }

    pub fn add(&self, other: &Phase) -> Phase {
        let sum = self.to_power_sum().add(&other.to_power_sum());
        Phase::from_terms(sum.terms().iter().cloned()).expect("sum of phases has positive exponents")
    }

    pub fn neg(&self) -> Phase {
        Phase { denom: self.denom, coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }

    pub fn scale(&self, q: num_rational::Rational64) -> Phase {
        Phase::from_coeffs(self.denom, self.coeffs.iter().map(|c| c.scale(q)).collect())
    }

    /// The phase as a linear function `ω·y`, if it is one.
    pub fn as_linear(&self) -> Option<&ConstantValue> {
        match (self.denom, self.coeffs.as_slice()) {
            (1, [c]) => Some(c),
            _ => None,
        }
    }

    /// Writes the phase using `var` as the variable name.
    pub fn display_in(&self, var: &str) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        self.to_power_sum().to_string().replace('y', var)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display_in("y"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constant::Basis;

    #[test]
    fn denominator_is_reduced() {
        // y^{2/4} + y^{4/4} is y^{1/2} + y
        let p = Phase::from_coeffs(
            4,
            vec![ConstantValue::zero(), ConstantValue::one(), ConstantValue::zero(), ConstantValue::one()],
        );
        assert_eq!(p.denom(), 2);
        assert_eq!(p.coeffs().len(), 2);
        assert_eq!(p, Phase::from_terms([(Exponent::new(1, 2), ConstantValue::one()), (Exponent::ONE, ConstantValue::one())]).unwrap());
    }

    #[test]
    fn no_constant_term_allowed() {
        assert!(Phase::from_terms([(Exponent::ZERO, ConstantValue::one())]).is_err());
        assert!(Phase::from_terms([(Exponent::integer(-1), ConstantValue::one())]).is_err());
        assert_eq!(Phase::zero().eval(123.0), 0.0);
    }

    #[test]
    fn addition_cancels_exactly() {
        let p = Phase::linear(ConstantValue::basis(Basis::Sqrt2));
        assert!(p.add(&p.neg()).is_zero());
        let q = p.add(&Phase::linear(ConstantValue::one()));
        assert_eq!(q.to_string(), "(1 + sqrt2)*y");
        assert!((q.derivative(3.0) - (1.0 + 2f64.sqrt())).abs() < 1e-15);
    }
}
