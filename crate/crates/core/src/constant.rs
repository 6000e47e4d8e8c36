//! Exact real constants in the rational span of a fixed basis.

use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;

use num_rational::Rational64;
use num_traits::{CheckedAdd, CheckedMul, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Names of the basis constants, in storage order.
pub const BASIS_NAMES: [&str; 5] = ["one", "sqrt2", "sqrt3", "pi", "log2"];

/// Numeric values of the basis constants, in storage order.
pub const BASIS_VALUES: [f64; 5] = [
    1.0,
    std::f64::consts::SQRT_2,
    1.732_050_807_568_877_2,
    std::f64::consts::PI,
    std::f64::consts::LN_2,
];

/// Index of a basis constant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Basis {
    One = 0,
    Sqrt2 = 1,
    Sqrt3 = 2,
    Pi = 3,
    Log2 = 4,
}

impl Basis {
    pub fn from_name(name: &str) -> Option<Basis> {
        match name {
            "sqrt2" => Some(Basis::Sqrt2),
            "sqrt3" => Some(Basis::Sqrt3),
            "pi" => Some(Basis::Pi),
            "log2" => Some(Basis::Log2),
            _ => None,
        }
    }
}

/// `Σ wᵢ·bᵢ` over the basis `{1, √2, √3, π, log 2}` with exact rational weights.
///
/// Equality is equality of the weight vectors, which is exact equality of the
/// represented reals as long as the basis is ℚ-linearly independent (it is
/// for `1, √2, √3`; for `π` and `log 2` this is the standard working
/// assumption).
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConstantValue {
    weights: [Rational64; 5],
}

impl ConstantValue {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::rational(Rational64::one())
    }

    pub fn rational(q: Rational64) -> Self {
        let mut c = Self::zero();
        c.weights[0] = q;
        c
    }

    pub fn integer(n: i64) -> Self {
        Self::rational(Rational64::from_integer(n))
    }

    pub fn basis(b: Basis) -> Self {
        let mut c = Self::zero();
        c.weights[b as usize] = Rational64::one();
        c
    }

    pub fn from_weights(weights: [Rational64; 5]) -> Self {
        Self { weights }
    }

    pub fn weights(&self) -> &[Rational64; 5] {
        &self.weights
    }

    pub fn is_zero(&self) -> bool {
        self.weights.iter().all(Zero::is_zero)
    }

    /// The rational value if only the `one` weight is nonzero.
    pub fn as_rational(&self) -> Option<Rational64> {
        if self.weights[1..].iter().all(Zero::is_zero) {
            Some(self.weights[0])
        } else {
            None
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.weights
            .iter()
            .zip(BASIS_VALUES)
            .map(|(w, b)| w.to_f64().unwrap_or(f64::NAN) * b)
            .sum()
    }

    pub fn scale(&self, q: Rational64) -> Self {
        let mut out = self.clone();
        for w in out.weights.iter_mut() {
            *w *= q;
        }
        out
    }

    /// `scale` without overflow.
    pub fn checked_scale(&self, q: Rational64) -> Option<Self> {
        let mut out = self.clone();
        for w in out.weights.iter_mut() {
            *w = w.checked_mul(&q)?;
        }
        Some(out)
    }

    pub fn checked_add(&self, other: &Self) -> Option<Self> {
        let mut out = self.clone();
        for (w, r) in out.weights.iter_mut().zip(other.weights.iter()) {
            *w = w.checked_add(r)?;
        }
        Some(out)
    }

    /// Product, when it stays inside the basis span.
    ///
    /// Closed cases: either factor rational, or both factors rational
    /// multiples of the same square root.
    pub fn checked_mul(&self, other: &Self) -> Option<Self> {
        if let Some(q) = self.as_rational() {
            return other.checked_scale(q);
        }
        if let Some(q) = other.as_rational() {
            return self.checked_scale(q);
        }
        for (idx, square) in [(1usize, 2i64), (2, 3)] {
            let only = |c: &Self| {
                c.weights
                    .iter()
                    .enumerate()
                    .all(|(i, w)| i == idx || w.is_zero())
            };
            if only(self) && only(other) {
                let w = self.weights[idx].checked_mul(&other.weights[idx])?.checked_mul(&Rational64::from_integer(square))?;
                return Some(Self::rational(w));
            }
        }
        None
    }

    /// Position of the first nonzero weight, used as a sign convention.
    pub fn leading_sign(&self) -> i32 {
        for w in &self.weights {
            if w.is_positive() {
                return 1;
            }
            if w.is_negative() {
                return -1;
            }
        }
        0
    }
}

impl Add for &ConstantValue {
    type Output = ConstantValue;
    fn add(self, rhs: &ConstantValue) -> ConstantValue {
        let mut out = self.clone();
        for (w, r) in out.weights.iter_mut().zip(rhs.weights.iter()) {
            *w += *r;
        }
        out
    }
}

impl Sub for &ConstantValue {
    type Output = ConstantValue;
    fn sub(self, rhs: &ConstantValue) -> ConstantValue {
        self + &(-rhs)
    }
}

impl Neg for &ConstantValue {
    type Output = ConstantValue;
    fn neg(self) -> ConstantValue {
        self.scale(-Rational64::one())
    }
}

pub(crate) fn fmt_rational(q: &Rational64) -> String {
    if q.is_integer() {
        format!("{}", q.numer())
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

impl fmt::Display for ConstantValue {
    /// Prints in the expression grammar, e.g. `3/2 + 2*sqrt2 - pi`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<(bool, String)> = Vec::new();
        for (i, w) in self.weights.iter().enumerate() {
            if w.is_zero() {
                continue;
            }
            let neg = w.is_negative();
            let a = w.abs();
            let body = if i == 0 {
                fmt_rational(&a)
            } else if a.is_one() {
                BASIS_NAMES[i].to_string()
            } else {
                format!("{}*{}", fmt_rational(&a), BASIS_NAMES[i])
            };
            parts.push((neg, body));
        }
        if parts.is_empty() {
            return write!(f, "0");
        }
        for (k, (neg, body)) in parts.iter().enumerate() {
            match (k, neg) {
                (0, true) => write!(f, "-{body}")?,
                (0, false) => write!(f, "{body}")?,
                (_, true) => write!(f, " - {body}")?,
                (_, false) => write!(f, " + {body}")?,
            }
        }
        Ok(())
    }
}

fn parse_rational(s: &str) -> Result<Rational64, String> {
    let int = |t: &str| t.trim().parse::<i64>().map_err(|e| format!("bad rational {s:?}: {e}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let d = int(d)?;
            if d == 0 {
                return Err(format!("bad rational {s:?}: zero denominator"));
            }
            Ok(Rational64::new(int(n)?, d))
        }
        None => Ok(Rational64::from_integer(int(s)?)),
    }
}

impl FromStr for ConstantValue {
    type Err = String;

    /// Reads the printed form: signed summands `q`, `name` or `q*name`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = ConstantValue::zero();
        let mut rest = s.trim();
        let mut neg = false;
        if let Some(r) = rest.strip_prefix('-') {
            neg = true;
            rest = r.trim_start();
        }
        loop {
            let end = rest.find([' ', '+']).map_or(rest.len(), |i| {
                rest[i..].find(['+', '-']).map_or(rest.len(), |j| i + j)
            });
            let part = rest[..end].trim();
            let (q, b) = match part.split_once('*') {
                Some((q, name)) => (parse_rational(q)?, Basis::from_name(name.trim()).ok_or(format!("unknown constant {name:?}"))?),
                None => match Basis::from_name(part) {
                    Some(b) => (Rational64::one(), b),
                    None => (parse_rational(part)?, Basis::One),
                },
            };
            out.weights[b as usize] += if neg { -q } else { q };
            if end == rest.len() {
                return Ok(out);
            }
            neg = rest.as_bytes()[end] == b'-';
            rest = rest[end + 1..].trim_start();
        }
    }
}

impl Serialize for ConstantValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ConstantValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        String::deserialize(deserializer)?.parse().map_err(serde::de::Error::custom)
    }
}
