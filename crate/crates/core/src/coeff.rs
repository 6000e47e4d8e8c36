use std::fmt;

use num_complex::Complex64;
use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::constant::ConstantValue;

/// A term coefficient.
///
/// Exact coefficients are pairs of [`ConstantValue`]s. Arithmetic that leaves
/// the constant span (e.g. `π·√2`) or that involves a float coerces to
/// `Float`; `is_exact` records which one a coefficient is.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coeff {
    Exact { re: ConstantValue, im: ConstantValue },
    Float { re: f64, im: f64 },
}

impl Default for Coeff {
    fn default() -> Self {
        Coeff::zero()
    }
}

impl Coeff {
    pub fn zero() -> Self {
        Coeff::Exact { re: ConstantValue::zero(), im: ConstantValue::zero() }
    }

    pub fn one() -> Self {
        Coeff::real(ConstantValue::one())
    }

    pub fn i() -> Self {
        Coeff::Exact { re: ConstantValue::zero(), im: ConstantValue::one() }
    }

    pub fn real(c: ConstantValue) -> Self {
        Coeff::Exact { re: c, im: ConstantValue::zero() }
    }

    pub fn rational(q: Rational64) -> Self {
        Coeff::real(ConstantValue::rational(q))
    }

    pub fn float(z: Complex64) -> Self {
        Coeff::Float { re: z.re, im: z.im }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Coeff::Exact { .. })
    }

    /// Exact zero test; float coefficients are zero only when both parts are `0.0`.
    pub fn is_zero(&self) -> bool {
        match self {
            Coeff::Exact { re, im } => re.is_zero() && im.is_zero(),
            Coeff::Float { re, im } => *re == 0.0 && *im == 0.0,
        }
    }

    pub fn value(&self) -> Complex64 {
        match self {
            Coeff::Exact { re, im } => Complex64::new(re.to_f64(), im.to_f64()),
            Coeff::Float { re, im } => Complex64::new(*re, *im),
        }
    }

    pub fn add(&self, other: &Coeff) -> Coeff {
        match (self, other) {
            (Coeff::Exact { re: a, im: b }, Coeff::Exact { re: c, im: d }) => match (a.checked_add(c), b.checked_add(d)) {
                (Some(re), Some(im)) => Coeff::Exact { re, im },
                _ => Coeff::float(self.value() + other.value()),
            },
            _ => Coeff::float(self.value() + other.value()),
        }
    }

    pub fn mul(&self, other: &Coeff) -> Coeff {
        if let (Coeff::Exact { re: a, im: b }, Coeff::Exact { re: c, im: d }) = (self, other) {
            let exact = (|| {
                let ac = a.checked_mul(c)?;
                let bd = b.checked_mul(d)?;
                let ad = a.checked_mul(d)?;
                let bc = b.checked_mul(c)?;
                Some(Coeff::Exact { re: ac.checked_add(&-&bd)?, im: ad.checked_add(&bc)? })
            })();
            if let Some(c) = exact {
                return c;
            }
        }
        Coeff::float(self.value() * other.value())
    }

    pub fn scale(&self, q: Rational64) -> Coeff {
        match self {
            Coeff::Exact { re, im } => match (re.checked_scale(q), im.checked_scale(q)) {
                (Some(re), Some(im)) => Coeff::Exact { re, im },
                _ => Coeff::float(self.value() * (*q.numer() as f64 / *q.denom() as f64)),
            },
            Coeff::Float { .. } => {
                let f = *q.numer() as f64 / *q.denom() as f64;
                Coeff::float(self.value() * f)
            }
        }
    }

    pub fn mul_complex(&self, z: Complex64) -> Coeff {
        Coeff::float(self.value() * z)
    }

    pub fn neg(&self) -> Coeff {
        self.scale(Rational64::from_integer(-1))
    }

    pub fn conj(&self) -> Coeff {
        match self {
            Coeff::Exact { re, im } => Coeff::Exact { re: re.clone(), im: -im },
            Coeff::Float { re, im } => Coeff::Float { re: *re, im: -*im },
        }
    }

    /// True when printing needs no surrounding parentheses to act as a factor.
    fn is_atomic(&self) -> bool {
        match self {
            Coeff::Exact { re, im } => {
                let nz = |c: &ConstantValue| c.weights().iter().filter(|w| **w != Rational64::from_integer(0)).count();
                (im.is_zero() && nz(re) == 1 && re.leading_sign() > 0)
                    || (re.is_zero() && im == &ConstantValue::one())
            }
            Coeff::Float { re, im } => *im == 0.0 && *re >= 0.0 && !re.is_sign_negative(),
        }
    }
}

fn float_lit(x: f64) -> String {
    // `{:?}` is the shortest round-trip form and always carries `.` or `e`.
    format!("{x:?}")
}

impl fmt::Display for Coeff {
    /// Writes the coefficient as a factor in the expression grammar.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body = match self {
            Coeff::Exact { re, im } => match (re.is_zero(), im.is_zero()) {
                (_, true) => re.to_string(),
                (true, false) if im == &ConstantValue::one() => "i".to_string(),
                (true, false) => format!("({im})*i"),
                (false, false) => format!("{re} + ({im})*i"),
            },
            Coeff::Float { re, im } => {
                if *im == 0.0 && !im.is_sign_negative() {
                    float_lit(*re)
                } else {
                    format!("{} + {}*i", float_lit(*re), float_lit(*im))
                }
            }
        };
        if self.is_atomic() {
            f.write_str(&body)
        } else {
            write!(f, "({body})")
        }
    }
}
