//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! sum    := term (('+' | '-') term)*
//! term   := unary ('*' unary)*
//! unary  := ('-' | '+') unary | power
//! power  := atom ('^' '(' rational ')')?
//! atom   := number | 'y' | 'log(y)' | 'exp(' sum ')' | 'gamma(' ... ')'
//!         | 'exptail(' sum ',' n ')' | 'bintail(' rational ',' sum ',' n ')'
//!         | 'sqrt2' | 'sqrt3' | 'pi' | 'log2' | 'i' | '(' sum ')'
//! ```

use num_rational::Rational64;

use super::{Bound, Domain, GammaFactor, ModelError, PreparedSum, Term, UnitFactor, UnitSeries};
use crate::coeff::Coeff;
use crate::constant::{Basis, ConstantValue};
use crate::exponent::Exponent;
use crate::phase::Phase;
use crate::powersum::PowerSum;

pub(super) fn parse(text: &str, domain: Domain) -> Result<PreparedSum, ModelError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0, domain };
    let s = p.sum()?;
    p.ws();
    if p.pos != p.src.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(s)
}

/// Parses a real phase polynomial in `var`, such as `t + sqrt2*t^2`.
/// Bare integer or rational powers `t^2`, `t^3/2` are accepted besides `t^(2)`.
pub fn parse_phase(text: &str, var: &str) -> Result<Phase, ModelError> {
    let src = rewrite_variable(text, var);
    let sum = parse(&src, Domain::default())?;
    let p = sum
        .as_power_sum()
        .ok_or_else(|| ModelError::Grammar(format!("'{text}' is not a real polynomial phase in {var}")))?;
    Phase::from_terms(p.terms().iter().cloned()).map_err(ModelError::Grammar)
}

fn rewrite_variable(text: &str, var: &str) -> String {
    let b = text.as_bytes();
    let mut out = String::with_capacity(text.len() + 8);
    let mut i = 0;
    while i < b.len() {
        let c = b[i];
        if c.is_ascii_alphabetic() {
            let start = i;
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
            let id = &text[start..i];
            out.push_str(if id == var { "y" } else { id });
            continue;
        }
        if c == b'^' {
            let mut j = i + 1;
            while j < b.len() && b[j] == b' ' {
                j += 1;
            }
            if j < b.len() && b[j] != b'(' {
                let start = j;
                if b[j] == b'-' || b[j] == b'+' {
                    j += 1;
                }
                while j < b.len() && (b[j].is_ascii_digit() || b[j] == b'/') {
                    j += 1;
                }
                out.push_str("^(");
                out.push_str(&text[start..j]);
                out.push(')');
                i = j;
                continue;
            }
        }
        out.push(c as char);
        i += 1;
    }
    out
}

#[derive(PartialEq)]
enum Kind {
    Y,
    LogY,
    Paren,
    Other,
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    domain: Domain,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> ModelError {
        ModelError::Syntax { pos: self.pos, msg: msg.to_string() }
    }

    fn ws(&mut self) {
        while self.src.get(self.pos).is_some_and(u8::is_ascii_whitespace) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ModelError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(&format!("expected '{}'", c as char)))
        }
    }

    fn ident(&mut self) -> Option<String> {
        self.ws();
        let start = self.pos;
        if !self.src.get(self.pos).is_some_and(u8::is_ascii_alphabetic) {
            return None;
        }
        while self.src.get(self.pos).is_some_and(|c| c.is_ascii_alphanumeric() || *c == b'_') {
            self.pos += 1;
        }
        Some(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    fn constant(&self, c: Coeff) -> PreparedSum {
        PreparedSum::constant(self.domain, c)
    }

    fn sum(&mut self) -> Result<PreparedSum, ModelError> {
        let mut acc = self.term()?;
        loop {
            if self.eat(b'+') {
                acc = acc.add(&self.term()?)?;
            } else if self.eat(b'-') {
                acc = acc.sub(&self.term()?)?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<PreparedSum, ModelError> {
        let mut acc = self.unary()?;
        while self.eat(b'*') {
            acc = acc.mul(&self.unary()?)?;
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<PreparedSum, ModelError> {
        if self.eat(b'-') {
            return Ok(self.unary()?.neg());
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<PreparedSum, ModelError> {
        let (base, kind) = self.atom()?;
        if !self.eat(b'^') {
            return Ok(base);
        }
        let at = self.pos;
        self.expect(b'(')?;
        let q = self.rational()?;
        self.expect(b')')?;
        let nat = (q.is_integer() && q >= Exponent::ZERO).then(|| q.numer() as u32);
        match kind {
            Kind::Y => Ok(PreparedSum::single(self.domain, Term::monomial(Coeff::one(), q, 0))),
            Kind::LogY => match nat {
                Some(n) => Ok(PreparedSum::single(self.domain, Term::monomial(Coeff::one(), Exponent::ZERO, n))),
                None => Err(ModelError::Syntax { pos: at, msg: "log power must be a natural number".into() }),
            },
            Kind::Paren => {
                if let Some(n) = nat {
                    let mut acc = self.constant(Coeff::one());
                    for _ in 0..n {
                        acc = acc.mul(&base)?;
                    }
                    return Ok(acc);
                }
                let p = base
                    .as_power_sum()
                    .ok_or_else(|| ModelError::Grammar(format!("({base})^({q}) is outside the fragment")))?;
                let b = p.decaying_part();
                if p.constant_term() != ConstantValue::one() || p.add(&b.neg()) != PowerSum::constant(ConstantValue::one()) {
                    return Err(ModelError::Grammar(format!("({base})^({q}) must have the form (1 + decaying)^(q)")));
                }
                let u = UnitFactor::binomial_tail(b, q, 0)?;
                Ok(PreparedSum::single(self.domain, Term::constant(Coeff::one()).with_unit(u)))
            }
            Kind::Other => Err(ModelError::Syntax {
                pos: at,
                msg: "'^' applies only to y, log(y) or a parenthesized sum".into(),
            }),
        }
    }

    fn atom(&mut self) -> Result<(PreparedSum, Kind), ModelError> {
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let n = self.number()?;
                Ok((self.constant(n), Kind::Other))
            }
            Some(b'(') => {
                self.pos += 1;
                let s = self.sum()?;
                self.expect(b')')?;
                Ok((s, Kind::Paren))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                let name = self.ident().expect("alphabetic start");
                let basis = |b| Coeff::real(ConstantValue::basis(b));
                let out = match name.as_str() {
                    "y" => (PreparedSum::single(self.domain, Term::monomial(Coeff::one(), Exponent::ONE, 0)), Kind::Y),
                    "i" => (self.constant(Coeff::i()), Kind::Other),
                    "log" => {
                        self.expect(b'(')?;
                        if self.ident().as_deref() != Some("y") {
                            return Err(self.err("log takes only y"));
                        }
                        self.expect(b')')?;
                        (PreparedSum::single(self.domain, Term::monomial(Coeff::one(), Exponent::ZERO, 1)), Kind::LogY)
                    }
                    "exp" => {
                        self.expect(b'(')?;
                        let arg = self.sum()?;
                        self.expect(b')')?;
                        (self.exponential(&arg, 0)?, Kind::Other)
                    }
                    "exptail" => {
                        self.expect(b'(')?;
                        let arg = self.sum()?;
                        self.expect(b',')?;
                        let k = self.natural()?;
                        self.expect(b')')?;
                        (self.exponential(&arg, k)?, Kind::Other)
                    }
                    "bintail" => {
                        self.expect(b'(')?;
                        let q = self.rational()?;
                        self.expect(b',')?;
                        let base = self.sum()?;
                        let base = base
                            .as_power_sum()
                            .ok_or_else(|| ModelError::Grammar(format!("binomial base {base} is not a power sum")))?;
                        self.expect(b',')?;
                        let k = self.natural()?;
                        self.expect(b')')?;
                        let u = UnitFactor::binomial_tail(base, q, k)?;
                        (PreparedSum::single(self.domain, Term::constant(Coeff::one()).with_unit(u)), Kind::Other)
                    }
                    "gamma" => (self.gamma()?, Kind::Other),
                    other => match Basis::from_name(other) {
                        Some(b) if other != "one" => (self.constant(basis(b)), Kind::Other),
                        _ => return Err(ModelError::Syntax { pos: start, msg: format!("unknown identifier '{other}'") }),
                    },
                };
                Ok(out)
            }
            Some(c) => Err(self.err(&format!("unexpected '{}'", c as char))),
        }
    }

    /// `exp(arg)` for `arg = i·P` with `P` a real power sum; the positive
    /// powers of `P` form the phase, the negative ones an exponential tail.
    fn exponential(&self, arg: &PreparedSum, skip: u32) -> Result<PreparedSum, ModelError> {
        let minus_i = Coeff::Exact { re: ConstantValue::zero(), im: ConstantValue::integer(-1) };
        let p = arg
            .scale(&minus_i)
            .as_power_sum()
            .ok_or_else(|| ModelError::Grammar(format!("exp argument {arg} is not i times an exact real power sum")))?;
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for (e, c) in p.terms() {
            match e.cmp(&Exponent::ZERO) {
                std::cmp::Ordering::Greater => pos.push((*e, c.clone())),
                std::cmp::Ordering::Less => neg.push((*e, c.clone())),
                std::cmp::Ordering::Equal => {
                    return Err(ModelError::Grammar(format!("phase {p} has a nonzero constant term")));
                }
            }
        }
        if skip > 0 {
            if !pos.is_empty() || neg.is_empty() {
                return Err(ModelError::Grammar(format!("exptail argument {p} must decay")));
            }
            let u = UnitFactor::exp_tail(PowerSum::from_terms(neg), skip)?;
            return Ok(PreparedSum::single(self.domain, Term::constant(Coeff::one()).with_unit(u)));
        }
        let mut t = Term::constant(Coeff::one()).with_phase(Phase::from_terms(pos).map_err(ModelError::Grammar)?);
        if !neg.is_empty() {
            t = t.with_unit(UnitFactor::exp_tail(PowerSum::from_terms(neg), 0)?);
        }
        Ok(PreparedSum::single(self.domain, t))
    }

    fn gamma(&mut self) -> Result<PreparedSum, ModelError> {
        self.expect(b'(')?;
        let rho = self.rational()?;
        self.expect(b',')?;
        let sigma = self.natural()?;
        self.expect(b',')?;
        let at = self.pos;
        let orient = self.rational()?;
        if orient != Exponent::ONE && orient != Exponent::MINUS_ONE {
            return Err(ModelError::Syntax { pos: at, msg: "orientation must be 1 or -1".into() });
        }
        self.expect(b',')?;
        let lower = self.bound_sum()?;
        self.expect(b',')?;
        let save = self.pos;
        let upper = if self.ident().as_deref() == Some("inf") {
            Bound::Infinity
        } else {
            self.pos = save;
            Bound::Finite(self.bound_sum()?)
        };
        let (mut d, mut lo, mut hi, mut tail) = (1i64, Vec::new(), Vec::new(), 0.0);
        while self.eat(b',') {
            let key = self.ident().ok_or_else(|| self.err("expected a γ option name"))?;
            self.expect(b'=')?;
            match key.as_str() {
                "d" => d = self.natural()? as i64,
                "lo" => lo = self.constant_list()?,
                "hi" => hi = self.constant_list()?,
                "tail" => tail = self.number()?.value().re,
                other => return Err(self.err(&format!("unknown γ option '{other}'"))),
            }
        }
        self.expect(b')')?;
        let g = GammaFactor::new(rho, sigma, orient.numer() as i8, lower, upper)?
            .with_unit(UnitSeries::new(d, lo, hi, tail)?)?;
        Ok(PreparedSum::single(self.domain, Term::constant(Coeff::one()).with_gamma(g)))
    }

    fn bound_sum(&mut self) -> Result<PowerSum, ModelError> {
        let s = self.sum()?;
        s.as_power_sum().ok_or_else(|| ModelError::Grammar(format!("γ bound {s} is not an exact real power sum")))
    }

    fn constant_list(&mut self) -> Result<Vec<ConstantValue>, ModelError> {
        self.expect(b'[')?;
        let mut out = Vec::new();
        if self.eat(b']') {
            return Ok(out);
        }
        loop {
            let s = self.sum()?;
            out.push(s.as_constant().ok_or_else(|| ModelError::Grammar(format!("{s} is not an exact constant")))?);
            if self.eat(b']') {
                return Ok(out);
            }
            self.expect(b',')?;
        }
    }

    fn digits(&mut self) -> &[u8] {
        let start = self.pos;
        while self.src.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        &self.src[start..self.pos]
    }

    fn integer(&mut self) -> Result<i64, ModelError> {
        self.ws();
        let at = self.pos;
        let d = self.digits();
        if d.is_empty() {
            return Err(ModelError::Syntax { pos: at, msg: "expected digits".into() });
        }
        std::str::from_utf8(d)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or(ModelError::Syntax { pos: at, msg: "integer out of range".into() })
    }

    fn natural(&mut self) -> Result<u32, ModelError> {
        let at = self.pos;
        let n = self.integer()?;
        u32::try_from(n).map_err(|_| ModelError::Syntax { pos: at, msg: "natural number out of range".into() })
    }

    fn rational(&mut self) -> Result<Exponent, ModelError> {
        let neg = self.eat(b'-');
        let n = self.integer()?;
        let d = if self.eat(b'/') { self.integer()? } else { 1 };
        if d == 0 {
            return Err(self.err("zero denominator"));
        }
        Ok(Exponent::new(if neg { -n } else { n }, d))
    }

    /// Integers and `p/q` are exact; anything with `.` or an exponent is a float.
    fn number(&mut self) -> Result<Coeff, ModelError> {
        self.ws();
        let start = self.pos;
        self.digits();
        let mut float = false;
        if self.src.get(self.pos) == Some(&b'.') {
            float = true;
            self.pos += 1;
            self.digits();
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let sign = matches!(self.src.get(self.pos + 1), Some(b'+' | b'-')) as usize;
            if self.src.get(self.pos + 1 + sign).is_some_and(u8::is_ascii_digit) {
                float = true;
                self.pos += 1 + sign;
                self.digits();
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        if float {
            let v: f64 = text.parse().map_err(|_| ModelError::Syntax { pos: start, msg: format!("bad number '{text}'") })?;
            return Ok(Coeff::float(num_complex::Complex64::new(v, 0.0)));
        }
        let n: i64 = text.parse().map_err(|_| ModelError::Syntax { pos: start, msg: format!("bad number '{text}'") })?;
        if self.src.get(self.pos) == Some(&b'/') && self.src.get(self.pos + 1).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
            let d = self.integer()?;
            if d == 0 {
                return Err(ModelError::Syntax { pos: start, msg: "zero denominator".into() });
            }
            return Ok(Coeff::rational(Rational64::new(n, d)));
        }
        Ok(Coeff::rational(Rational64::from_integer(n)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Result<PreparedSum, ModelError> {
        parse(s, Domain::default())
    }

    #[test]
    fn phases_in_another_variable() {
        let p = parse_phase("t + sqrt2*t^2", "t").unwrap();
        assert_eq!(p.degree(), Exponent::integer(2));
        assert!((p.eval(2.0) - (2.0 + 4.0 * std::f64::consts::SQRT_2)).abs() < 1e-12);
        assert_eq!(parse_phase("t^3/2", "t").unwrap(), parse_phase("t^(3/2)", "t").unwrap());
        assert!(parse_phase("t^-1", "t").is_err());
        assert!(parse_phase("t*log(t)", "t").is_err());
    }

    #[test]
    fn literal_terms() {
        let s = p("y^(-2) * exp(i*y)").unwrap();
        let t = &s.terms()[0];
        assert_eq!((t.r, t.s), (Exponent::integer(-2), 0));
        assert_eq!(t.phase, Phase::linear(ConstantValue::one()));
        let one = p("exp(i*0)").unwrap();
        assert_eq!(one, PreparedSum::constant(Domain::default(), Coeff::one()));
        let s = p("log(y)*y^(-3/2)*exp(i*(y + sqrt2*y^(1/2)))").unwrap();
        let t = &s.terms()[0];
        assert_eq!((t.r, t.s, t.phase.denom()), (Exponent::new(-3, 2), 1, 2));
        assert_eq!(t.phase.coeffs(), &[ConstantValue::basis(Basis::Sqrt2), ConstantValue::one()]);
    }

    #[test]
    fn errors_carry_positions() {
        match p("y^(-2) * ") {
            Err(ModelError::Syntax { pos, .. }) => assert_eq!(pos, 9),
            other => panic!("{other:?}"),
        }
        assert!(matches!(p("exp(i*(y + 1))"), Err(ModelError::Grammar(_))));
        assert!(matches!(p("exp(y)"), Err(ModelError::Grammar(_))));
        assert!(matches!(p("foo"), Err(ModelError::Syntax { pos: 0, .. })));
        assert!(matches!(p("pi^(2)"), Err(ModelError::Syntax { .. })));
    }

    #[test]
    fn negative_phase_powers_become_tails() {
        let s = p("exp(i*(y + y^(-1/2)))").unwrap();
        let t = &s.terms()[0];
        assert_eq!(t.phase, Phase::linear(ConstantValue::one()));
        assert_eq!(t.units.len(), 1);
    }

    #[test]
    fn gamma_syntax() {
        let s = p("gamma(-3/2, 1, -1, 1, inf)").unwrap();
        let g = &s.terms()[0].gammas[0];
        assert_eq!((g.rho, g.sigma, g.orientation), (Exponent::new(-3, 2), 1, -1));
        let s = p("gamma(-2, 0, 1, 2, y, d=2, lo=[1/2, 0], hi=[sqrt2], tail=1e-9)").unwrap();
        let g = &s.terms()[0].gammas[0];
        assert_eq!(g.unit.lower_coeffs().len(), 1);
        assert!(matches!(p("gamma(-2, 0, 2, 1, inf)"), Err(ModelError::Syntax { .. })));
        assert!(p("gamma(-2, 0, 1, 1, inf, hi=[1])").is_err());
    }

    #[test]
    fn floats_and_rationals() {
        let s = p("0.5*y + 1e-3 + 3/4*y^(2)").unwrap();
        assert!(!s.terms()[1].coeff.is_exact());
        assert!(s.terms()[0].coeff.is_exact());
    }
}
