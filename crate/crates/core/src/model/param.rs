//! Coefficient expressions over named parameters, e.g. `x1^2 - 2*x2 + i*pi`.

use std::collections::HashMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constant::{Basis, BASIS_VALUES};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("SyntaxError at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown parameter '{0}'")]
    Unknown(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ParamExpr {
    text: String,
    node: Node,
}

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Num(Complex64),
    Var(String),
    Neg(Box<Node>),
    Bin(u8, Box<Node>, Box<Node>),
    Pow(Box<Node>, i32),
    Call(String, Box<Node>),
}

impl ParamExpr {
    pub fn parse(text: &str) -> Result<Self, ParamError> {
        let mut p = P { s: text.as_bytes(), pos: 0 };
        let node = p.sum()?;
        p.ws();
        if p.pos != p.s.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(ParamExpr { text: text.to_string(), node })
    }

    /// Parameter names referenced by the expression.
    pub fn variables(&self) -> Vec<String> {
        fn walk(n: &Node, out: &mut Vec<String>) {
            match n {
                Node::Var(v) if !out.contains(v) => out.push(v.clone()),
                Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) => walk(a, out),
                Node::Bin(_, a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
                _ => {}
            }
        }
        let mut out = Vec::new();
        walk(&self.node, &mut out);
        out
    }

    pub fn eval(&self, params: &HashMap<String, f64>) -> Result<Complex64, ParamError> {
        fn go(n: &Node, p: &HashMap<String, f64>) -> Result<Complex64, ParamError> {
            Ok(match n {
                Node::Num(z) => *z,
                Node::Var(v) => Complex64::new(*p.get(v).ok_or_else(|| ParamError::Unknown(v.clone()))?, 0.0),
                Node::Neg(a) => -go(a, p)?,
                Node::Bin(op, a, b) => {
                    let (a, b) = (go(a, p)?, go(b, p)?);
                    match op {
                        b'+' => a + b,
                        b'-' => a - b,
                        b'*' => a * b,
                        _ => a / b,
                    }
                }
                Node::Pow(a, k) => go(a, p)?.powi(*k),
                Node::Call(f, a) => {
                    let z = go(a, p)?;
                    match f.as_str() {
                        "sin" => z.sin(),
                        "cos" => z.cos(),
                        "exp" => z.exp(),
                        "sqrt" => z.sqrt(),
                        _ => Complex64::new(z.norm(), 0.0),
                    }
                }
            })
        }
        go(&self.node, params)
    }
}

impl TryFrom<String> for ParamExpr {
    type Error = ParamError;
    fn try_from(s: String) -> Result<Self, ParamError> {
        ParamExpr::parse(&s)
    }
}

impl From<ParamExpr> for String {
    fn from(p: ParamExpr) -> String {
        p.text
    }
}

impl fmt::Display for ParamExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

struct P<'a> {
    s: &'a [u8],
    pos: usize,
}

impl P<'_> {
    fn err(&self, msg: &str) -> ParamError {
        ParamError::Syntax { pos: self.pos, msg: msg.into() }
    }

    fn ws(&mut self) {
        while self.s.get(self.pos).is_some_and(u8::is_ascii_whitespace) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.ws();
        if self.s.get(self.pos) == Some(&c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn sum(&mut self) -> Result<Node, ParamError> {
        let mut a = self.product()?;
        loop {
            let op = if self.eat(b'+') {
                b'+'
            } else if self.eat(b'-') {
                b'-'
            } else {
                return Ok(a);
            };
            a = Node::Bin(op, Box::new(a), Box::new(self.product()?));
        }
    }

    fn product(&mut self) -> Result<Node, ParamError> {
        let mut a = self.unary()?;
        loop {
            let op = if self.eat(b'*') {
                b'*'
            } else if self.eat(b'/') {
                b'/'
            } else {
                return Ok(a);
            };
            a = Node::Bin(op, Box::new(a), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<Node, ParamError> {
        if self.eat(b'-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        let base = self.atom()?;
        if self.eat(b'^') {
            let paren = self.eat(b'(');
            let neg = self.eat(b'-');
            self.ws();
            let start = self.pos;
            while self.s.get(self.pos).is_some_and(u8::is_ascii_digit) {
                self.pos += 1;
            }
            let k: i32 = std::str::from_utf8(&self.s[start..self.pos])
                .ok()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| self.err("expected an integer power"))?;
            if paren && !self.eat(b')') {
                return Err(self.err("expected ')'"));
            }
            return Ok(Node::Pow(Box::new(base), if neg { -k } else { k }));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ParamError> {
        self.ws();
        let start = self.pos;
        match self.s.get(self.pos) {
            Some(b'(') => {
                self.pos += 1;
                let n = self.sum()?;
                if !self.eat(b')') {
                    return Err(self.err("expected ')'"));
                }
                Ok(n)
            }
            Some(c) if c.is_ascii_digit() || *c == b'.' => {
                while self.s.get(self.pos).is_some_and(|c| c.is_ascii_digit() || *c == b'.') {
                    self.pos += 1;
                }
                if matches!(self.s.get(self.pos), Some(b'e' | b'E')) {
                    self.pos += 1;
                    if matches!(self.s.get(self.pos), Some(b'+' | b'-')) {
                        self.pos += 1;
                    }
                    while self.s.get(self.pos).is_some_and(u8::is_ascii_digit) {
                        self.pos += 1;
                    }
                }
                let t = std::str::from_utf8(&self.s[start..self.pos]).expect("ascii");
                let v: f64 = t.parse().map_err(|_| ParamError::Syntax { pos: start, msg: format!("bad number '{t}'") })?;
                Ok(Node::Num(Complex64::new(v, 0.0)))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                while self.s.get(self.pos).is_some_and(|c| c.is_ascii_alphanumeric() || *c == b'_') {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.s[start..self.pos]).expect("ascii").to_string();
                if name == "i" {
                    return Ok(Node::Num(Complex64::new(0.0, 1.0)));
                }
                if let Some(b) = Basis::from_name(&name).filter(|_| name != "one") {
                    return Ok(Node::Num(Complex64::new(BASIS_VALUES[b as usize], 0.0)));
                }
                if matches!(name.as_str(), "sin" | "cos" | "exp" | "sqrt" | "abs") && self.eat(b'(') {
                    let arg = self.sum()?;
                    if !self.eat(b')') {
                        return Err(self.err("expected ')'"));
                    }
                    return Ok(Node::Call(name, Box::new(arg)));
                }
                Ok(Node::Var(name))
            }
            _ => Err(self.err("expected a number, parameter or '('")),
        }
    }
}
