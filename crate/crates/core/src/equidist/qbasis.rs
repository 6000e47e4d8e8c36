use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use num_integer::Integer;
use num_rational::{Ratio, Rational64};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::constant::ConstantValue;
use crate::exponent::Exponent;
use crate::phase::Phase;

type Q = Ratio<i128>;

/// `p̃ = p / (2π·ρ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TildePhase {
    pub phase: Phase,
    pub rho: i64,
}

impl TildePhase {
    pub fn eval(&self, t: f64) -> f64 {
        self.phase.eval(t) / (2.0 * PI * self.rho as f64)
    }

    pub fn derivative(&self, t: f64) -> f64 {
        self.phase.derivative(t) / (2.0 * PI * self.rho as f64)
    }
}

impl fmt::Display for TildePhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.rho == 1 {
            write!(f, "({})/(2pi)", self.phase.display_in("t"))
        } else {
            write!(f, "({})/(2pi*{})", self.phase.display_in("t"), self.rho)
        }
    }
}

/// A ℤ-independent family `p̃_j` with `p_k = 2π Σ_j s_{k,j} p̃_j` for every
/// input phase `p_k`.
///
/// The basis directions are the elementary monomials `b·t^e` (`b` a basis
/// constant) occurring in the inputs. They are ℚ-independent, so each input
/// has unique rational coordinates, made integral by the scales `ρ_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QBasisResult {
    /// `s_{k,j}`, one row per input.
    pub rows: Vec<Vec<i64>>,
    /// `ρ_j`.
    pub scale: Vec<i64>,
    pub tilde: Vec<TildePhase>,
    /// Rank of the inputs over ℚ.
    pub rank: usize,
}

impl QBasisResult {
    pub fn inputs_independent(&self) -> bool {
        self.rank == self.rows.len()
    }

    /// Exact check of `p_k = Σ_j (s_{k,j}/ρ_j)·b_j t^{e_j}`.
    pub fn reconstructs(&self, phases: &[Phase]) -> bool {
        phases.len() == self.rows.len()
            && phases.iter().zip(&self.rows).all(|(p, row)| {
                let mut sum = Phase::zero();
                for (j, &s) in row.iter().enumerate() {
                    if s != 0 {
                        sum = sum.add(&self.tilde[j].phase.scale(Rational64::new(s, self.scale[j])));
                    }
                }
                sum == *p
            })
    }
}

fn to_q(w: &Rational64) -> Q {
    Q::new(*w.numer() as i128, *w.denom() as i128)
}

/// Rank over ℚ by exact elimination.
fn rank(vectors: &[Vec<Q>]) -> usize {
    let mut rows: Vec<(usize, Vec<Q>)> = Vec::new();
    for v in vectors {
        let mut v = v.clone();
        for (p, row) in &rows {
            let f = v[*p];
            if !f.is_zero() {
                for (a, b) in v.iter_mut().zip(row) {
                    *a -= f * b;
                }
            }
        }
        if let Some(p) = v.iter().position(|x| !x.is_zero()) {
            let lead = v[p];
            let v: Vec<Q> = v.iter().map(|x| x / lead).collect();
            for (_, row) in rows.iter_mut() {
                let f = row[p];
                if !f.is_zero() {
                    for (a, b) in row.iter_mut().zip(&v) {
                        *a -= f * b;
                    }
                }
            }
            rows.push((p, v));
        }
    }
    rows.len()
}

/// Rational basis of the span of the phases, with integer coordinates.
pub fn qbasis(phases: &[Phase]) -> QBasisResult {
    let directions = |p: &Phase| -> Vec<(Exponent, usize)> {
        p.terms()
            .flat_map(|(e, c)| c.weights().iter().enumerate().filter(|(_, w)| !w.is_zero()).map(move |(b, _)| (e, b)))
            .collect()
    };
    let mut dirs: Vec<(Exponent, usize)> = phases.iter().flat_map(directions).collect();
    dirs.sort();
    dirs.dedup();
    let coords: Vec<Vec<Q>> = phases
        .iter()
        .map(|p| {
            let mut v = vec![Q::zero(); dirs.len()];
            for (e, c) in p.terms() {
                for (b, w) in c.weights().iter().enumerate().filter(|(_, w)| !w.is_zero()) {
                    v[dirs.binary_search(&(e, b)).expect("direction collected")] = to_q(w);
                }
            }
            v
        })
        .collect();
    let scale: Vec<i64> = (0..dirs.len()).map(|j| coords.iter().fold(1i128, |acc, c| acc.lcm(c[j].denom())) as i64).collect();
    let rows = coords
        .iter()
        .map(|c| c.iter().zip(&scale).map(|(q, &rho)| (q * Q::from_integer(rho as i128)).to_integer() as i64).collect())
        .collect();
    let tilde = dirs
        .iter()
        .zip(&scale)
        .map(|(&(e, b), &rho)| {
            let mut w = [Rational64::zero(); 5];
            w[b] = Rational64::one();
            TildePhase { phase: Phase::monomial(ConstantValue::from_weights(w), e).expect("positive exponent"), rho }
        })
        .collect();
    QBasisResult { rows, scale, tilde, rank: rank(&coords) }
}

/// `f(t) = F(e^{2πiψ₁(t)}, …, e^{2πiψₙ(t)})` with `F = Σ_j c_j X^{α_j}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaurentForm {
    pub rows: Vec<Vec<i64>>,
    pub coefficients: Vec<Complex64>,
    pub psi: Vec<TildePhase>,
}

impl LaurentForm {
    pub fn vars(&self) -> usize {
        self.psi.len()
    }

    /// `F` at a torus point `x ∈ [0,1)^n`.
    pub fn on_torus(&self, x: &[f64]) -> Complex64 {
        self.rows
            .iter()
            .zip(&self.coefficients)
            .map(|(a, c)| {
                let arg: f64 = a.iter().zip(x).map(|(&k, &v)| k as f64 * v).sum();
                c * Complex64::from_polar(1.0, 2.0 * PI * arg)
            })
            .sum()
    }

    /// `(ψ₁(t), …, ψₙ(t))`, not reduced mod 1.
    pub fn psi_at(&self, t: f64) -> Vec<f64> {
        self.psi.iter().map(|p| p.eval(t)).collect()
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        // 2π·α·ψ(t) = Σ_k α_k·p_k(t)/ρ_k, formed before the exponential.
        let p: Vec<f64> = self.psi.iter().map(|q| q.phase.eval(t) / q.rho as f64).collect();
        self.rows
            .iter()
            .zip(&self.coefficients)
            .map(|(a, c)| c * Complex64::from_polar(1.0, a.iter().zip(&p).map(|(&k, &v)| k as f64 * v).sum()))
            .sum()
    }

    /// `Σ_j |c_j|·‖α_j‖₁`; `2π` times this is a sup-norm Lipschitz constant
    /// of `F` on the torus.
    pub fn lipschitz_weight(&self) -> f64 {
        self.rows
            .iter()
            .zip(&self.coefficients)
            .map(|(a, c)| c.norm() * a.iter().map(|k| k.unsigned_abs() as f64).sum::<f64>())
            .sum()
    }
}

impl fmt::Display for LaurentForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = |k: usize| if self.vars() == 1 { "X".to_string() } else { format!("X{}", k + 1) };
        if self.rows.is_empty() {
            return write!(f, "0");
        }
        for (n, (a, c)) in self.rows.iter().zip(&self.coefficients).enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            let mono: Vec<String> = a
                .iter()
                .enumerate()
                .filter(|(_, &k)| k != 0)
                .map(|(i, &k)| if k == 1 { name(i) } else { format!("{}^{}", name(i), k) })
                .collect();
            let coef = if c.im == 0.0 { format!("{}", c.re) } else { format!("({c})") };
            if mono.is_empty() {
                write!(f, "{coef}")?;
            } else if *c == Complex64::new(1.0, 0.0) {
                write!(f, "{}", mono.join("*"))?;
            } else {
                write!(f, "{coef}*{}", mono.join("*"))?;
            }
        }
        Ok(())
    }
}

/// Rewrites `Σ c_j e^{i p_j(t)}` over the rational basis of its phases.
pub fn laurent_form(atoms: &[(Complex64, Phase)]) -> LaurentForm {
    let phases: Vec<Phase> = atoms.iter().map(|(_, p)| p.clone()).collect();
    let q = qbasis(&phases);
    LaurentForm { rows: q.rows, coefficients: atoms.iter().map(|(c, _)| *c).collect(), psi: q.tilde }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constant::Basis;

    fn lin(c: ConstantValue) -> Phase {
        Phase::linear(c)
    }

    fn t_pow(k: i64) -> Phase {
        Phase::monomial(ConstantValue::one(), Exponent::integer(k)).unwrap()
    }

    #[test]
    fn multiples_share_one_direction() {
        let ps = [lin(ConstantValue::one()), lin(ConstantValue::integer(2))];
        let q = qbasis(&ps);
        assert_eq!(q.rows, vec![vec![1], vec![2]]);
        assert_eq!(q.scale, vec![1]);
        assert_eq!(q.rank, 1);
        assert!(q.reconstructs(&ps));
    }

    #[test]
    fn irrational_multiples_are_independent() {
        let q = qbasis(&[lin(ConstantValue::one()), lin(ConstantValue::basis(Basis::Sqrt2))]);
        assert_eq!(q.tilde.len(), 2);
        assert!(q.inputs_independent());
    }

    #[test]
    fn sums_get_integer_rows() {
        let ps = [t_pow(1), t_pow(2), t_pow(1).add(&t_pow(2))];
        let q = qbasis(&ps);
        assert_eq!(q.tilde.len(), 2);
        assert_eq!(q.rows[2], vec![1, 1]);
        assert_eq!(q.rank, 2);
        assert!(!q.inputs_independent());
        assert!(q.reconstructs(&ps));
    }

    #[test]
    fn halves_rescale_the_direction() {
        let ps = [lin(ConstantValue::rational(Rational64::new(1, 2))), lin(ConstantValue::integer(3))];
        let q = qbasis(&ps);
        assert_eq!(q.scale, vec![2]);
        assert_eq!(q.rows, vec![vec![1], vec![6]]);
        assert!(q.reconstructs(&ps));
    }

    #[test]
    fn laurent_forms() {
        let one = Complex64::new(1.0, 0.0);
        let f = laurent_form(&[(one, lin(ConstantValue::one())), (one, lin(ConstantValue::integer(-1)))]);
        assert_eq!(f.to_string(), "X + X^-1");
        for t in [0.3, 7.0, 123.4] {
            assert!((f.eval(t) - 2.0 * t.cos()).norm() < 1e-12);
        }
        let g = laurent_form(&[(one, lin(&ConstantValue::one() + &ConstantValue::basis(Basis::Sqrt2)))]);
        assert_eq!(g.to_string(), "X1*X2");
        let c = laurent_form(&[(Complex64::new(5.0, 0.0), Phase::zero())]);
        assert_eq!((c.vars(), c.to_string()), (0, "5".to_string()));
    }
}
