//! Parametric families, their integrability loci `{x : h(x) = 0}`, and the
//! numeric growth diagnostic used to cross-check verdicts.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{naive_term_integrable, IntegrateError, NaiveSignature};
use crate::coeff::Coeff;
use crate::model::{Domain, ParamExpr, PreparedSum, Signature, Term};
use crate::prepare::prepare;
use crate::quad;

/// Smallest ratio of consecutive decade masses of `∫|f|` read as growth.
pub const GROWTH_RATIO: f64 = 0.5;
/// Decade masses below this are treated as zero.
pub const GROWTH_FLOOR: f64 = 1e-7;

/// One summand `coefficient(x) · template(y)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyEntry {
    pub coefficient: ParamExpr,
    pub template: String,
}

/// `f(x, y) = Σ_e c_e(x)·T_e(y)` with `T_e` in the expression grammar.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilySum {
    pub parameters: Vec<String>,
    #[serde(default)]
    pub domain: Domain,
    pub entries: Vec<FamilyEntry>,
}

impl FamilySum {
    pub fn validate(&self) -> Result<Vec<PreparedSum>, IntegrateError> {
        for e in &self.entries {
            if let Some(v) = e.coefficient.variables().into_iter().find(|v| !self.parameters.contains(v)) {
                return Err(IntegrateError::Family(format!("coefficient '{}' uses undeclared parameter '{v}'", e.coefficient)));
            }
        }
        self.entries.iter().map(|e| Ok(PreparedSum::parse(&e.template, self.domain)?)).collect()
    }

    fn bind(&self, point: &[f64]) -> Result<HashMap<String, f64>, IntegrateError> {
        if point.len() != self.parameters.len() {
            return Err(IntegrateError::Family(format!(
                "expected {} parameter values, got {}",
                self.parameters.len(),
                point.len()
            )));
        }
        Ok(self.parameters.iter().cloned().zip(point.iter().copied()).collect())
    }

    pub fn coefficients_at(&self, point: &[f64]) -> Result<Vec<Complex64>, IntegrateError> {
        let env = self.bind(point)?;
        self.entries.iter().map(|e| Ok(e.coefficient.eval(&env)?)).collect()
    }

    /// The member sum at a parameter point.
    pub fn instantiate(&self, point: &[f64]) -> Result<PreparedSum, IntegrateError> {
        let templates = self.validate()?;
        let cs = self.coefficients_at(point)?;
        let mut out = PreparedSum::zero(self.domain);
        for (t, c) in templates.iter().zip(cs) {
            out = out.add(&t.scale(&Coeff::float(c)))?;
        }
        Ok(out)
    }
}

/// One non-integrable naive signature and its coefficient `f_j(x) = Σ_e w_e c_e(x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocusComponent {
    pub signature: NaiveSignature,
    /// The naive term with unit coefficient.
    pub term: String,
    pub weights: Vec<(usize, Complex64)>,
}

/// `h(x) = Σ_j |f_j(x)|²` over non-integrable signatures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocusCondition {
    pub family: FamilySum,
    pub components: Vec<LocusComponent>,
}

impl LocusCondition {
    pub fn h(&self, point: &[f64]) -> Result<f64, IntegrateError> {
        let cs = self.family.coefficients_at(point)?;
        Ok(self
            .components
            .iter()
            .map(|c| c.weights.iter().map(|(e, w)| w * cs[*e]).sum::<Complex64>().norm_sqr())
            .sum())
    }

    /// Whether `f(x, ·)` is integrable, deciding `h(x) = 0` up to `tol`.
    pub fn contains(&self, point: &[f64], tol: f64) -> Result<bool, IntegrateError> {
        Ok(self.h(point)? <= tol)
    }

    pub fn always_integrable(&self) -> bool {
        self.components.is_empty()
    }

    pub fn description(&self) -> String {
        if self.components.is_empty() {
            return "h(x) = 0".into();
        }
        let mut s = String::from("h(x) =");
        for (k, c) in self.components.iter().enumerate() {
            if k > 0 {
                s.push_str(" +");
            }
            s.push_str(" |");
            for (j, (e, w)) in c.weights.iter().enumerate() {
                if j > 0 {
                    s.push_str(" + ");
                }
                let mut expr = self.family.entries[*e].coefficient.to_string();
                if c.weights.len() > 1 && expr.trim_start_matches('-').contains(['+', '-']) {
                    expr = format!("({expr})");
                }
                if *w == Complex64::new(1.0, 0.0) {
                    let _ = write!(s, "{expr}");
                } else {
                    let _ = write!(s, "({w})*({expr})");
                }
            }
            s.push_str("|^2");
        }
        s
    }
}

/// Collects the coefficient of each non-integrable naive signature.
pub fn locus(family: &FamilySum) -> Result<LocusCondition, IntegrateError> {
    let templates = family.validate()?;
    let a = family.domain.lower();
    let mut keys: Vec<Signature> = Vec::new();
    let mut components: Vec<LocusComponent> = Vec::new();
    for (e, t) in templates.iter().enumerate() {
        let dec = prepare(t)?;
        for term in dec.naive.terms() {
            if naive_term_integrable(term, a) {
                continue;
            }
            let key = term.signature();
            let w = term.coeff.value();
            match keys.iter().position(|k| *k == key) {
                Some(i) => components[i].weights.push((e, w)),
                None => {
                    keys.push(key);
                    let mut unit = term.clone();
                    unit.coeff = Coeff::one();
                    components.push(LocusComponent {
                        signature: NaiveSignature::of(term),
                        term: unit.to_string(),
                        weights: vec![(e, w)],
                    });
                }
            }
        }
    }
    Ok(LocusCondition { family: family.clone(), components })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    /// Block boundaries: the ray start, then powers of ten.
    pub boundaries: Vec<f64>,
    /// `∫_a^T |f|` at each boundary past the first.
    pub truncations: Vec<f64>,
    pub blocks: Vec<f64>,
    pub ratios: Vec<f64>,
    pub diverges: bool,
}

/// Largest rate at which `|f|` can oscillate: the spread of phase slopes.
fn beat_slope(terms: &[Term], y: f64) -> f64 {
    let slopes: Vec<f64> = terms.iter().map(|t| t.phase.derivative(y)).collect();
    let max = slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = slopes.iter().copied().fold(f64::INFINITY, f64::min);
    if slopes.is_empty() {
        0.0
    } else {
        max - min
    }
}

/// Masses of `∫|f|` over decades up to `10^{k₀+decades}`; growth is declared
/// when every consecutive ratio is at least [`GROWTH_RATIO`], i.e. the blocks
/// do not shrink the way an integrable tail must.
pub fn growth_diagnostic(sum: &PreparedSum, decades: usize) -> Result<GrowthReport, IntegrateError> {
    let a = sum.domain.lower();
    let k0 = a.log10().floor() as i32;
    let mut boundaries = vec![a];
    for j in 1..=decades as i32 {
        boundaries.push(10f64.powi(k0 + j));
    }
    sum.evaluate(a)?;
    let abs = |y: f64| Complex64::new(sum.evaluate(y).map(|v| v.norm()).unwrap_or(f64::NAN), 0.0);
    let mut blocks = Vec::new();
    for w in boundaries.windows(2) {
        let slope = beat_slope(sum.terms(), w[0]).max(beat_slope(sum.terms(), w[1]));
        let panel = (PI / (1.0 + slope)).min((w[1] - w[0]) / 64.0);
        blocks.push(quad::truncated_integral_panels(&abs, w[0], w[1], panel)?.value.re);
    }
    let truncations: Vec<f64> = blocks.iter().scan(0.0, |acc, b| {
        *acc += b;
        Some(*acc)
    }).collect();
    let ratios: Vec<f64> = blocks.windows(2).map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 }).collect();
    let diverges = blocks.last().is_some_and(|b| *b > GROWTH_FLOOR) && ratios.iter().all(|r| *r >= GROWTH_RATIO);
    Ok(GrowthReport { boundaries, truncations, blocks, ratios, diverges })
}
