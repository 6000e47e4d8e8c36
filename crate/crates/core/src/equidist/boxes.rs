use std::f64::consts::PI;
use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{frac, qbasis, EquidistError, ParamGrid, TildePhase, UnitBox};
use crate::phase::Phase;

/// Above this many boundary crossings, a component without a closed-form
/// inverse is handled by sampling.
const MAX_BISECTED_CROSSINGS: f64 = 2e5;
const SAMPLES: usize = 1_000_000;

/// `ψ(t) = factor·(p₁(t)/(2πρ₁), …, pₙ(t)/(2πρₙ))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Psi {
    pub components: Vec<TildePhase>,
    #[serde(default = "one")]
    pub factor: f64,
}

fn one() -> f64 {
    1.0
}

impl Psi {
    /// `ψ_k = p_k/(2π)`.
    pub fn from_phases(phases: Vec<Phase>) -> Self {
        Psi { components: phases.into_iter().map(|phase| TildePhase { phase, rho: 1 }).collect(), factor: 1.0 }
    }

    pub fn scaled(&self, x: f64) -> Self {
        Psi { components: self.components.clone(), factor: self.factor * x }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        self.components.iter().map(|c| self.factor * c.eval(t)).collect()
    }

    /// The precondition of the statistics: ℚ-independent, nonzero components.
    pub fn check_independent(&self) -> Result<(), EquidistError> {
        let phases: Vec<Phase> = self.components.iter().map(|c| c.phase.clone()).collect();
        if phases.iter().any(Phase::is_zero) {
            return Err(EquidistError::DependentPhases("a component is identically zero".into()));
        }
        let q = qbasis(&phases);
        if !q.inputs_independent() {
            return Err(EquidistError::DependentPhases(format!(
                "{} components span a space of rank {}",
                phases.len(),
                q.rank
            )));
        }
        Ok(())
    }
}

/// One component prepared for crossing enumeration on `[0, T]`.
struct Component {
    eval: Box<dyn Fn(f64) -> f64 + Sync>,
    /// `κ·t^e` when the component is a single monomial.
    monomial: Option<(f64, f64)>,
    /// Maximal intervals of monotonicity covering `[0, T]`.
    pieces: Vec<(f64, f64)>,
    variation: f64,
}

impl Component {
    fn new(tp: &TildePhase, factor: f64, horizon: f64) -> Self {
        let scale = factor / (2.0 * PI * tp.rho as f64);
        let terms = tp.phase.numeric_terms();
        let monomial = match terms.as_slice() {
            [(c, e)] => Some((scale * c, *e)),
            _ => None,
        };
        let t2 = terms.clone();
        let eval: Box<dyn Fn(f64) -> f64 + Sync> = Box::new(move |t| scale * t2.iter().map(|(c, e)| c * t.powf(*e)).sum::<f64>());
        let pieces = if monomial.is_some() || terms.is_empty() {
            vec![(0.0, horizon)]
        } else {
            let d = |t: f64| terms.iter().map(|(c, e)| c * e * t.powf(e - 1.0)).sum::<f64>();
            monotone_pieces(&d, horizon)
        };
        let variation = pieces.iter().map(|&(a, b)| (eval(b) - eval(a)).abs()).sum();
        Component { eval, monomial, pieces, variation }
    }

    fn inverse(&self, level: f64, a: f64, b: f64) -> f64 {
        if let Some((k, e)) = self.monomial {
            let r = level / k;
            let t = if e == 1.0 {
                r
            } else if e == 2.0 {
                r.max(0.0).sqrt()
            } else {
                r.max(0.0).powf(1.0 / e)
            };
            return t.clamp(a, b);
        }
        let up = (self.eval)(b) >= (self.eval)(a);
        let (mut lo, mut hi) = (a, b);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if ((self.eval)(mid) < level) == up {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Calls `emit` on the maximal subintervals of `[a, b]` where `{ψ} ∈ [lo, hi)`.
    fn windows(&self, lo: f64, hi: f64, a: f64, b: f64, emit: &mut dyn FnMut(f64, f64)) {
        if lo == 0.0 && hi == 1.0 {
            emit(a, b);
            return;
        }
        if self.variation == 0.0 {
            if lo <= frac((self.eval)(a)) && frac((self.eval)(a)) < hi {
                emit(a, b);
            }
            return;
        }
        for &(p0, p1) in &self.pieces {
            let (u, v) = (p0.max(a), p1.min(b));
            if u >= v {
                continue;
            }
            let (fu, fv) = ((self.eval)(u), (self.eval)(v));
            let (vmin, vmax) = (fu.min(fv), fu.max(fv));
            let mut m = vmin.floor();
            while m <= vmax {
                let l0 = (m + lo).max(vmin);
                let l1 = (m + hi).min(vmax);
                if l0 < l1 {
                    let (s0, s1) = (self.inverse(l0, u, v), self.inverse(l1, u, v));
                    let (s0, s1) = if s0 <= s1 { (s0, s1) } else { (s1, s0) };
                    if s0 < s1 {
                        emit(s0, s1);
                    }
                }
                m += 1.0;
            }
        }
    }
}

/// Splits `[0, T]` at the sign changes of `d`.
fn monotone_pieces(d: &dyn Fn(f64) -> f64, horizon: f64) -> Vec<(f64, f64)> {
    const PROBES: usize = 4096;
    let mut cuts = vec![0.0];
    let h = horizon / PROBES as f64;
    let mut prev = d(0.5 * h);
    for i in 1..PROBES {
        let t = (i as f64 + 0.5) * h;
        let cur = d(t);
        if prev != 0.0 && cur != 0.0 && prev.signum() != cur.signum() {
            let (mut lo, mut hi) = (t - h, t);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if d(mid).signum() == prev.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            cuts.push(0.5 * (lo + hi));
        }
        if cur != 0.0 {
            prev = cur;
        }
    }
    cuts.push(horizon);
    cuts.windows(2).map(|w| (w[0], w[1])).collect()
}

fn measure(comps: &[Component], order: &[usize], b: &UnitBox, level: usize, a: f64, z: f64) -> f64 {
    if level == order.len() {
        return z - a;
    }
    let k = order[level];
    let (lo, hi) = b.intervals[k];
    let mut total = 0.0;
    comps[k].windows(lo, hi, a, z, &mut |u, v| total += measure(comps, order, b, level + 1, u, v));
    total
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FractionMethod {
    Bracketing,
    Sampling,
}

/// `vol₁{t ∈ [0,T] : {ψ(t)} ∈ I} / T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxFraction {
    pub fraction: f64,
    /// Length of `W ∩ [from, to]`.
    pub mass: f64,
    pub error: f64,
    pub method: FractionMethod,
}

/// Measure of `{t ∈ [from, to] : {ψ(t)} ∈ I}`.
fn window_mass(psi: &Psi, b: &UnitBox, from: f64, to: f64) -> Result<BoxFraction, EquidistError> {
    if b.dim() != psi.dim() {
        return Err(EquidistError::InvalidBox(format!("box has {} sides, ψ has {} components", b.dim(), psi.dim())));
    }
    if !(to > from && from >= 0.0) {
        return Err(EquidistError::Invalid(format!("window [{from}, {to}]")));
    }
    let comps: Vec<Component> = psi.components.iter().map(|c| Component::new(c, psi.factor, to)).collect();
    let len = to - from;
    if comps.iter().any(|c| c.monomial.is_none() && c.variation > MAX_BISECTED_CROSSINGS) {
        let h = len / SAMPLES as f64;
        let hits = (0..SAMPLES)
            .into_par_iter()
            .filter(|&i| {
                let t = from + (i as f64 + 0.5) * h;
                comps.iter().zip(&b.intervals).all(|(c, &(lo, hi))| {
                    let f = frac((c.eval)(t));
                    lo <= f && f < hi
                })
            })
            .count();
        let p = hits as f64 / SAMPLES as f64;
        return Ok(BoxFraction {
            fraction: p,
            mass: p * len,
            error: (p * (1.0 - p) / SAMPLES as f64).sqrt().max(1.0 / SAMPLES as f64) * len,
            method: FractionMethod::Sampling,
        });
    }
    let mut order: Vec<usize> = (0..comps.len()).collect();
    order.sort_by(|&i, &j| comps[i].variation.total_cmp(&comps[j].variation));
    let mass = measure(&comps, &order, b, 0, from, to).clamp(0.0, len);
    // Each crossing is located to a few ulps of `to`.
    let crossings: f64 = comps.iter().map(|c| c.variation + 2.0).sum();
    let error = (crossings * 8.0 * f64::EPSILON * to).min(len);
    Ok(BoxFraction { fraction: mass / len, mass, error, method: FractionMethod::Bracketing })
}

/// Fraction of `[0, T]` spent by `{ψ}` (or `{xψ}`) in the box.
pub fn box_fraction(psi: &Psi, b: &UnitBox, horizon: f64, x: Option<f64>) -> Result<BoxFraction, EquidistError> {
    let psi = x.map_or_else(|| psi.clone(), |x| psi.scaled(x));
    window_mass(&psi, b, 0.0, horizon)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CudEntry {
    pub horizon: f64,
    pub box_index: usize,
    pub x: Option<f64>,
    pub fraction: f64,
    pub volume: f64,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CudReport {
    pub horizons: Vec<f64>,
    pub boxes: Vec<UnitBox>,
    pub entries: Vec<CudEntry>,
    /// `sup |fraction − vol|` over boxes (and parameters) per horizon.
    pub sup_deviation: Vec<f64>,
    /// The last deviation is below the first.
    pub decreasing: bool,
}

/// Box statistics of `ψ` at each horizon, optionally over a parameter grid
/// scaling `ψ`.
pub fn cud_test(psi: &Psi, boxes: &[UnitBox], horizons: &[f64], grid: Option<ParamGrid>) -> Result<CudReport, EquidistError> {
    psi.check_independent()?;
    if let Some(g) = grid {
        if g.lo <= 0.0 && g.hi >= 0.0 {
            return Err(EquidistError::DependentPhases(format!("parameter grid [{}, {}] contains 0", g.lo, g.hi)));
        }
    }
    let xs: Vec<Option<f64>> = grid.map_or(vec![None], |g| g.values().into_iter().map(Some).collect());
    let mut jobs: Vec<(f64, usize, Option<f64>)> = Vec::new();
    for &t in horizons {
        for b in 0..boxes.len() {
            jobs.extend(xs.iter().map(|&x| (t, b, x)));
        }
    }
    let entries = jobs
        .par_iter()
        .map(|&(t, b, x)| {
            let f = box_fraction(psi, &boxes[b], t, x)?;
            Ok(CudEntry { horizon: t, box_index: b, x, fraction: f.fraction, volume: boxes[b].volume(), error: f.error / t })
        })
        .collect::<Result<Vec<_>, EquidistError>>()?;
    let sup_deviation: Vec<f64> = horizons
        .iter()
        .map(|&t| {
            entries.iter().filter(|e| e.horizon == t).map(|e| (e.fraction - e.volume).abs()).fold(0.0, f64::max)
        })
        .collect();
    let decreasing = sup_deviation.len() < 2 || sup_deviation.last() < sup_deviation.first();
    Ok(CudReport { horizons: horizons.to_vec(), boxes: boxes.to_vec(), entries, sup_deviation, decreasing })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockEntry {
    pub k: u32,
    /// `vol₁(W ∩ [2^k, 2^{k+1}])`.
    pub mass: f64,
    /// `2^{k-1}·vol(I)`.
    pub bound: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockReport {
    pub entries: Vec<BlockEntry>,
    /// Smallest `k` from which the bound holds up to the end of the range.
    pub k0: Option<u32>,
}

/// Checks `vol₁(W_{ψ,I} ∩ [2^k, 2^{k+1}]) ≥ 2^{k−1}·vol(I)` on dyadic blocks.
pub fn block_bound_check(psi: &Psi, b: &UnitBox, ks: RangeInclusive<u32>, x: Option<f64>) -> Result<BlockReport, EquidistError> {
    let psi = x.map_or_else(|| psi.clone(), |x| psi.scaled(x));
    let entries = ks
        .collect::<Vec<u32>>()
        .par_iter()
        .map(|&k| {
            let from = 2f64.powi(k as i32);
            let m = window_mass(&psi, b, from, 2.0 * from)?;
            let bound = 0.5 * from * b.volume();
            Ok(BlockEntry { k, mass: m.mass, bound, holds: m.mass - m.error >= bound })
        })
        .collect::<Result<Vec<_>, EquidistError>>()?;
    let k0 = entries.iter().rev().take_while(|e| e.holds).last().map(|e| e.k);
    Ok(BlockReport { entries, k0 })
}
