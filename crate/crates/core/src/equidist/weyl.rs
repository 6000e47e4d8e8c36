use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{EquidistError, ParamGrid};
use crate::exponent::Exponent;
use crate::phase::Phase;
use crate::quad::{gk15, oscillatory_ray, Oscillation, RayOptions};

/// Longest panel of the dense walk.
const MAX_PANEL: f64 = 0.05;
/// Subsamples used to refine each candidate maximum.
const REFINE: usize = 256;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylPoint {
    pub x: Option<f64>,
    /// `sup_{T ≤ Tmax} |Φ(T)|`, `Φ(T) = ∫_0^T e^{iφ}`.
    pub sup: f64,
    pub argsup: f64,
    pub sup_error: f64,
    /// Where the dense walk stopped; beyond it `|Φ|` cannot exceed `sup`.
    pub dense_until: f64,
    pub value_at_tmax: Complex64,
    /// `lim_{T→∞} Φ(T)` when the phase grows faster than linearly.
    pub limit: Option<Complex64>,
    pub limit_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylReport {
    pub tmax: f64,
    pub points: Vec<WeylPoint>,
    pub sup: f64,
}

struct Walk {
    ts: Vec<f64>,
    values: Vec<Complex64>,
}

fn panel_width(dphi: f64) -> f64 {
    (PI / (8.0 * dphi.abs().max(1e-300))).min(MAX_PANEL)
}

/// Bonnet bound on `|∫_T^{T'} e^{iφ}|` for `T' > T` once `|φ'|` is increasing.
fn tail_bound(dphi: f64) -> f64 {
    2.0 * std::f64::consts::SQRT_2 / dphi.abs()
}

fn weyl_one(phi: &Phase, scale: f64, tmax: f64) -> Result<WeylPoint, EquidistError> {
    let terms: Vec<(f64, f64)> = phi.numeric_terms().into_iter().map(|(c, e)| (scale * c, e)).collect();
    let value = |t: f64| terms.iter().map(|(c, e)| c * t.powf(*e)).sum::<f64>();
    let slope = |t: f64| terms.iter().map(|(c, e)| c * e * t.powf(e - 1.0)).sum::<f64>();
    let curvature = |t: f64| terms.iter().map(|(c, e)| c * e * (e - 1.0) * t.powf(e - 2.0)).sum::<f64>();
    let f = |t: f64| Complex64::from_polar(1.0, value(t));
    let superlinear = phi.degree() > Exponent::ONE;

    // |φ'| is increasing on [t, ∞) once φ'·φ'' > 0 there; checked on a log grid up to tmax.
    let increasing_from = |t: f64| -> bool {
        if !superlinear || t <= 0.0 {
            return false;
        }
        (0..=64).all(|i| {
            let s = t * (tmax.max(2.0 * t) / t).powf(i as f64 / 64.0);
            slope(s) * curvature(s) > 0.0
        })
    };

    let mut walk = Walk { ts: vec![0.0], values: vec![Complex64::new(0.0, 0.0)] };
    let mut t = 0.0;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    let mut best = 0.0f64;
    while t < tmax {
        let h = panel_width(slope(t).abs().max(slope((t + MAX_PANEL).min(tmax)).abs())).min(tmax - t);
        let (v, e) = gk15(&f, t, t + h);
        acc += v;
        err += e;
        t += h;
        walk.ts.push(t);
        walk.values.push(acc);
        best = best.max(acc.norm());
        // Stop once the remaining excursion cannot beat the running maximum.
        if superlinear && t > 1.0 && acc.norm() + tail_bound(slope(t)) < best && increasing_from(t) {
            break;
        }
    }
    let dense_until = t;

    // Refine the sup near the best few samples.
    let mut idx: Vec<usize> = (1..walk.ts.len()).collect();
    idx.sort_by(|&i, &j| walk.values[j].norm().total_cmp(&walk.values[i].norm()));
    let mut sup = 0.0f64;
    let mut argsup = 0.0;
    let mut sub_h = 0.0f64;
    for &i in idx.iter().take(3) {
        let lo = i.saturating_sub(1);
        let hi = (i + 1).min(walk.ts.len() - 1);
        let (a, b) = (walk.ts[lo], walk.ts[hi]);
        let h = (b - a) / REFINE as f64;
        sub_h = sub_h.max(h);
        let mut v = walk.values[lo];
        for k in 0..REFINE {
            let s = a + k as f64 * h;
            v += gk15(&f, s, s + h).0;
            if v.norm() > sup {
                sup = v.norm();
                argsup = s + h;
            }
        }
    }
    // |Φ'| = 1, so the sup lies within half a refined step of a sample.
    let sup_error = 0.5 * sub_h + err;

    // Past the dense walk (or past tmax) the tail is a convergent ray integral.
    let from = dense_until.min(tmax);
    let (value_at_tmax, limit, limit_error) = if superlinear && (dense_until < tmax || increasing_from(from)) {
        let opts = RayOptions::default();
        let osc = Oscillation::General { phase: &value, derivative: &slope };
        let tail = oscillatory_ray(&f, osc, from, &opts)?;
        let lim = acc + tail.value;
        let at_tmax = if dense_until < tmax { lim - oscillatory_ray(&f, osc, tmax, &opts)?.value } else { acc };
        (at_tmax, Some(lim), err + tail.error_bound)
    } else {
        (acc, None, 0.0)
    };
    Ok(WeylPoint { x: None, sup, argsup, sup_error, dense_until, value_at_tmax, limit, limit_error })
}
/// `sup_{T ≤ Tmax} |∫_0^T e^{iφ(t)} dt|`, optionally for `x·φ` over a grid.
pub fn weyl_sum_sup(phi: &Phase, tmax: f64, grid: Option<ParamGrid>) -> Result<WeylReport, EquidistError> {
    if phi.degree() < Exponent::ONE {
        return Err(EquidistError::DegeneratePhase(format!("degree {} < 1", phi.degree())));
    }
    if !(tmax > 0.0) {
        return Err(EquidistError::Invalid(format!("Tmax = {tmax}")));
    }
    let xs: Vec<Option<f64>> = match grid {
        None => vec![None],
        Some(g) => {
            if g.lo <= 0.0 && g.hi >= 0.0 {
                return Err(EquidistError::DegeneratePhase(format!("leading coefficient vanishes on [{}, {}]", g.lo, g.hi)));
            }
            g.values().into_iter().map(Some).collect()
        }
    };
    let points = xs
        .par_iter()
        .map(|&x| weyl_one(phi, x.unwrap_or(1.0), tmax).map(|p| WeylPoint { x, ..p }))
        .collect::<Result<Vec<_>, _>>()?;
    let sup = points.iter().map(|p| p.sup).fold(0.0, f64::max);
    Ok(WeylReport { tmax, points, sup })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constant::ConstantValue;

    fn t_sq() -> Phase {
        Phase::monomial(ConstantValue::one(), Exponent::integer(2)).unwrap()
    }

    #[test]
    fn linear_phase_sup_is_two() {
        let r = weyl_sum_sup(&Phase::linear(ConstantValue::one()), 100.0, None).unwrap();
        assert!((r.sup - 2.0).abs() < 1e-6, "{}", r.sup);
        assert!(r.points[0].limit.is_none());
        let exact = Complex64::new(100f64.sin(), 1.0 - 100f64.cos());
        assert!((r.points[0].value_at_tmax - exact).norm() < 1e-9);
    }

    #[test]
    fn fresnel_limit() {
        let r = weyl_sum_sup(&t_sq(), 1e4, None).unwrap();
        let p = &r.points[0];
        let half = 0.5 * (PI / 2.0).sqrt();
        assert!((p.limit.unwrap() - Complex64::new(half, half)).norm() < 1e-8, "{:?}", p.limit);
        assert!(p.dense_until < 100.0);
        // First peak of |Φ|, from an mpmath root of d|Φ|/dT.
        assert!((r.sup - 1.18946588678957).abs() < 1e-6, "{}", r.sup);
        assert!((p.argsup - 1.51573070616391).abs() < 1e-2, "{}", p.argsup);
    }

    #[test]
    fn scaling_the_phase_scales_the_sup() {
        let g = ParamGrid::new(1.0, 2.0, 5).unwrap();
        let r = weyl_sum_sup(&t_sq(), 1e3, Some(g)).unwrap();
        let s1 = r.points[0].sup;
        for p in &r.points {
            let x = p.x.unwrap();
            assert!((p.sup - s1 / x.sqrt()).abs() < 1e-6, "x={x}: {} vs {}", p.sup, s1 / x.sqrt());
        }
    }

    #[test]
    fn degenerate_phases() {
        let root = Phase::monomial(ConstantValue::one(), Exponent::new(1, 2)).unwrap();
        assert!(matches!(weyl_sum_sup(&root, 10.0, None), Err(EquidistError::DegeneratePhase(_))));
        let g = ParamGrid::new(-1.0, 1.0, 3).unwrap();
        assert!(matches!(weyl_sum_sup(&t_sq(), 10.0, Some(g)), Err(EquidistError::DegeneratePhase(_))));
    }
}
