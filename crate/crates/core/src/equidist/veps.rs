use std::ops::RangeInclusive;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{laurent_form, EquidistError, LaurentForm};
use crate::phase::Phase;

/// Share of the torus maximum `M` of `|F|` used as `ε`; `|F| ≥ 2ε` holds at
/// the maximiser with room to spare.
pub const EPSILON_SHARE: f64 = 0.4;
const TORUS_SIDE: usize = 64;
const TORUS_POINTS: usize = 1 << 18;
/// Cap on samples per dyadic block.
const MAX_BLOCK_SAMPLES: usize = 1 << 22;
const DOVETAIL_SAMPLES: usize = 1 << 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DovetailPair {
    pub t0: f64,
    pub t1: f64,
    pub f0: Complex64,
    pub f1: Complex64,
    pub gap: f64,
}

/// Pairs `t_{2j} < t_{2j+1}` in successive dyadic blocks with
/// `|f(t_{2j}) − f(t_{2j+1})| ≥ ε`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dovetail {
    pub epsilon: f64,
    pub pairs: Vec<DovetailPair>,
    /// Every pair is at least `ε` apart in value.
    pub separated: bool,
    pub increasing: bool,
}

/// Searches each block `[2^k, 2^{k+1}]` for a point of large `|f|` and a
/// partner where `f` differs most. `rate(t)` bounds how fast `f` oscillates
/// near `t` and sets the sampling step.
pub fn dovetail(
    f: &(dyn Fn(f64) -> Complex64 + Sync),
    rate: &(dyn Fn(f64) -> f64 + Sync),
    epsilon: f64,
    ks: RangeInclusive<u32>,
) -> Dovetail {
    let pairs: Vec<DovetailPair> = ks
        .collect::<Vec<u32>>()
        .par_iter()
        .map(|&k| {
            let a = 2f64.powi(k as i32);
            let w = rate(2.0 * a).max(rate(a)).max(1.0);
            let n = ((a * w * 8.0) as usize).clamp(64, DOVETAIL_SAMPLES);
            let h = a / n as f64;
            let ts: Vec<f64> = (0..n).map(|i| a + (i as f64 + 0.5) * h).collect();
            let vs: Vec<Complex64> = ts.iter().map(|&t| f(t)).collect();
            let i0 = (0..n).max_by(|&i, &j| vs[i].norm().total_cmp(&vs[j].norm())).expect("samples");
            let i1 = (0..n).max_by(|&i, &j| (vs[i] - vs[i0]).norm().total_cmp(&(vs[j] - vs[i0]).norm())).expect("samples");
            let (i0, i1) = if i0 <= i1 { (i0, i1) } else { (i1, i0) };
            DovetailPair { t0: ts[i0], t1: ts[i1], f0: vs[i0], f1: vs[i1], gap: (vs[i0] - vs[i1]).norm() }
        })
        .collect();
    let separated = pairs.iter().all(|p| p.gap >= epsilon);
    let seq: Vec<f64> = pairs.iter().flat_map(|p| [p.t0, p.t1]).collect();
    let increasing = seq.windows(2).all(|w| w[0] < w[1]);
    Dovetail { epsilon, pairs, separated, increasing }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VEpsReport {
    pub laurent: LaurentForm,
    /// `max |F|` over the torus sample.
    pub max_modulus: f64,
    pub target: Vec<f64>,
    pub epsilon: f64,
    /// Half-side of the cube around `target` (on the torus) where `|F| ≥ ε`.
    pub eps_half_width: f64,
    pub eps_box_volume: f64,
    pub ks: Vec<u32>,
    /// `∫_{V_ε ∩ [2^k, 2^{k+1}]} dt/t`.
    pub blocks: Vec<f64>,
    pub partial_sums: Vec<f64>,
    /// Least-squares growth of the partial sums per block.
    pub slope: f64,
    pub dovetail: Dovetail,
}

fn torus_points(n: usize) -> Vec<Vec<f64>> {
    if n == 0 {
        return vec![vec![]];
    }
    if TORUS_SIDE.pow(n as u32) <= TORUS_POINTS {
        let total = TORUS_SIDE.pow(n as u32);
        return (0..total)
            .map(|mut i| {
                (0..n)
                    .map(|_| {
                        let j = i % TORUS_SIDE;
                        i /= TORUS_SIDE;
                        (j as f64 + 0.5) / TORUS_SIDE as f64
                    })
                    .collect()
            })
            .collect();
    }
    // Kronecker sequence with square roots of primes.
    const PRIMES: [f64; 16] = [2.0, 3.0, 5.0, 7.0, 11.0, 13.0, 17.0, 19.0, 23.0, 29.0, 31.0, 37.0, 41.0, 43.0, 47.0, 53.0];
    (0..TORUS_POINTS)
        .map(|i| (0..n).map(|k| super::frac(i as f64 * PRIMES[k % 16].sqrt() * (1 + k / 16) as f64)).collect())
        .collect()
}

/// `max |F|` over the torus sample and a point attaining it.
pub fn torus_max(laurent: &LaurentForm) -> (f64, Vec<f64>) {
    torus_points(laurent.vars())
        .into_par_iter()
        .map(|x| (laurent.on_torus(&x).norm(), x))
        .reduce(|| (f64::NEG_INFINITY, vec![]), |a, b| if b.0 > a.0 { b } else { a })
}

/// Builds `V_ε` for `f = Σ c_j e^{i p_j}` from its Laurent form and measures
/// its logarithmic mass on dyadic blocks.
pub fn v_epsilon(atoms: &[(Complex64, Phase)], ks: RangeInclusive<u32>) -> Result<VEpsReport, EquidistError> {
    let atoms: Vec<(Complex64, Phase)> = atoms.iter().filter(|(c, _)| *c != Complex64::new(0.0, 0.0)).cloned().collect();
    if atoms.iter().all(|(_, p)| p.is_zero()) {
        return Err(EquidistError::AllPhasesZero);
    }
    let laurent = laurent_form(&atoms);
    let n = laurent.vars();
    let (max_modulus, target) = torus_max(&laurent);
    let epsilon = EPSILON_SHARE * max_modulus;
    // |F(x) − F(target)| ≤ 2π·L·‖x − target‖∞, so a cube of half-side δ keeps |F| ≥ ε.
    let lip = 2.0 * std::f64::consts::PI * laurent.lipschitz_weight();
    let delta = ((max_modulus - epsilon) / lip).min(0.5);
    let eps_box_volume = (2.0 * delta).powi(n as i32);

    let f = |t: f64| laurent.eval(t);
    let rate = |t: f64| atoms.iter().map(|(_, p)| p.derivative(t).abs()).fold(0.0, f64::max);
    let ks: Vec<u32> = ks.collect();
    let blocks: Vec<f64> = ks
        .par_iter()
        .map(|&k| {
            let a = 2f64.powi(k as i32);
            let w = 2.0 * rate(2.0 * a).max(rate(a)) + 1.0;
            let samples = ((a * w * 16.0) as usize).clamp(1024, MAX_BLOCK_SAMPLES);
            let h = a / samples as f64;
            (0..samples)
                .map(|i| {
                    let t = a + (i as f64 + 0.5) * h;
                    if f(t).norm() >= epsilon {
                        h / t
                    } else {
                        0.0
                    }
                })
                .sum()
        })
        .collect();
    let partial_sums: Vec<f64> = blocks
        .iter()
        .scan(0.0, |acc, b| {
            *acc += b;
            Some(*acc)
        })
        .collect();
    let slope = least_squares_slope(&partial_sums);
    let dovetail = dovetail(&f, &rate, epsilon, *ks.first().unwrap_or(&0)..=*ks.last().unwrap_or(&0));
    Ok(VEpsReport {
        laurent,
        max_modulus,
        target,
        epsilon,
        eps_half_width: delta,
        eps_box_volume,
        ks,
        blocks,
        partial_sums,
        slope,
        dovetail,
    })
}

fn least_squares_slope(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    if ys.len() < 2 {
        return ys.first().copied().unwrap_or(0.0);
    }
    let mx = (n - 1.0) / 2.0;
    let my = ys.iter().sum::<f64>() / n;
    let (num, den) = ys.iter().enumerate().fold((0.0, 0.0), |(a, b), (i, y)| {
        let dx = i as f64 - mx;
        (a + dx * (y - my), b + dx * dx)
    });
    num / den
}
