//! Equidistribution modulo 1 of phase maps `t ↦ ψ(t)`: rational bases of
//! phase families, Laurent forms, box statistics, dyadic-block bounds, the
//! sets `V_ε = {|f| ≥ ε}` and Weyl sums.

use serde::{Deserialize, Serialize};
use thiserror::Error;

mod boxes;
mod qbasis;
mod veps;
mod weyl;

pub use boxes::{block_bound_check, box_fraction, cud_test, BlockEntry, BlockReport, BoxFraction, CudEntry, CudReport, FractionMethod, Psi};
pub use qbasis::{laurent_form, qbasis, LaurentForm, QBasisResult, TildePhase};
pub use veps::{dovetail, torus_max, v_epsilon, Dovetail, DovetailPair, VEpsReport, EPSILON_SHARE};
pub use weyl::{weyl_sum_sup, WeylPoint, WeylReport};

use crate::quad::QuadError;

#[derive(Debug, Error)]
pub enum EquidistError {
    #[error("DependentPhases: {0}")]
    DependentPhases(String),
    #[error("AllPhasesZero: the function has no oscillating part")]
    AllPhasesZero,
    #[error("DegeneratePhase: {0}")]
    DegeneratePhase(String),
    #[error("invalid box: {0}")]
    InvalidBox(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error(transparent)]
    Quad(#[from] QuadError),
}

/// A product of half-open subintervals `[lo, hi)` of `[0, 1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitBox {
    pub intervals: Vec<(f64, f64)>,
}

impl UnitBox {
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self, EquidistError> {
        for &(lo, hi) in &intervals {
            if !(0.0 <= lo && lo < hi && hi <= 1.0) {
                return Err(EquidistError::InvalidBox(format!("[{lo}, {hi}) is not a nonempty subinterval of [0, 1)")));
            }
        }
        Ok(UnitBox { intervals })
    }

    pub fn full(dim: usize) -> Self {
        UnitBox { intervals: vec![(0.0, 1.0); dim] }
    }

    pub fn dim(&self) -> usize {
        self.intervals.len()
    }

    pub fn volume(&self) -> f64 {
        self.intervals.iter().map(|(lo, hi)| hi - lo).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.intervals.iter().zip(x).all(|(&(lo, hi), &v)| lo <= v && v < hi)
    }

    /// The first `count` boxes of the dyadic subdivisions of `[0,1)^dim`,
    /// level by level: the `2^dim` halves-per-axis boxes, then quarters, ...
    pub fn dyadic(dim: usize, count: usize) -> Vec<UnitBox> {
        let mut out = Vec::with_capacity(count);
        let mut level = 1u32;
        while out.len() < count && level < 20 {
            let side = 1usize << level;
            let cells = side.pow(dim as u32);
            for idx in 0..cells {
                if out.len() == count {
                    break;
                }
                let mut rem = idx;
                let intervals = (0..dim)
                    .map(|_| {
                        let j = rem % side;
                        rem /= side;
                        (j as f64 / side as f64, (j + 1) as f64 / side as f64)
                    })
                    .collect();
                out.push(UnitBox { intervals });
            }
            level += 1;
        }
        out
    }
}

/// Uniform grid over a compact parameter interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamGrid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl ParamGrid {
    pub const DEFAULT_POINTS: usize = 33;

    pub fn new(lo: f64, hi: f64, points: usize) -> Result<Self, EquidistError> {
        if !(lo <= hi) || points == 0 || (points == 1 && lo != hi) {
            return Err(EquidistError::Invalid(format!("parameter grid {lo}:{hi}:{points}")));
        }
        Ok(ParamGrid { lo, hi, points })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.lo];
        }
        (0..self.points).map(|i| self.lo + (self.hi - self.lo) * i as f64 / (self.points - 1) as f64).collect()
    }
}

/// Fractional part in `[0, 1)`.
pub(crate) fn frac(v: f64) -> f64 {
    let f = v - v.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}
