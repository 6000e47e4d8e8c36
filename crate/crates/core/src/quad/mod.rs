//! Numeric oracle for oscillatory integrals.
//!
//! Bounded intervals are cut into panels no longer than the half period of
//! the oscillation and integrated with adaptive Gauss–Kronrod. Rays are cut
//! at the zeros of the oscillation; the slice integrals then alternate with
//! slowly varying magnitude and their partial sums are accelerated by
//! iterated averaging. Every other module cross-checks against this one.

mod accel;
mod kronrod;

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{OnceLock, RwLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use accel::IteratedAverage;
pub use kronrod::{gk15, Adaptive, PanelSum};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    #[error("Diverges: ray integral with rho={rho} is not absolutely convergent")]
    Diverges { rho: f64 },
    #[error("Tolerance: {what} (reached {achieved:.3e})")]
    Tolerance { what: String, achieved: f64 },
    #[error("InvalidInterval: {0}")]
    InvalidInterval(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    ClosedForm,
    AdaptivePanels,
    ZeroSliceAcceleration,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadResult {
    pub value: Complex64,
    pub error_bound: f64,
    pub method: Method,
    /// Panels (bounded path) or slices (ray path) used.
    pub pieces: usize,
}

impl QuadResult {
    pub fn zero() -> Self {
        QuadResult { value: Complex64::new(0.0, 0.0), error_bound: 0.0, method: Method::ClosedForm, pieces: 0 }
    }

    fn from_panels(p: PanelSum) -> Self {
        QuadResult { value: p.value, error_bound: p.error, method: Method::AdaptivePanels, pieces: p.panels }
    }
}

/// Upper integration limit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Upper {
    Finite(f64),
    Infinity,
}

/// Canonical integrand `t^ρ (log t)^σ e^{iσ₀t} u(t)` with `σ₀ = ±1`.
#[derive(Clone, Copy)]
pub struct Kernel<'a> {
    pub rho: f64,
    pub sigma: u32,
    pub orientation: i32,
    pub unit: Option<&'a (dyn Fn(f64) -> f64 + Sync)>,
}

impl<'a> Kernel<'a> {
    pub fn new(rho: f64, sigma: u32, orientation: i32) -> Self {
        Kernel { rho, sigma, orientation, unit: None }
    }

    pub fn with_unit(mut self, unit: &'a (dyn Fn(f64) -> f64 + Sync)) -> Self {
        self.unit = Some(unit);
        self
    }

    fn polynomial(&self) -> bool {
        self.sigma == 0 && self.rho >= 0.0 && self.rho.fract() == 0.0
    }

    pub fn amplitude(&self, t: f64) -> f64 {
        let mut v = if self.polynomial() { t.powi(self.rho as i32) } else { t.powf(self.rho) };
        if self.sigma > 0 {
            v *= t.ln().powi(self.sigma as i32);
        }
        if let Some(u) = self.unit {
            v *= u(t);
        }
        v
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        Complex64::from_polar(1.0, self.orientation as f64 * t) * self.amplitude(t)
    }
}

/// Options of the zero-slice ray method.
#[derive(Clone, Copy, Debug)]
pub struct RayOptions {
    /// Rounds of iterated averaging.
    pub rounds: usize,
    /// Stop once two successive accelerated values differ by less than this.
    pub tol: f64,
    pub min_slices: usize,
    pub max_slices: usize,
    /// Panels per slice.
    pub panels_per_slice: usize,
}

impl Default for RayOptions {
    fn default() -> Self {
        RayOptions { rounds: 4, tol: 1e-10, min_slices: 12, max_slices: 200_000, panels_per_slice: 1 }
    }
}

impl RayOptions {
    /// Doubled panels and a tenfold tighter stop, for refinement checks.
    pub fn refined(self) -> Self {
        RayOptions { tol: self.tol / 10.0, panels_per_slice: self.panels_per_slice * 2, ..self }
    }
}

/// Oscillation used to place slice boundaries.
#[derive(Clone, Copy)]
pub enum Oscillation<'a> {
    /// `e^{iωt}`.
    Linear(f64),
    /// `e^{iφ(t)}` with `φ'` of constant sign on the ray.
    General { phase: &'a (dyn Fn(f64) -> f64 + Sync), derivative: &'a (dyn Fn(f64) -> f64 + Sync) },
}

impl Oscillation<'_> {
    fn value(&self, t: f64) -> f64 {
        match self {
            Oscillation::Linear(w) => w * t,
            Oscillation::General { phase, .. } => phase(t),
        }
    }

    fn slope(&self, t: f64) -> f64 {
        match self {
            Oscillation::Linear(w) => *w,
            Oscillation::General { derivative, .. } => derivative(t),
        }
    }

    /// The point past `t` where the phase has advanced by `π`.
    pub fn next_zero(&self, t: f64) -> f64 {
        match self {
            Oscillation::Linear(w) => t + PI / w.abs(),
            Oscillation::General { .. } => {
                let sgn = self.slope(t).signum();
                let target = self.value(t) + sgn * PI;
                let g = |s: f64| sgn * (self.value(s) - target);
                let mut step = (PI / self.slope(t).abs()).min(1e6 * t.max(1.0));
                if !step.is_finite() || step <= 0.0 {
                    step = 1.0;
                }
                let mut lo = t;
                let mut hi = t + step;
                while g(hi) < 0.0 {
                    lo = hi;
                    step *= 2.0;
                    hi = t + step;
                }
                let mut x = hi;
                for _ in 0..200 {
                    let gx = g(x);
                    if gx == 0.0 {
                        break;
                    }
                    if gx > 0.0 {
                        hi = x;
                    } else {
                        lo = x;
                    }
                    let d = sgn * self.slope(x);
                    let newton = x - gx / d;
                    let next = if d > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
                    let done = (next - x).abs() <= 4.0 * f64::EPSILON * x.abs();
                    x = next;
                    if done {
                        break;
                    }
                }
                x
            }
        }
    }
}

/// `∫_start^∞ amp(t)·e^{iφ(t)} dt` by slicing at the zeros of the oscillation
/// and accelerating the partial sums.
///
/// `integrand` is the full integrand (amplitude times oscillation). The caller
/// guarantees that `φ'` keeps its sign on the ray and that the amplitude is
/// eventually monotone and tends to zero.
pub fn oscillatory_ray(
    integrand: &(dyn Fn(f64) -> Complex64 + Sync),
    osc: Oscillation<'_>,
    start: f64,
    opts: &RayOptions,
) -> Result<QuadResult, QuadError> {
    let rule = Adaptive::default();
    let mut acc = IteratedAverage::new(opts.rounds);
    let mut partial = Complex64::new(0.0, 0.0);
    let mut panel_error = 0.0;
    let mut magnitude = 0.0;
    let mut t = start;
    let mut quiet = 0;
    for n in 0..opts.max_slices {
        let next = osc.next_zero(t);
        let piece = rule.integrate_panels(integrand, t, next, (next - t) / opts.panels_per_slice as f64);
        partial += piece.value;
        panel_error += piece.error;
        magnitude += piece.value.norm();
        acc.push(partial);
        t = next;
        if n + 1 >= opts.min_slices.max(opts.rounds + 3) {
            let r = acc.residual().unwrap_or(f64::INFINITY);
            if r < opts.tol {
                quiet += 1;
            } else {
                quiet = 0;
            }
            if quiet >= 2 {
                let value = acc.value().expect("window is full");
                let error_bound = 4.0 * r + panel_error + 1e-15 * magnitude;
                return Ok(QuadResult {
                    value,
                    error_bound,
                    method: Method::ZeroSliceAcceleration,
                    pieces: n + 1,
                });
            }
        }
    }
    Err(QuadError::Tolerance {
        what: format!("slice acceleration did not settle within {} slices", opts.max_slices),
        achieved: acc.residual().unwrap_or(f64::INFINITY),
    })
}

/// `∫_start^∞ f` for a non-oscillating integrand decaying at least like
/// `t^{-decay}` with `decay > 1`, via `t = start·e^v`.
pub fn decaying_ray(
    f: &(dyn Fn(f64) -> Complex64 + Sync),
    start: f64,
    decay: f64,
    tol: f64,
) -> Result<QuadResult, QuadError> {
    if decay <= 1.0 || start <= 0.0 {
        return Err(QuadError::Diverges { rho: -decay });
    }
    let g = |v: f64| {
        let t = start * v.exp();
        f(t) * t
    };
    // Integrand in v decays like e^{-(decay-1)v}.
    let rate = decay - 1.0;
    let scale = g(0.0).norm().max(1e-300);
    let v_max = ((scale / tol).max(1.0).ln() + 40.0) / rate;
    let rule = Adaptive::default();
    let r = rule.integrate_panels(&g, 0.0, v_max, 1.0);
    let tail = g(v_max).norm() / rate;
    Ok(QuadResult { value: r.value, error_bound: r.error + tail, method: Method::AdaptivePanels, pieces: r.panels })
}

/// `∫_a^b t^ρ (log t)^σ e^{iσ₀t} u(t) dt` on a bounded interval or a ray.
pub fn osc_integral(kernel: &Kernel<'_>, a: f64, b: Upper) -> Result<QuadResult, QuadError> {
    osc_integral_with(kernel, a, b, &RayOptions::default())
}

pub fn osc_integral_with(kernel: &Kernel<'_>, a: f64, b: Upper, opts: &RayOptions) -> Result<QuadResult, QuadError> {
    if kernel.orientation != 1 && kernel.orientation != -1 {
        return Err(QuadError::InvalidInterval(format!("orientation {} is not ±1", kernel.orientation)));
    }
    if !a.is_finite() {
        return Err(QuadError::InvalidInterval(format!("lower limit {a}")));
    }
    let w = kernel.orientation as f64;
    let f = |t: f64| kernel.eval(t);
    match b {
        Upper::Finite(b) => {
            if !b.is_finite() {
                return Err(QuadError::InvalidInterval(format!("upper limit {b}")));
            }
            if a == b {
                return Ok(QuadResult::zero());
            }
            if b < a {
                let mut r = osc_integral_with(kernel, b, Upper::Finite(a), opts)?;
                r.value = -r.value;
                return Ok(r);
            }
            if a <= 0.0 && !kernel.polynomial() {
                return Err(QuadError::InvalidInterval(format!(
                    "[{a}, {b}] reaches t ≤ 0 with a non-polynomial kernel"
                )));
            }
            if kernel.rho == 0.0 && kernel.sigma == 0 && kernel.unit.is_none() {
                let i = Complex64::new(0.0, 1.0);
                let value = (Complex64::from_polar(1.0, w * b) - Complex64::from_polar(1.0, w * a)) / (i * w);
                return Ok(QuadResult {
                    value,
                    error_bound: 4.0 * f64::EPSILON * (1.0 + a.abs().max(b.abs())),
                    method: Method::ClosedForm,
                    pieces: 0,
                });
            }
            let panel = PI / opts.panels_per_slice as f64;
            Ok(QuadResult::from_panels(Adaptive::default().integrate_panels(&f, a, b, panel)))
        }
        Upper::Infinity => {
            if a <= 0.0 {
                return Err(QuadError::InvalidInterval(format!("ray from {a} reaches t ≤ 0")));
            }
            if kernel.rho >= -1.0 {
                return Err(QuadError::Diverges { rho: kernel.rho });
            }
            // t^ρ (log t)^σ decreases once log t > σ/|ρ|.
            let mono = if kernel.sigma > 0 { (kernel.sigma as f64 / -kernel.rho).exp() } else { a };
            let start = a.max(mono);
            let mut head = QuadResult::zero();
            if start > a {
                head = osc_integral_with(kernel, a, Upper::Finite(start), opts)?;
            }
            let tail = oscillatory_ray(&f, Oscillation::Linear(w), start, opts)?;
            Ok(QuadResult {
                value: head.value + tail.value,
                error_bound: head.error_bound + tail.error_bound,
                method: Method::ZeroSliceAcceleration,
                pieces: head.pieces + tail.pieces,
            })
        }
    }
}

type GammaKey = (u64, u32, i32, u64);

fn gamma_cache() -> &'static RwLock<HashMap<GammaKey, QuadResult>> {
    static CACHE: OnceLock<RwLock<HashMap<GammaKey, QuadResult>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// `∫_a^∞ t^ρ (log t)^σ e^{iσ₀t} dt` for `ρ < −1`, memoized.
const GAMMA_CACHE_CAP: usize = 1 << 16;

pub fn improper_gamma(rho: f64, sigma: u32, orientation: i32, a: f64) -> Result<QuadResult, QuadError> {
    let key = (rho.to_bits(), sigma, orientation, a.to_bits());
    if let Some(hit) = gamma_cache().read().expect("gamma cache poisoned").get(&key) {
        return Ok(hit.clone());
    }
    let r = osc_integral(&Kernel::new(rho, sigma, orientation), a, Upper::Infinity)?;
    let mut cache = gamma_cache().write().expect("gamma cache poisoned");
    if cache.len() >= GAMMA_CACHE_CAP {
        cache.clear();
    }
    cache.insert(key, r.clone());
    Ok(r)
}

/// `∫_a^T f(t) dt` with adaptive panels no longer than `π`.
pub fn truncated_integral(f: &(dyn Fn(f64) -> Complex64 + Sync), a: f64, t: f64) -> Result<QuadResult, QuadError> {
    truncated_integral_panels(f, a, t, PI)
}

/// `∫_a^T f(t) dt` with adaptive panels no longer than `max_panel`.
pub fn truncated_integral_panels(
    f: &(dyn Fn(f64) -> Complex64 + Sync),
    a: f64,
    t: f64,
    max_panel: f64,
) -> Result<QuadResult, QuadError> {
    if !a.is_finite() || !t.is_finite() {
        return Err(QuadError::InvalidInterval(format!("[{a}, {t}]")));
    }
    if !(max_panel > 0.0) {
        return Err(QuadError::InvalidInterval(format!("panel length {max_panel}")));
    }
    let r = Adaptive::default().integrate_panels(f, a, t, max_panel);
    if !r.value.re.is_finite() || !r.value.im.is_finite() {
        return Err(QuadError::Tolerance { what: "non-finite integrand".into(), achieved: f64::INFINITY });
    }
    Ok(QuadResult::from_panels(r))
}

/// Uniform grid of `cells` cells on `[lo, hi]`, sampled at cell midpoints.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub cells: usize,
}

impl Grid {
    pub fn new(lo: f64, hi: f64, cells: usize) -> Self {
        assert!(hi > lo && cells > 0, "empty grid");
        Grid { lo, hi, cells }
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / self.cells as f64
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        let h = self.step();
        (0..self.cells).map(move |i| self.lo + (i as f64 + 0.5) * h)
    }
}

/// Composite midpoint `L^p` norm of `f` over the grid window; `p = ∞` is the max.
pub fn lp_norm(f: &(dyn Fn(f64) -> Complex64 + Sync), grid: &Grid, p: f64) -> f64 {
    let values: Vec<f64> = grid.points().map(|t| f(t).norm()).collect();
    lp_norm_of_samples(&values, grid.step(), p)
}

pub fn lp_norm_of_samples(values: &[f64], step: f64, p: f64) -> f64 {
    if p.is_infinite() {
        return values.iter().copied().fold(0.0, f64::max);
    }
    let s: f64 = values.iter().map(|v| v.powf(p)).sum();
    (s * step).powf(1.0 / p)
}
