//! Fourier transforms `f̂(ξ) = ∫ f(t) e^{−2πiξt} dt` on a small catalog and on
//! sums over bounded intervals, with truncated transforms for Plancherel.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::IntegrateError;
use crate::model::{Domain, ModelError, PreparedSum};
use crate::quad::{self, lp_norm_of_samples, Grid, Kernel, QuadResult, Upper};

/// Catalog functions on ℝ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CatalogEntry {
    /// `e^{−|t|}`
    EAbs,
    /// `χ_{[−1,1]}`
    Indicator,
    /// `e^{−πt²}`, outside the class; kept as a reference transform.
    Gaussian,
    Zero,
}

pub fn catalog(name: &str) -> Option<CatalogEntry> {
    match name {
        "e_abs" => Some(CatalogEntry::EAbs),
        "indicator" => Some(CatalogEntry::Indicator),
        "gaussian" => Some(CatalogEntry::Gaussian),
        "zero" => Some(CatalogEntry::Zero),
        _ => None,
    }
}

impl CatalogEntry {
    pub fn name(&self) -> &'static str {
        match self {
            CatalogEntry::EAbs => "e_abs",
            CatalogEntry::Indicator => "indicator",
            CatalogEntry::Gaussian => "gaussian",
            CatalogEntry::Zero => "zero",
        }
    }

    pub fn in_class(&self) -> bool {
        !matches!(self, CatalogEntry::Gaussian)
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            CatalogEntry::EAbs => (-t.abs()).exp(),
            CatalogEntry::Indicator => f64::from(t.abs() <= 1.0),
            CatalogEntry::Gaussian => (-PI * t * t).exp(),
            CatalogEntry::Zero => 0.0,
        }
    }

    /// Known transform, used as a cross-check and for inverse truncations.
    pub fn reference_transform(&self, xi: f64) -> Complex64 {
        let v = match self {
            CatalogEntry::EAbs => 2.0 / (1.0 + 4.0 * PI * PI * xi * xi),
            CatalogEntry::Indicator if xi == 0.0 => 2.0,
            CatalogEntry::Indicator => (2.0 * PI * xi).sin() / (PI * xi),
            CatalogEntry::Gaussian => (-PI * xi * xi).exp(),
            CatalogEntry::Zero => 0.0,
        };
        Complex64::new(v, 0.0)
    }

    /// `‖f‖₂²`.
    pub fn l2_norm_sq(&self) -> f64 {
        match self {
            CatalogEntry::EAbs => 1.0,
            CatalogEntry::Indicator => 2.0,
            CatalogEntry::Gaussian => std::f64::consts::FRAC_1_SQRT_2,
            CatalogEntry::Zero => 0.0,
        }
    }

    /// Half-width beyond which `|f|` is below `1e-17`.
    fn reach(&self) -> f64 {
        match self {
            CatalogEntry::EAbs => 40.0,
            CatalogEntry::Indicator => 1.0,
            CatalogEntry::Gaussian => 4.0,
            CatalogEntry::Zero => 0.0,
        }
    }

    fn tail_bound(&self, cut: f64) -> f64 {
        match self {
            CatalogEntry::EAbs => 2.0 * (-cut).exp(),
            CatalogEntry::Indicator | CatalogEntry::Zero => 0.0,
            CatalogEntry::Gaussian => 2.0 * (-PI * cut * cut).exp() / (2.0 * PI * cut),
        }
    }

    /// `∫_{−y}^{y} f(t) e^{−2πiξt} dt`.
    pub fn truncated_transform(&self, xi: f64, y: f64) -> Result<QuadResult, IntegrateError> {
        let w = 2.0 * PI * xi;
        if let CatalogEntry::Indicator = self {
            let h = y.min(1.0);
            if w == 0.0 {
                return Ok(QuadResult { value: Complex64::new(2.0 * h, 0.0), ..QuadResult::zero() });
            }
            // s = |ω|t turns the kernel into e^{∓is} on [−|ω|h, |ω|h].
            let k = Kernel::new(0.0, 0, -(w.signum() as i32));
            let mut r = quad::osc_integral(&k, -w.abs() * h, Upper::Finite(w.abs() * h))?;
            r.value /= w.abs();
            r.error_bound /= w.abs();
            return Ok(r);
        }
        let cut = y.min(self.reach());
        if cut == 0.0 {
            return Ok(QuadResult::zero());
        }
        let f = |t: f64| Complex64::from_polar(self.eval(t), -w * t);
        let panel = (PI / (1.0 + w.abs())).min(1.0);
        let left = quad::truncated_integral_panels(&f, -cut, 0.0, panel)?;
        let right = quad::truncated_integral_panels(&f, 0.0, cut, panel)?;
        let tail = if cut < y { self.tail_bound(cut) } else { 0.0 };
        Ok(QuadResult {
            value: left.value + right.value,
            error_bound: left.error_bound + right.error_bound + tail,
            method: right.method,
            pieces: left.pieces + right.pieces,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierSample {
    pub xi: f64,
    pub value: Complex64,
    pub error_bound: f64,
    /// Closed-form value where the catalog knows it.
    pub reference: Option<Complex64>,
}

/// Samples of `f̂` at the given frequencies.
pub fn fourier(entry: CatalogEntry, xis: &[f64]) -> Result<Vec<FourierSample>, IntegrateError> {
    xis.par_iter()
        .map(|&xi| {
            let r = entry.truncated_transform(xi, f64::INFINITY)?;
            Ok(FourierSample { xi, value: r.value, error_bound: r.error_bound, reference: Some(entry.reference_transform(xi)) })
        })
        .collect()
}

/// Transform of a sum supported on a bounded interval (zero elsewhere).
pub fn fourier_sum(sum: &PreparedSum, xis: &[f64]) -> Result<Vec<FourierSample>, IntegrateError> {
    let Domain::Interval { lower, upper } = sum.domain else {
        return Err(IntegrateError::Model(ModelError::Domain(
            "transforms of sums need a bounded interval domain (the function is extended by zero)".into(),
        )));
    };
    sum.evaluate(0.5 * (lower + upper))?;
    xis.par_iter()
        .map(|&xi| {
            let w = 2.0 * PI * xi;
            let f = |t: f64| sum.evaluate(t).unwrap_or(Complex64::new(f64::NAN, f64::NAN)) * Complex64::from_polar(1.0, -w * t);
            let r = quad::truncated_integral_panels(&f, lower, upper, (PI / (1.0 + w.abs())).min(1.0))?;
            Ok(FourierSample { xi, value: r.value, error_bound: r.error_bound, reference: None })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlancherelReport {
    pub entry: CatalogEntry,
    pub truncations: Vec<f64>,
    /// `‖F_y − f̂‖₂` on the frequency grid, `F_y` the transform over `[−y, y]`.
    pub forward_errors: Vec<f64>,
    /// `‖G_y − f‖₂` on the time grid, `G_y` the inverse transform of `f̂`
    /// truncated to `[−y, y]`.
    pub inverse_errors: Vec<f64>,
    pub forward_nonincreasing: bool,
    pub inverse_decreasing: bool,
    pub f_norm_sq: f64,
    pub fhat_norm_sq: f64,
    pub parseval_gap: f64,
    pub time_grid: Grid,
    pub frequency_grid: Grid,
    pub parseval_grid: Grid,
}

/// Default grids: time window, frequency window for truncation errors, and a
/// wide frequency window for Parseval.
pub fn default_grids(entry: CatalogEntry) -> (Grid, Grid, Grid) {
    match entry {
        CatalogEntry::Indicator => (Grid::new(-2.0, 2.0, 400), Grid::new(-20.0, 20.0, 800), Grid::new(-4000.0, 4000.0, 32_000)),
        CatalogEntry::EAbs => (Grid::new(-20.0, 20.0, 800), Grid::new(-20.0, 20.0, 800), Grid::new(-200.0, 200.0, 8_000)),
        CatalogEntry::Gaussian | CatalogEntry::Zero => {
            (Grid::new(-6.0, 6.0, 600), Grid::new(-6.0, 6.0, 600), Grid::new(-8.0, 8.0, 1_600))
        }
    }
}

fn l2_distance(a: &[Complex64], b: &[Complex64], step: f64) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y).norm()).collect();
    lp_norm_of_samples(&d, step, 2.0)
}

pub fn plancherel_roundtrip(
    entry: CatalogEntry,
    truncations: &[f64],
    grids: (Grid, Grid, Grid),
) -> Result<PlancherelReport, IntegrateError> {
    let (tg, fg, pg) = grids;
    let xis: Vec<f64> = fg.points().collect();
    let fhat: Vec<Complex64> = fourier(entry, &xis)?.into_iter().map(|s| s.value).collect();
    let mut forward_errors = Vec::new();
    for &y in truncations {
        let fy = xis.par_iter().map(|&xi| entry.truncated_transform(xi, y).map(|r| r.value)).collect::<Result<Vec<_>, _>>()?;
        forward_errors.push(l2_distance(&fy, &fhat, fg.step()));
    }
    let ts: Vec<f64> = tg.points().collect();
    let f: Vec<Complex64> = ts.iter().map(|&t| Complex64::new(entry.eval(t), 0.0)).collect();
    let mut inverse_errors = Vec::new();
    for &y in truncations {
        let gy = ts
            .par_iter()
            .map(|&t| {
                let g = |xi: f64| entry.reference_transform(xi) * Complex64::from_polar(1.0, 2.0 * PI * xi * t);
                let panel = (0.5 / (1.0 + t.abs())).min(0.25);
                quad::truncated_integral_panels(&g, -y, y, panel).map(|r| r.value)
            })
            .collect::<Result<Vec<_>, _>>()?;
        inverse_errors.push(l2_distance(&gy, &f, tg.step()));
    }
    let wide: Vec<f64> = pg.points().collect();
    let wide_hat: Vec<f64> = fourier(entry, &wide)?.into_iter().map(|s| s.value.norm()).collect();
    let fhat_norm_sq = lp_norm_of_samples(&wide_hat, pg.step(), 2.0).powi(2);
    // Panels of width 1/4 keep the kinks of the catalog entries on panel edges.
    let sq = |t: f64| Complex64::new(entry.eval(t).powi(2), 0.0);
    let f_norm_sq = quad::truncated_integral_panels(&sq, tg.lo, tg.hi, 0.25)?.value.re;
    Ok(PlancherelReport {
        entry,
        truncations: truncations.to_vec(),
        forward_nonincreasing: forward_errors.windows(2).all(|w| w[1] <= w[0] + 1e-12),
        inverse_decreasing: inverse_errors.windows(2).all(|w| w[1] < w[0]),
        forward_errors,
        inverse_errors,
        f_norm_sq,
        fhat_norm_sq,
        parseval_gap: (f_norm_sq - fhat_norm_sq).abs(),
        time_grid: tg,
        frequency_grid: fg,
        parseval_grid: pg,
    })
}
