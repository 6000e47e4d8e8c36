//! Products of γ-values as genuine iterated integrals over the product domain.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::IntegrateError;
use crate::model::{GammaFactor, Term, UnitSeries};
use crate::quad::{self, gk15, IteratedAverage, Kernel, QuadResult, RayOptions, Upper};

/// One factor `∫_L^U t^ρ (log t)^σ e^{iωt} u(t) dt` with numeric limits.
#[derive(Clone, Debug, PartialEq)]
pub struct Dimension {
    pub rho: f64,
    pub sigma: u32,
    pub orientation: i32,
    pub lower: f64,
    pub upper: Option<f64>,
    /// Unit with the bounds it was expanded against.
    pub unit: Option<(UnitSeries, f64, Option<f64>)>,
}

impl Dimension {
    pub fn new(rho: f64, sigma: u32, orientation: i32, lower: f64, upper: Option<f64>) -> Self {
        Dimension { rho, sigma, orientation, lower, upper, unit: None }
    }

    pub fn from_gamma(g: &GammaFactor, y: f64) -> Self {
        let (lo, hi) = g.bounds_at(y);
        let unit = (!g.unit.is_one()).then(|| (g.unit.clone(), lo, hi));
        Dimension { rho: g.rho.to_f64(), sigma: g.sigma, orientation: g.orientation as i32, lower: lo, upper: hi, unit }
    }

    fn unit_at(&self, t: f64) -> f64 {
        self.unit.as_ref().map_or(1.0, |(u, lo, hi)| u.eval(t, *lo, *hi))
    }

    fn integrand(&self, t: f64) -> Complex64 {
        let amp = if self.sigma == 0 && self.rho == 0.0 { 1.0 } else { t.powf(self.rho) * t.ln().powi(self.sigma as i32) };
        Complex64::from_polar(amp * self.unit_at(t), self.orientation as f64 * t)
    }

    /// The one-dimensional value from the oracle.
    pub fn value(&self) -> Result<QuadResult, IntegrateError> {
        let unit = |t: f64| self.unit_at(t);
        let mut k = Kernel::new(self.rho, self.sigma, self.orientation);
        if self.unit.is_some() {
            k = k.with_unit(&unit);
        }
        let upper = self.upper.map_or(Upper::Infinity, Upper::Finite);
        Ok(quad::osc_integral(&k, self.lower, upper)?)
    }

    fn is_ray(&self) -> bool {
        self.upper.is_none()
    }

    /// Slice boundaries of a bounded factor, and the orientation sign.
    fn bounded_cells(&self) -> (Vec<(f64, f64)>, f64) {
        let hi = self.upper.expect("bounded");
        let (lo, hi, sign) = if hi >= self.lower { (self.lower, hi, 1.0) } else { (hi, self.lower, -1.0) };
        let n = ((hi - lo) / PI).ceil().max(1.0) as usize;
        let h = (hi - lo) / n as f64;
        ((0..n).map(|k| (lo + k as f64 * h, if k + 1 == n { hi } else { lo + (k + 1) as f64 * h })).collect(), sign)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductIntegral {
    pub value: Complex64,
    pub error_bound: f64,
    /// Product of the one-dimensional oracle values.
    pub product_of_factors: Complex64,
    pub factor_error: f64,
    pub cells: usize,
}

/// Tensor Gauss–Kronrod on one cell.
fn cell(d1: &Dimension, c1: (f64, f64), d2: &Dimension, c2: (f64, f64)) -> (Complex64, f64) {
    let inner_err = std::cell::Cell::new(0.0f64);
    let (v, outer_err) = gk15(
        &|s: f64| {
            let f1 = d1.integrand(s);
            let (inner, e) = gk15(&|t: f64| d2.integrand(t), c2.0, c2.1);
            inner_err.set(inner_err.get().max(e * f1.norm()));
            f1 * inner
        },
        c1.0,
        c1.1,
    );
    (v, outer_err + inner_err.get() * (c1.1 - c1.0))
}

/// Lazily generated slices of a factor: all panels of a bounded one, or the
/// zero slices of a ray.
struct Slices<'a> {
    dim: &'a Dimension,
    cells: Vec<(f64, f64)>,
    sign: f64,
}

impl<'a> Slices<'a> {
    fn new(dim: &'a Dimension) -> Self {
        if dim.is_ray() {
            Slices { dim, cells: Vec::new(), sign: 1.0 }
        } else {
            let (cells, sign) = dim.bounded_cells();
            Slices { dim, cells, sign }
        }
    }

    /// Ensures `n` slices exist for a ray; returns how many are in play.
    fn grow(&mut self, n: usize) -> usize {
        if !self.dim.is_ray() {
            return self.cells.len();
        }
        while self.cells.len() < n {
            let start = self.cells.last().map_or(self.dim.lower, |c| c.1);
            self.cells.push((start, start + PI));
        }
        n
    }
}

/// `Π_k γ_k` computed as one iterated integral over the product domain.
///
/// Up to two factors are integrated jointly; rays are cut into zero slices
/// and the square partial sums are accelerated like the one-dimensional ray
/// path. The product of the one-dimensional values is returned alongside.
pub fn fubini_integrate(dims: &[Dimension]) -> Result<ProductIntegral, IntegrateError> {
    let mut product = Complex64::new(1.0, 0.0);
    let mut factor_error = 0.0;
    for d in dims {
        if d.is_ray() && d.rho >= -1.0 {
            return Err(IntegrateError::NotIntegrable(super::Verdict {
                integrable: false,
                reason: super::Reason::NonIntegrableNaive,
                offending: vec![],
            }));
        }
        let r = d.value()?;
        factor_error = factor_error * r.value.norm() + product.norm() * r.error_bound + factor_error * r.error_bound;
        product *= r.value;
    }
    let (value, error_bound, cells) = match dims {
        [] => (Complex64::new(1.0, 0.0), 0.0, 0),
        [d] => {
            let r = d.value()?;
            (r.value, r.error_bound, r.pieces)
        }
        [d1, d2] => joint(d1, d2)?,
        _ => return Err(IntegrateError::Dimension(format!("{} factors; joint integration supports at most 2", dims.len()))),
    };
    Ok(ProductIntegral { value, error_bound, product_of_factors: product, factor_error, cells })
}

fn joint(d1: &Dimension, d2: &Dimension) -> Result<(Complex64, f64, usize), IntegrateError> {
    if d1.upper == Some(d1.lower) || d2.upper == Some(d2.lower) {
        return Ok((Complex64::new(0.0, 0.0), 0.0, 0));
    }
    let opts = RayOptions::default();
    let mut s1 = Slices::new(d1);
    let mut s2 = Slices::new(d2);
    let sign = s1.sign * s2.sign;
    let mut done1 = 0;
    let mut done2 = 0;
    let mut partial = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    let mut count = 0;
    let any_ray = d1.is_ray() || d2.is_ray();
    let mut acc = IteratedAverage::new(opts.rounds);
    let mut quiet = 0;
    for n in 1..=opts.max_slices {
        let n1 = s1.grow(n);
        let n2 = s2.grow(n);
        // New cells: rows i ≥ done1 against all columns, then old rows against new columns.
        for i in done1..n1 {
            for j in 0..n2 {
                let (v, e) = cell(d1, s1.cells[i], d2, s2.cells[j]);
                partial += v;
                err += e;
                count += 1;
            }
        }
        for i in 0..done1 {
            for j in done2..n2 {
                let (v, e) = cell(d1, s1.cells[i], d2, s2.cells[j]);
                partial += v;
                err += e;
                count += 1;
            }
        }
        done1 = n1;
        done2 = n2;
        if !any_ray {
            return Ok((partial * sign, err, count));
        }
        acc.push(partial);
        if n >= opts.min_slices.max(opts.rounds + 3) {
            let r = acc.residual().unwrap_or(f64::INFINITY);
            quiet = if r < opts.tol { quiet + 1 } else { 0 };
            if quiet >= 2 {
                let v = acc.value().expect("window full");
                return Ok((v * sign, 4.0 * r + err + 1e-15 * partial.norm(), count));
            }
        }
    }
    Err(quad::QuadError::Tolerance {
        what: "joint slice acceleration did not settle".into(),
        achieved: acc.residual().unwrap_or(f64::INFINITY),
    }
    .into())
}

/// Integrates the γ-factors of a product term jointly at `y` and multiplies
/// by the prefactor.
pub fn fubini_term(t: &Term, y: f64) -> Result<ProductIntegral, IntegrateError> {
    let dims: Vec<Dimension> = t.gammas.iter().map(|g| Dimension::from_gamma(g, y)).collect();
    let pre = t.prefactor(y)?;
    let mut r = fubini_integrate(&dims)?;
    r.value *= pre;
    r.error_bound *= pre.norm();
    r.product_of_factors *= pre;
    r.factor_error *= pre.norm();
    Ok(r)
}
