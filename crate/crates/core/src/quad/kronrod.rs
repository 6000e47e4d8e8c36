//! Adaptive 7/15-point Gauss–Kronrod quadrature for complex integrands.

use num_complex::Complex64;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// One 15-point Kronrod panel: returns the Kronrod value and `|K − G|`.
pub fn gk15<F: Fn(f64) -> Complex64 + ?Sized>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = half * XGK[j];
        let pair = f(center - x) + f(center + x);
        kron += pair * WGK[j];
        if j % 2 == 1 {
            gauss += pair * WG[j / 2];
        }
    }
    let k = kron * half;
    let g = gauss * half;
    (k, (k - g).norm())
}

/// Adaptive bisection driven by the Kronrod/Gauss disagreement.
#[derive(Clone, Copy, Debug)]
pub struct Adaptive {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_depth: u32,
}

impl Default for Adaptive {
    fn default() -> Self {
        Adaptive { abs_tol: 1e-13, rel_tol: 1e-12, max_depth: 48 }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct PanelSum {
    pub value: Complex64,
    pub error: f64,
    pub panels: usize,
}

impl std::ops::AddAssign for PanelSum {
    fn add_assign(&mut self, rhs: PanelSum) {
        self.value += rhs.value;
        self.error += rhs.error;
        self.panels += rhs.panels;
    }
}

impl Adaptive {
    pub fn integrate<F: Fn(f64) -> Complex64 + ?Sized>(&self, f: &F, a: f64, b: f64) -> PanelSum {
        let mut out = PanelSum::default();
        if a == b {
            return out;
        }
        let mut stack = vec![(a, b, 0u32)];
        while let Some((lo, hi, depth)) = stack.pop() {
            let (v, err) = gk15(f, lo, hi);
            let ok = err <= self.abs_tol.max(self.rel_tol * v.norm());
            if ok || depth >= self.max_depth || !err.is_finite() {
                out.value += v;
                out.error += err;
                out.panels += 1;
            } else {
                let mid = 0.5 * (lo + hi);
                stack.push((mid, hi, depth + 1));
                stack.push((lo, mid, depth + 1));
            }
        }
        out
    }

    /// Integrates over consecutive panels no longer than `max_panel`.
    pub fn integrate_panels<F: Fn(f64) -> Complex64 + ?Sized>(
        &self,
        f: &F,
        a: f64,
        b: f64,
        max_panel: f64,
    ) -> PanelSum {
        let mut out = PanelSum::default();
        if a == b {
            return out;
        }
        let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
        let n = ((hi - lo) / max_panel).ceil().max(1.0) as usize;
        let h = (hi - lo) / n as f64;
        for i in 0..n {
            let p0 = lo + i as f64 * h;
            let p1 = if i + 1 == n { hi } else { lo + (i + 1) as f64 * h };
            out += self.integrate(f, p0, p1);
        }
        out.value *= sign;
        out
    }
}
