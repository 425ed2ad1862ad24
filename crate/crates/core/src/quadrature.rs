//! Adaptive Gauss–Kronrod (7, 15) quadrature by interval bisection.

// node tables are quoted to full published precision
#![allow(clippy::excessive_precision)]

use crate::error::{Error, Result};

// 15-point Kronrod abscissae on [0, 1] (symmetric), with the embedded 7-point Gauss weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
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
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub max_depth: u32,
    /// Hard cap on integrand evaluations; noisy integrands otherwise bisect forever.
    pub max_evaluations: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            max_depth: 40,
            max_evaluations: 4_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    /// Sum of per-panel |K15 - G7| estimates over accepted panels.
    pub error_estimate: f64,
    pub evaluations: usize,
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, (kronrod - gauss).abs() * half)
}

/// Integrates `f` over `[a, b]`. Each panel receives a share of the absolute tolerance
/// proportional to its width; a panel that still misses its share at `max_depth` aborts
/// the integration with the achieved residual.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult> {
    if !(a < b) {
        return Err(Error::invalid(format!("quadrature bounds [{a}, {b}] are empty")));
    }
    let width = b - a;
    let mut value = 0.0;
    let mut error_estimate = 0.0;
    let mut evaluations = 0usize;
    let mut stack = vec![(a, b, 0u32)];
    while let Some((lo, hi, depth)) = stack.pop() {
        let (panel, err) = gauss_kronrod(&f, lo, hi);
        evaluations += 15;
        let share = opts.abs_tol * (hi - lo) / width;
        if !panel.is_finite() || !err.is_finite() {
            return Err(Error::QuadratureNonConvergence {
                lo,
                hi,
                residual: f64::INFINITY,
                tolerance: share,
            });
        }
        if err <= share {
            value += panel;
            error_estimate += err;
        } else if depth >= opts.max_depth || evaluations >= opts.max_evaluations {
            return Err(Error::QuadratureNonConvergence {
                lo,
                hi,
                residual: err,
                tolerance: share,
            });
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
    }
    Ok(QuadResult {
        value,
        error_estimate,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        let r = integrate(|x| x.powi(6) - 3.0 * x * x + 1.0, -1.0, 2.0, QuadOptions::default())
            .unwrap();
        let exact = (2f64.powi(7) + 1.0) / 7.0 - (8.0 + 1.0) + 3.0;
        assert!((r.value - exact).abs() < 1e-13);
    }

    #[test]
    fn gaussian_mass() {
        let f = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let r = integrate(f, -16.0, 16.0, QuadOptions::default()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-13);
    }

    #[test]
    fn reports_non_convergence() {
        let opts = QuadOptions {
            abs_tol: 1e-14,
            max_depth: 3,
            ..QuadOptions::default()
        };
        let err = integrate(|x: f64| x.abs().sqrt().recip(), -1.0, 1.0, opts).unwrap_err();
        assert!(matches!(err, Error::QuadratureNonConvergence { residual, .. } if residual > 0.0));
    }

    #[test]
    fn empty_interval_is_rejected() {
        assert!(integrate(|x| x, 1.0, 1.0, QuadOptions::default()).is_err());
    }
}
