//! Noise densities for the normalized matrix entries, their derivatives and samplers, and
//! the information functionals that govern the detection thresholds.
//!
//! Derivatives are exposed primarily as score ratios `p^{(s)}(x) / p(x)`. For the built-in
//! densities these are polynomials in `x` (Gaussian) or in `tanh(πx/2)` (sech), so every
//! functional of the form `E[g(P1, .., P4)]` is integrated as `g(ratios) * p`, with `p`
//! taken from `exp(log_pdf)`. Nothing is divided by a vanishing tail density.

use std::f64::consts::{FRAC_PI_2, LN_2, PI};
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rand::distr::Open01;
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadOptions};

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type SamplerFn = Arc<dyn Fn(&mut dyn RngCore) -> f64 + Send + Sync>;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const TAIL_PDF: f64 = 1e-16;
const MAX_HALF_WIDTH: f64 = 65_536.0;

#[derive(Clone)]
enum Kernel {
    Gaussian,
    Sech,
    Custom(Arc<CustomKernel>),
}

struct CustomKernel {
    pdf: RealFn,
    log_pdf: Option<RealFn>,
    derivs: [Option<RealFn>; 4],
    sampler: SamplerFn,
}

/// A smooth, even, everywhere-positive density of a normalized matrix entry.
///
/// Values are immutable after construction and cheap to clone; samplers draw from an
/// explicit RNG handle.
#[derive(Clone)]
pub struct NoiseDensity {
    name: String,
    kernel: Kernel,
    half_width: f64,
    analytic: bool,
}

impl fmt::Debug for NoiseDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NoiseDensity")
            .field("name", &self.name)
            .field("half_width", &self.half_width)
            .field("analytic_derivs", &self.analytic)
            .finish()
    }
}

/// `log cosh(y)` without overflow.
pub(crate) fn log_cosh(y: f64) -> f64 {
    let a = y.abs();
    a + (-2.0 * a).exp().ln_1p() - LN_2
}

impl NoiseDensity {
    /// Standard normal density.
    pub fn gaussian() -> Self {
        Self {
            name: "gaussian".into(),
            kernel: Kernel::Gaussian,
            half_width: 16.0,
            analytic: true,
        }
    }

    /// Hyperbolic secant density `sech(πx/2) / 2`, which has unit variance.
    pub fn sech() -> Self {
        Self {
            name: "sech".into(),
            kernel: Kernel::Sech,
            half_width: 32.0,
            analytic: true,
        }
    }

    /// Resolves `gaussian`, `sech` or `file:PATH`.
    pub fn from_spec(spec: &str) -> Result<Self> {
        match spec {
            "gaussian" | "normal" => Ok(Self::gaussian()),
            "sech" => Ok(Self::sech()),
            other => match other.strip_prefix("file:") {
                Some(path) => Self::from_table_file(path),
                None => Err(Error::invalid(format!(
                    "unknown density `{other}` (expected gaussian, sech or file:PATH)"
                ))),
            },
        }
    }

    /// Builds a density from a user-supplied pdf. Missing derivatives (any of orders 1..=4)
    /// are filled in by Richardson-extrapolated central differences.
    ///
    /// The pdf must be positive, even and normalized to within `1e-3`.
    pub fn custom(
        name: impl Into<String>,
        pdf: RealFn,
        derivs: [Option<RealFn>; 4],
        sampler: SamplerFn,
    ) -> Result<Self> {
        Self::custom_with_log(name.into(), pdf, None, derivs, sampler)
    }

    fn custom_with_log(
        name: String,
        pdf: RealFn,
        log_pdf: Option<RealFn>,
        derivs: [Option<RealFn>; 4],
        sampler: SamplerFn,
    ) -> Result<Self> {
        let reject = |reason: String| Error::InvalidDensity {
            name: name.clone(),
            reason,
        };
        let mut half_width = 1.0;
        while pdf(half_width) >= TAIL_PDF {
            half_width *= 2.0;
            if half_width > MAX_HALF_WIDTH {
                return Err(reject(format!(
                    "pdf does not decay below {TAIL_PDF:e} within |x| <= {MAX_HALF_WIDTH}"
                )));
            }
        }
        for k in 0..=256 {
            let x = half_width * k as f64 / 256.0;
            let (right, left) = (pdf(x), pdf(-x));
            if !(right > 0.0 && left > 0.0) || !right.is_finite() || !left.is_finite() {
                return Err(reject(format!("pdf is not positive and finite at ±{x}")));
            }
            if (right - left).abs() > 1e-9 * right.max(left) {
                return Err(reject(format!(
                    "pdf is not symmetric: p({x}) = {right}, p({}) = {left}",
                    -x
                )));
            }
        }
        let analytic = derivs.iter().all(Option::is_some);
        let density = Self {
            name: name.clone(),
            kernel: Kernel::Custom(Arc::new(CustomKernel {
                pdf,
                log_pdf,
                derivs,
                sampler,
            })),
            half_width,
            analytic,
        };
        let mass = integrate(|x| density.pdf(x), -half_width, half_width, density.quad_options())?;
        if (mass.value - 1.0).abs() > 1e-3 {
            return Err(reject(format!("pdf integrates to {} instead of 1", mass.value)));
        }
        Ok(density)
    }

    /// Reads a plain-text `x,pdf` table (at least 1024 rows, strictly increasing `x`,
    /// optional header) and interpolates `log pdf` with a natural cubic spline.
    pub fn from_table_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut xs = Vec::new();
        let mut ps = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split(',').map(str::trim);
            let (Some(a), Some(b)) = (fields.next(), fields.next()) else {
                return Err(Error::invalid(format!("{}:{}: expected `x,pdf`", path.display(), lineno + 1)));
            };
            match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(x), Ok(p)) => {
                    xs.push(x);
                    ps.push(p);
                }
                // header row
                _ if xs.is_empty() => continue,
                _ => {
                    return Err(Error::invalid(format!(
                        "{}:{}: cannot parse `{line}`",
                        path.display(),
                        lineno + 1
                    )))
                }
            }
        }
        Self::from_table(format!("file:{}", path.display()), &xs, &ps)
    }

    pub fn from_table(name: impl Into<String>, xs: &[f64], pdf: &[f64]) -> Result<Self> {
        let name = name.into();
        let reject = |reason: String| Error::InvalidDensity {
            name: name.clone(),
            reason,
        };
        if xs.len() != pdf.len() {
            return Err(reject("x and pdf columns differ in length".into()));
        }
        if xs.len() < 1024 {
            return Err(reject(format!("table has {} rows, at least 1024 required", xs.len())));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(reject("x column must be strictly increasing".into()));
        }
        if pdf.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
            return Err(reject("pdf column must be positive and finite".into()));
        }
        let logs: Vec<f64> = pdf.iter().map(|p| p.ln()).collect();
        let spline = Arc::new(CubicSpline::natural(xs.to_vec(), logs));
        let sampler = Arc::new(TableSampler::new(&spline));
        let log_pdf: RealFn = {
            let spline = Arc::clone(&spline);
            Arc::new(move |x| spline.eval(x))
        };
        let pdf_fn: RealFn = Arc::new(move |x| spline.eval(x).exp());
        let sampler_fn: SamplerFn = Arc::new(move |rng| sampler.sample(rng));
        Self::custom_with_log(name, pdf_fn, Some(log_pdf), [None, None, None, None], sampler_fn)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Truncation half-width `L`: the smallest power of two with `pdf(L) < 1e-16`.
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn has_analytic_derivatives(&self) -> bool {
        self.analytic
    }

    pub fn is_sech(&self) -> bool {
        matches!(self.kernel, Kernel::Sech)
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self.kernel, Kernel::Gaussian)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match &self.kernel {
            Kernel::Gaussian | Kernel::Sech => self.log_pdf(x).exp(),
            Kernel::Custom(c) => (c.pdf)(x),
        }
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        match &self.kernel {
            Kernel::Gaussian => -0.5 * x * x - LN_SQRT_2PI,
            Kernel::Sech => {
                let a = (FRAC_PI_2 * x).abs();
                -a - (-2.0 * a).exp().ln_1p()
            }
            Kernel::Custom(c) => match &c.log_pdf {
                Some(f) => f(x),
                None => (c.pdf)(x).ln(),
            },
        }
    }

    /// Score ratio `p^{(s)}(x) / p(x)` for `1 <= s <= 4`.
    pub fn score_ratio(&self, order: usize, x: f64) -> f64 {
        assert!((1..=4).contains(&order), "derivative order {order} not in 1..=4");
        match &self.kernel {
            Kernel::Gaussian => match order {
                1 => -x,
                2 => x * x - 1.0,
                3 => x * (3.0 - x * x),
                _ => {
                    let x2 = x * x;
                    x2 * x2 - 6.0 * x2 + 3.0
                }
            },
            Kernel::Sech => {
                let b = FRAC_PI_2;
                let t = (b * x).tanh();
                let t2 = t * t;
                match order {
                    1 => -b * t,
                    2 => b * b * (2.0 * t2 - 1.0),
                    3 => b.powi(3) * t * (5.0 - 6.0 * t2),
                    _ => b.powi(4) * (5.0 - 28.0 * t2 + 24.0 * t2 * t2),
                }
            }
            Kernel::Custom(c) => self.custom_deriv(c, order, x) / (c.pdf)(x),
        }
    }

    /// All four score ratios at once.
    pub fn score_ratios(&self, x: f64) -> [f64; 4] {
        match &self.kernel {
            Kernel::Sech => {
                let b = FRAC_PI_2;
                let t = (b * x).tanh();
                let t2 = t * t;
                let b2 = b * b;
                [
                    -b * t,
                    b2 * (2.0 * t2 - 1.0),
                    b2 * b * t * (5.0 - 6.0 * t2),
                    b2 * b2 * (5.0 - 28.0 * t2 + 24.0 * t2 * t2),
                ]
            }
            _ => [
                self.score_ratio(1, x),
                self.score_ratio(2, x),
                self.score_ratio(3, x),
                self.score_ratio(4, x),
            ],
        }
    }

    /// `p^{(s)}(x)`.
    pub fn deriv(&self, order: usize, x: f64) -> f64 {
        match &self.kernel {
            Kernel::Custom(c) => self.custom_deriv(c, order, x),
            _ => self.score_ratio(order, x) * self.pdf(x),
        }
    }

    /// The optimal entrywise transform `q = -p'/p`.
    pub fn score(&self, x: f64) -> f64 {
        -self.score_ratio(1, x)
    }

    fn custom_deriv(&self, c: &CustomKernel, order: usize, x: f64) -> f64 {
        assert!((1..=4).contains(&order), "derivative order {order} not in 1..=4");
        match &c.derivs[order - 1] {
            Some(f) => f(x),
            None => finite_difference(&*c.pdf, order, x),
        }
    }

    pub fn sample<R: RngCore>(&self, rng: &mut R) -> f64 {
        match &self.kernel {
            Kernel::Gaussian => rng.sample(StandardNormal),
            Kernel::Sech => {
                let u: f64 = rng.sample(Open01);
                (2.0 / PI) * (FRAC_PI_2 * u).tan().ln()
            }
            Kernel::Custom(c) => (c.sampler)(rng),
        }
    }

    pub(crate) fn quad_options(&self) -> QuadOptions {
        if self.analytic {
            QuadOptions::default()
        } else {
            // difference quotients carry ~1e-9 relative noise
            QuadOptions {
                abs_tol: 1e-8,
                max_depth: 30,
                max_evaluations: 400_000,
            }
        }
    }

    /// `E[g(X)]` for `X ~ p`, integrated over `[-L, L]`.
    pub fn expectation<G: Fn(f64) -> f64>(&self, g: G) -> Result<f64> {
        let l = self.half_width;
        Ok(integrate(|x| weighted(g(x), self.log_pdf(x)), -l, l, self.quad_options())?.value)
    }

    /// `E[g(X)]` restricted to `|X| in [L, 2L]`, used to bound the truncation error.
    fn tail_expectation<G: Fn(f64) -> f64>(&self, g: G) -> Result<f64> {
        let l = self.half_width;
        let opts = QuadOptions {
            abs_tol: 1e-14,
            ..self.quad_options()
        };
        let right = integrate(|x| weighted(g(x), self.log_pdf(x)).abs(), l, 2.0 * l, opts)?.value;
        let left = integrate(|x| weighted(g(x), self.log_pdf(x)).abs(), -2.0 * l, -l, opts)?.value;
        Ok(right + left)
    }
}

/// `g * exp(log_p)` with the exponent combined in log space when `g` is large, so that
/// polynomially growing scores never multiply an already-underflowed density.
#[inline]
fn weighted(g: f64, log_p: f64) -> f64 {
    if g == 0.0 || log_p == f64::NEG_INFINITY {
        return 0.0;
    }
    g.signum() * (g.abs().ln() + log_p).exp()
}

/// Central differences (5-point stencils) with two-level Richardson extrapolation.
/// The base step grows with the order so that round-off and truncation balance.
pub(crate) fn finite_difference(f: &dyn Fn(f64) -> f64, order: usize, x: f64) -> f64 {
    let (exponent, accuracy) = match order {
        1 => (7.0, 4),
        2 => (8.0, 4),
        3 => (7.0, 2),
        _ => (8.0, 2),
    };
    let h = f64::EPSILON.powf(1.0 / exponent) * (1.0 + x.abs());
    let stencil = |h: f64| {
        let (f2, f1, f0, g1, g2) = (f(x + 2.0 * h), f(x + h), f(x), f(x - h), f(x - 2.0 * h));
        match order {
            1 => (-f2 + 8.0 * f1 - 8.0 * g1 + g2) / (12.0 * h),
            2 => (-f2 + 16.0 * f1 - 30.0 * f0 + 16.0 * g1 - g2) / (12.0 * h * h),
            3 => (f2 - 2.0 * f1 + 2.0 * g1 - g2) / (2.0 * h * h * h),
            _ => (f2 - 4.0 * f1 + 6.0 * f0 - 4.0 * g1 + g2) / (h * h * h * h),
        }
    };
    let factor = f64::from(1u32 << accuracy);
    (factor * stencil(0.5 * h) - stencil(h)) / (factor - 1.0)
}

/// Which integral enters the spectral-test constant `G̃`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GTildeConvention {
    /// `I = ∫ p'² p'' / p²  = E[P1² P2]` in numerator and denominator.
    #[default]
    ScoreWeighted,
    /// `I = ∫ p'² p'' / p` taken literally.
    Literal,
}

/// Information functionals of the off-diagonal density `p` and diagonal density `p_d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfoFunctionals {
    /// `∫ p'^2 / p`
    pub f: f64,
    /// `∫ p_d'^2 / p_d`
    pub f_d: f64,
    /// `∫ p''^2 / p`
    pub g: f64,
    pub g_tilde: f64,
    /// The integral used for `g_tilde` under the chosen convention.
    pub i_cross: f64,
}

impl InfoFunctionals {
    pub const GAUSSIAN: Self = Self {
        f: 1.0,
        f_d: 1.0,
        g: 2.0,
        g_tilde: 2.0,
        i_cross: 2.0,
    };

    /// The sech constants in the form they are usually quoted: `F = F_d = π²/8`,
    /// `G = π⁴/4`. Quadrature gives `G = π⁴/32` for this density, so these values are
    /// kept only to reproduce previously published error curves. `G̃ = π⁴/32` and
    /// `I = π⁴/64` are exact.
    pub fn sech_published() -> Self {
        let pi2 = PI * PI;
        Self {
            f: pi2 / 8.0,
            f_d: pi2 / 8.0,
            g: pi2 * pi2 / 4.0,
            g_tilde: pi2 * pi2 / 32.0,
            i_cross: pi2 * pi2 / 64.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfoReport {
    pub info: InfoFunctionals,
    pub convention: GTildeConvention,
    /// Bound on the mass of the `F`/`G` integrands beyond `±L`.
    pub tail_bound: f64,
}

pub fn compute_info(d: &NoiseDensity, d_diag: &NoiseDensity) -> Result<InfoFunctionals> {
    Ok(compute_info_with(d, d_diag, GTildeConvention::default())?.info)
}

pub fn compute_info_with(
    d: &NoiseDensity,
    d_diag: &NoiseDensity,
    convention: GTildeConvention,
) -> Result<InfoReport> {
    let f = d.expectation(|x| d.score_ratio(1, x).powi(2))?;
    let f_d = d_diag.expectation(|x| d_diag.score_ratio(1, x).powi(2))?;
    let g = d.expectation(|x| d.score_ratio(2, x).powi(2))?;
    let i_cross = match convention {
        GTildeConvention::ScoreWeighted => {
            d.expectation(|x| d.score_ratio(1, x).powi(2) * d.score_ratio(2, x))?
        }
        GTildeConvention::Literal => {
            d.expectation(|x| d.score_ratio(1, x).powi(2) * d.score_ratio(2, x) * d.pdf(x))?
        }
    };
    let g_tilde = i_cross * i_cross / (1.5 * i_cross - f * f);
    let tail_bound = d.tail_expectation(|x| d.score_ratio(1, x).powi(2))?
        + d.tail_expectation(|x| d.score_ratio(2, x).powi(2))?;
    Ok(InfoReport {
        info: InfoFunctionals {
            f,
            f_d,
            g,
            g_tilde,
            i_cross,
        },
        convention,
        tail_bound,
    })
}

/// Residuals of the integration-by-parts identities satisfied by any admissible density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IbpResiduals {
    /// `|E[P^{(s)}]|` for `s = 1..=4`.
    pub mean_ratio: [f64; 4],
    /// `|E[P1^4] - 3/2 E[P1^2 P2]|`
    pub quartic: f64,
    /// `|E[P1^2 P2] - E[P2^2 + P1 P3]|`
    pub cross: f64,
}

impl IbpResiduals {
    pub fn max(&self) -> f64 {
        self.mean_ratio
            .iter()
            .copied()
            .chain([self.quartic, self.cross])
            .fold(0.0, f64::max)
    }
}

pub fn check_ibp_identities(d: &NoiseDensity) -> Result<IbpResiduals> {
    let mut mean_ratio = [0.0; 4];
    for (s, slot) in mean_ratio.iter_mut().enumerate() {
        *slot = d.expectation(|x| d.score_ratio(s + 1, x))?.abs();
    }
    let quartic = d.expectation(|x| d.score_ratio(1, x).powi(4))?;
    let cross = d.expectation(|x| d.score_ratio(1, x).powi(2) * d.score_ratio(2, x))?;
    let second = d.expectation(|x| {
        let r = d.score_ratios(x);
        r[1] * r[1] + r[0] * r[2]
    })?;
    Ok(IbpResiduals {
        mean_ratio,
        quartic: (quartic - 1.5 * cross).abs(),
        cross: (cross - second).abs(),
    })
}

/// Natural cubic spline through `(xs, ys)` with linear extrapolation beyond the ends.
struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    second: Vec<f64>,
}

impl CubicSpline {
    fn natural(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        let n = xs.len();
        let mut second = vec![0.0; n];
        let mut u = vec![0.0; n];
        for i in 1..n - 1 {
            let sig = (xs[i] - xs[i - 1]) / (xs[i + 1] - xs[i - 1]);
            let p = sig * second[i - 1] + 2.0;
            second[i] = (sig - 1.0) / p;
            let slope = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])
                - (ys[i] - ys[i - 1]) / (xs[i] - xs[i - 1]);
            u[i] = (6.0 * slope / (xs[i + 1] - xs[i - 1]) - sig * u[i - 1]) / p;
        }
        second[n - 1] = 0.0;
        for k in (0..n - 1).rev() {
            second[k] = second[k] * second[k + 1] + u[k];
        }
        Self { xs, ys, second }
    }

    fn end_slope(&self, left: bool) -> f64 {
        let n = self.xs.len();
        let (i, j) = if left { (0, 1) } else { (n - 2, n - 1) };
        let h = self.xs[j] - self.xs[i];
        let secant = (self.ys[j] - self.ys[i]) / h;
        if left {
            secant - h * (2.0 * self.second[i] + self.second[j]) / 6.0
        } else {
            secant + h * (self.second[i] + 2.0 * self.second[j]) / 6.0
        }
    }

    fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0] + (x - self.xs[0]) * self.end_slope(true);
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1] + (x - self.xs[n - 1]) * self.end_slope(false);
        }
        let hi = self.xs.partition_point(|&v| v < x).max(1);
        let lo = hi - 1;
        let h = self.xs[hi] - self.xs[lo];
        let a = (self.xs[hi] - x) / h;
        let b = (x - self.xs[lo]) / h;
        a * self.ys[lo]
            + b * self.ys[hi]
            + ((a * a * a - a) * self.second[lo] + (b * b * b - b) * self.second[hi]) * h * h / 6.0
    }
}

/// Inverse-CDF sampler over the table knots.
struct TableSampler {
    xs: Vec<f64>,
    cdf: Vec<f64>,
}

impl TableSampler {
    fn new(spline: &CubicSpline) -> Self {
        let xs = spline.xs.clone();
        let mut cdf = Vec::with_capacity(xs.len());
        let mut acc = 0.0;
        cdf.push(0.0);
        for w in xs.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let simpson = (spline.eval(w[0]).exp()
                + 4.0 * spline.eval(mid).exp()
                + spline.eval(w[1]).exp())
                * (w[1] - w[0])
                / 6.0;
            acc += simpson;
            cdf.push(acc);
        }
        for c in &mut cdf {
            *c /= acc;
        }
        Self { xs, cdf }
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        let u: f64 = rng.sample(Open01);
        let hi = self.cdf.partition_point(|&c| c < u).clamp(1, self.cdf.len() - 1);
        let lo = hi - 1;
        let span = self.cdf[hi] - self.cdf[lo];
        let t = if span > 0.0 { (u - self.cdf[lo]) / span } else { 0.5 };
        self.xs[lo] + t * (self.xs[hi] - self.xs[lo])
    }
}
