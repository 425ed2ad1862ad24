//! Spike priors, noise ensembles and spiked observations.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::density::NoiseDensity;
use crate::error::{Error, Result};
use crate::matrix::DataMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Symmetric noise with a separate diagonal density.
    Wigner,
    /// All `N²` entries independent.
    Iid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prior {
    Rademacher,
    Spherical,
}

macro_rules! snake_enum {
    ($ty:ty { $($variant:ident => $text:literal),+ $(,)? }) => {
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok(<$ty>::$variant),)+
                    other => Err(Error::invalid(format!(
                        concat!("unknown ", stringify!($ty), " `{}`"), other
                    ))),
                }
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $(<$ty>::$variant => $text,)+ })
            }
        }
    };
}

snake_enum!(ModelKind { Wigner => "wigner", Iid => "iid" });
snake_enum!(Prior { Rademacher => "rademacher", Spherical => "spherical" });

/// A unit-norm spike vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spike {
    pub entries: Vec<f64>,
}

impl Spike {
    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    /// Rademacher spike from signs `±1`.
    pub fn from_signs(signs: &[i8]) -> Self {
        let scale = (signs.len() as f64).sqrt().recip();
        Self {
            entries: signs.iter().map(|&s| f64::from(s) * scale).collect(),
        }
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct SpikedModelConfig {
    pub n: usize,
    pub lambda: f64,
    pub kind: ModelKind,
    pub prior: Prior,
    pub off_density: NoiseDensity,
    /// Used only for the Wigner diagonal.
    pub diag_density: NoiseDensity,
    /// `N E[H_ii²]`.
    pub w2: f64,
}

impl SpikedModelConfig {
    /// Same density on and off the diagonal, `w2 = 1`.
    pub fn new(n: usize, lambda: f64, kind: ModelKind, prior: Prior, density: NoiseDensity) -> Self {
        Self {
            n,
            lambda,
            kind,
            prior,
            diag_density: density.clone(),
            off_density: density,
            w2: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("dimension N must be at least 1"));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::invalid(format!("lambda = {} must be non-negative", self.lambda)));
        }
        if !(self.w2 > 0.0) {
            return Err(Error::invalid(format!("w2 = {} must be positive", self.w2)));
        }
        Ok(())
    }
}

pub fn sample_spike<R: RngCore + ?Sized>(prior: Prior, n: usize, rng: &mut R) -> Spike {
    match prior {
        Prior::Rademacher => {
            let scale = (n as f64).sqrt().recip();
            let mut entries = Vec::with_capacity(n);
            let mut bits = 0u64;
            for i in 0..n {
                if i % 64 == 0 {
                    bits = rng.next_u64();
                }
                entries.push(if bits & 1 == 1 { scale } else { -scale });
                bits >>= 1;
            }
            Spike { entries }
        }
        Prior::Spherical => loop {
            let mut entries: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let norm = entries.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                entries.iter_mut().for_each(|x| *x /= norm);
                break Spike { entries };
            }
        },
    }
}

/// Wigner noise: the upper triangle is drawn in row-major order and mirrored.
pub fn sample_wigner<R: RngCore>(config: &SpikedModelConfig, rng: &mut R) -> Result<DataMatrix> {
    config.validate()?;
    if config.kind != ModelKind::Wigner {
        return Err(Error::invalid("sample_wigner requires kind = wigner"));
    }
    let scale = (config.n as f64).sqrt().recip();
    let diag_scale = config.w2.sqrt() * scale;
    Ok(DataMatrix::symmetric_from_fn(config.n, |i, j| {
        if i == j {
            config.diag_density.sample(rng) * diag_scale
        } else {
            config.off_density.sample(rng) * scale
        }
    }))
}

/// IID noise: all entries from the off-diagonal density, row-major.
pub fn sample_iid<R: RngCore>(config: &SpikedModelConfig, rng: &mut R) -> Result<DataMatrix> {
    config.validate()?;
    if config.kind != ModelKind::Iid {
        return Err(Error::invalid("sample_iid requires kind = iid"));
    }
    let scale = (config.n as f64).sqrt().recip();
    Ok(DataMatrix::from_fn(config.n, |_, _| config.off_density.sample(rng) * scale))
}

pub fn sample_noise<R: RngCore>(config: &SpikedModelConfig, rng: &mut R) -> Result<DataMatrix> {
    match config.kind {
        ModelKind::Wigner => sample_wigner(config, rng),
        ModelKind::Iid => sample_iid(config, rng),
    }
}

/// `noise + √λ x xᵀ`.
pub fn add_spike(noise: &DataMatrix, lambda: f64, spike: &Spike) -> Result<DataMatrix> {
    if !(lambda >= 0.0) {
        return Err(Error::invalid(format!("lambda = {lambda} must be non-negative")));
    }
    let n = noise.dim();
    if spike.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "spike of length {} for a {n}x{n} matrix",
            spike.dim()
        )));
    }
    let s = lambda.sqrt();
    let x = &spike.entries;
    let values = noise
        .as_slice()
        .iter()
        .enumerate()
        // x_i x_j first so the result stays bitwise symmetric
        .map(|(k, &v)| v + s * (x[k / n] * x[k % n]))
        .collect();
    DataMatrix::from_row_major(n, values, noise.is_symmetric())
}
