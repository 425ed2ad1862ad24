//! Likelihood ratio of the spiked alternative against pure noise.
//!
//! For an observation `M` the ratio averages, over spikes `x` drawn from the prior,
//! `Π p(√N M_ij − √(ωN) x_i x_j) / p(√N M_ij)` over the entries that carry independent
//! noise. Everything is accumulated in log space.
//!
//! With a Rademacher prior `x_i x_j = s_i s_j / N`, so every entry contributes one of two
//! precomputed log-ratios and the spike term collapses to `C + Σ_{i<j} d_ij s_i s_j`. The
//! exact average is then an Ising partition function, enumerated in Gray-code order.

use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::NoiseDensity;
use crate::error::{Error, Result};
use crate::matrix::DataMatrix;
use crate::models::{sample_spike, ModelKind, Prior, SpikedModelConfig};
use crate::rng::StreamKey;

/// Largest `N` accepted by exhaustive enumeration.
pub const MAX_EXACT_N: usize = 22;
/// Spikes per Monte-Carlo chunk; each chunk has its own random stream.
pub const MC_CHUNK: usize = 4096;
const RESYNC_INTERVAL: u64 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LrKind {
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LRResult {
    pub log_lr: f64,
    pub kind: LrKind,
    pub n_samples: u64,
    /// Standard error of the averaged ratio on the linear scale; zero when exact.
    #[serde(rename = "stderr_of_L")]
    pub stderr_of_l: f64,
    /// Delta-method standard error of `log_lr` (`stderr_of_L / L̄`), approximate.
    pub stderr_log: f64,
    pub omega: f64,
}

/// Streaming mean of `exp(v)` kept as `(max, Σ e^{v-max}, Σ e^{2(v-max)}, count)`.
///
/// `merge` is exact up to rounding and is applied in a fixed order by callers, so results
/// do not depend on how samples were partitioned among workers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogSumExp {
    max: f64,
    sum: f64,
    sum_sq: f64,
    count: u64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            sum: 0.0,
            sum_sq: 0.0,
            count: 0,
        }
    }
}

impl LogSumExp {
    #[inline]
    pub fn push(&mut self, v: f64) {
        self.count += 1;
        if v == f64::NEG_INFINITY {
            return;
        }
        if v > self.max {
            let scale = (self.max - v).exp();
            self.sum = self.sum * scale + 1.0;
            self.sum_sq = self.sum_sq * scale * scale + 1.0;
            self.max = v;
        } else {
            let e = (v - self.max).exp();
            self.sum += e;
            self.sum_sq += e * e;
        }
    }

    pub fn merge(self, other: Self) -> Self {
        if other.sum == 0.0 {
            return Self {
                count: self.count + other.count,
                ..self
            };
        }
        if self.sum == 0.0 {
            return Self {
                count: self.count + other.count,
                ..other
            };
        }
        let max = self.max.max(other.max);
        let (a, b) = ((self.max - max).exp(), (other.max - max).exp());
        Self {
            max,
            sum: self.sum * a + other.sum * b,
            sum_sq: self.sum_sq * a * a + other.sum_sq * b * b,
            count: self.count + other.count,
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// `log Σ e^v`.
    pub fn log_sum(&self) -> f64 {
        self.max + self.sum.ln()
    }

    /// `log((1/n) Σ e^v)`.
    pub fn log_mean(&self) -> f64 {
        self.log_sum() - (self.count as f64).ln()
    }

    /// Standard error of the mean of `e^v` as `(linear, relative)`. A single sample has no
    /// variance estimate and reports zero.
    pub fn stderr(&self) -> (f64, f64) {
        if self.count < 2 || self.sum == 0.0 {
            return (0.0, 0.0);
        }
        let n = self.count as f64;
        let mean = self.sum / n;
        let var = ((self.sum_sq - self.sum * mean) / (n - 1.0)).max(0.0);
        let se_scaled = (var / n).sqrt();
        ((self.max + se_scaled.ln()).exp(), se_scaled / mean)
    }
}

/// `log p(√N M_ij − shift) − log p(√N M_ij)` for every independent entry, with the base
/// values computed once.
pub struct SpikeTermEvaluator<'a> {
    n: usize,
    kind: ModelKind,
    off: &'a NoiseDensity,
    diag: &'a NoiseDensity,
    /// `1/√w2`, rescaling the Wigner diagonal to the unit-variance diagonal density.
    diag_scale: f64,
    sqrt_omega_n: f64,
    /// `√N M`, row-major.
    u: Vec<f64>,
    /// base log-density of each entry (diagonal already rescaled).
    base: Vec<f64>,
}

impl<'a> SpikeTermEvaluator<'a> {
    pub fn new(m: &DataMatrix, omega: f64, config: &'a SpikedModelConfig) -> Result<Self> {
        Self::with_densities(m, omega, config.kind, &config.off_density, &config.diag_density, config.w2)
    }

    pub fn with_densities(
        m: &DataMatrix,
        omega: f64,
        kind: ModelKind,
        off: &'a NoiseDensity,
        diag: &'a NoiseDensity,
        w2: f64,
    ) -> Result<Self> {
        if !(omega >= 0.0) || !omega.is_finite() {
            return Err(Error::invalid(format!("omega = {omega} must be finite and non-negative")));
        }
        if !(w2 > 0.0) {
            return Err(Error::invalid(format!("w2 = {w2} must be positive")));
        }
        if kind == ModelKind::Wigner {
            m.check_symmetric()?;
        }
        let n = m.dim();
        let sqrt_n = (n as f64).sqrt();
        let u: Vec<f64> = m.as_slice().iter().map(|v| sqrt_n * v).collect();
        let mut ev = Self {
            n,
            kind,
            off,
            diag,
            diag_scale: w2.sqrt().recip(),
            sqrt_omega_n: (omega * n as f64).sqrt(),
            u,
            base: vec![0.0; n * n],
        };
        for i in 0..n {
            for j in ev.columns(i) {
                let v = ev.log_density(i, j, 0.0)?;
                ev.base[i * n + j] = v;
            }
        }
        Ok(ev)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Columns carrying independent noise in row `i`.
    #[inline]
    fn columns(&self, i: usize) -> std::ops::Range<usize> {
        match self.kind {
            ModelKind::Wigner => i..self.n,
            ModelKind::Iid => 0..self.n,
        }
    }

    #[inline]
    fn log_density(&self, i: usize, j: usize, shift: f64) -> Result<f64> {
        let arg = self.u[i * self.n + j] - shift;
        let v = if i == j && self.kind == ModelKind::Wigner {
            self.diag.log_pdf(arg * self.diag_scale)
        } else {
            self.off.log_pdf(arg)
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::DensityZero {
                row: i,
                col: j,
                argument: arg,
            })
        }
    }

    /// Number of density evaluations per spike.
    pub fn entries(&self) -> usize {
        match self.kind {
            ModelKind::Wigner => self.n * (self.n + 1) / 2,
            ModelKind::Iid => self.n * self.n,
        }
    }

    /// `log ℒ` for one spike.
    pub fn term(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "spike of length {} for N = {}",
                x.len(),
                self.n
            )));
        }
        let mut acc = 0.0;
        for i in 0..self.n {
            let row = self.sqrt_omega_n * x[i];
            for j in self.columns(i) {
                acc += self.log_density(i, j, row * x[j])? - self.base[i * self.n + j];
            }
        }
        Ok(acc)
    }

    /// Collapses the per-entry ratios for sign spikes into `C + Σ_{i<j} d_ij s_i s_j`.
    pub fn rademacher_table(&self) -> Result<RademacherTable> {
        let n = self.n;
        let v = self.sqrt_omega_n / n as f64;
        let mut constant = 0.0;
        let mut coupling = vec![0.0; n * n];
        for i in 0..n {
            for j in self.columns(i) {
                let b = self.base[i * n + j];
                let plus = self.log_density(i, j, v)? - b;
                if i == j {
                    constant += plus;
                    continue;
                }
                let minus = self.log_density(i, j, -v)? - b;
                constant += 0.5 * (plus + minus);
                let (a, c) = (i.min(j), i.max(j));
                coupling[a * n + c] += 0.5 * (plus - minus);
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                coupling[j * n + i] = coupling[i * n + j];
            }
        }
        Ok(RademacherTable {
            n,
            constant,
            coupling,
        })
    }
}

/// `log ℒ(s) = constant + Σ_{i<j} coupling_ij s_i s_j` for `s ∈ {±1}^N`.
#[derive(Debug, Clone, PartialEq)]
pub struct RademacherTable {
    n: usize,
    pub constant: f64,
    /// Symmetric with zero diagonal.
    coupling: Vec<f64>,
}

impl RademacherTable {
    /// Couplings are read from the strict upper triangle of the row-major `n × n` slice.
    pub fn from_couplings(n: usize, constant: f64, upper: &[f64]) -> Result<Self> {
        if upper.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "{} couplings for N = {n}",
                upper.len()
            )));
        }
        let mut coupling = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                coupling[i * n + j] = upper[i * n + j];
                coupling[j * n + i] = upper[i * n + j];
            }
        }
        Ok(Self {
            n,
            constant,
            coupling,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.coupling[i * self.n + j]
    }

    #[inline]
    pub fn term(&self, s: &[f64]) -> f64 {
        let n = self.n;
        let mut acc = 0.0;
        for i in 0..n {
            let row = &self.coupling[i * n + i + 1..(i + 1) * n];
            let inner: f64 = row.iter().zip(&s[i + 1..]).map(|(d, sj)| d * sj).sum();
            acc += s[i] * inner;
        }
        self.constant + acc
    }

    fn local_fields(&self, s: &[f64], h: &mut [f64]) -> f64 {
        let n = self.n;
        let mut energy = 0.0;
        for i in 0..n {
            let row = &self.coupling[i * n..(i + 1) * n];
            h[i] = row.iter().zip(s).map(|(d, sj)| d * sj).sum();
            energy += s[i] * h[i];
        }
        0.5 * energy
    }

    /// Exact `log((1/2^N) Σ_s exp(log ℒ(s)))`. With `use_symmetry` only spikes with
    /// `s_1 = +1` are visited; the term is invariant under `s → −s`, so this is exact.
    pub fn log_average(&self, use_symmetry: bool) -> Result<f64> {
        let n = self.n;
        if n > MAX_EXACT_N {
            return Err(Error::EnumerationTooLarge {
                what: "exact likelihood ratio",
                n,
                limit: MAX_EXACT_N,
            });
        }
        if n == 0 {
            return Ok(0.0);
        }
        let first_free = usize::from(use_symmetry);
        let free = n - first_free;
        let mut s = vec![1.0; n];
        let mut h = vec![0.0; n];
        let mut energy = self.local_fields(&s, &mut h);
        let mut acc = LogSumExp::default();
        acc.push(energy);
        let steps: u64 = 1 << free;
        for t in 1..steps {
            let k = first_free + t.trailing_zeros() as usize;
            let sk = s[k];
            energy -= 2.0 * sk * h[k];
            let row = &self.coupling[k * n..(k + 1) * n];
            for (hj, d) in h.iter_mut().zip(row) {
                *hj -= 2.0 * d * sk;
            }
            s[k] = -sk;
            if t % RESYNC_INTERVAL == 0 {
                energy = self.local_fields(&s, &mut h);
            }
            acc.push(energy);
        }
        Ok(self.constant + acc.log_mean())
    }
}

/// `Σ_{i≤j} [log p(√N M_ij − √(ωN) x_i x_j) − log p(√N M_ij)]`, diagonal under `p_d`.
pub fn loglr_spike_term_wigner(
    m: &DataMatrix,
    omega: f64,
    spike: &[f64],
    off: &NoiseDensity,
    diag: &NoiseDensity,
) -> Result<f64> {
    SpikeTermEvaluator::with_densities(m, omega, ModelKind::Wigner, off, diag, 1.0)?.term(spike)
}

/// The same sum over all ordered pairs `(i, j)` with a single density.
pub fn loglr_spike_term_iid(m: &DataMatrix, omega: f64, spike: &[f64], density: &NoiseDensity) -> Result<f64> {
    SpikeTermEvaluator::with_densities(m, omega, ModelKind::Iid, density, density, 1.0)?.term(spike)
}

/// Exact likelihood ratio under the Rademacher prior by enumeration of all `2^N` spikes.
pub fn loglr_exact(m: &DataMatrix, omega: f64, config: &SpikedModelConfig) -> Result<LRResult> {
    if config.prior != Prior::Rademacher {
        return Err(Error::invalid("exact enumeration requires the rademacher prior"));
    }
    let n = m.dim();
    if n > MAX_EXACT_N {
        return Err(Error::EnumerationTooLarge {
            what: "exact likelihood ratio",
            n,
            limit: MAX_EXACT_N,
        });
    }
    let table = SpikeTermEvaluator::new(m, omega, config)?.rademacher_table()?;
    Ok(LRResult {
        log_lr: table.log_average(true)?,
        kind: LrKind::Exact,
        n_samples: 1u64 << n,
        stderr_of_l: 0.0,
        stderr_log: 0.0,
        omega,
    })
}

/// Monte-Carlo average over `n_mc` prior spikes. The stream for chunk `c` of
/// [`MC_CHUNK`] spikes is `key.with(c)`, so the estimate is reproducible for any thread
/// count.
pub fn loglr_mc_keyed(
    m: &DataMatrix,
    omega: f64,
    config: &SpikedModelConfig,
    n_mc: usize,
    key: &StreamKey,
) -> Result<LRResult> {
    if n_mc == 0 {
        return Err(Error::invalid("n_mc must be at least 1"));
    }
    let ev = SpikeTermEvaluator::new(m, omega, config)?;
    let n = ev.dim();
    let chunks = n_mc.div_ceil(MC_CHUNK);
    let chunk_len = |c: usize| MC_CHUNK.min(n_mc - c * MC_CHUNK);
    let partials: Vec<Result<LogSumExp>> = match config.prior {
        Prior::Rademacher => {
            let table = ev.rademacher_table()?;
            (0..chunks)
                .into_par_iter()
                .map(|c| {
                    let mut rng = key.with(c as u64).rng();
                    let mut s = vec![0.0; n];
                    let mut acc = LogSumExp::default();
                    for _ in 0..chunk_len(c) {
                        fill_signs(&mut rng, &mut s);
                        acc.push(table.term(&s));
                    }
                    Ok(acc)
                })
                .collect()
        }
        Prior::Spherical => (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = key.with(c as u64).rng();
                let mut acc = LogSumExp::default();
                for _ in 0..chunk_len(c) {
                    let x = sample_spike(Prior::Spherical, n, &mut rng);
                    acc.push(ev.term(&x.entries)?);
                }
                Ok(acc)
            })
            .collect(),
    };
    let mut acc = LogSumExp::default();
    for p in partials {
        acc = acc.merge(p?);
    }
    let (stderr_of_l, stderr_log) = acc.stderr();
    Ok(LRResult {
        log_lr: acc.log_mean(),
        kind: LrKind::MonteCarlo,
        n_samples: n_mc as u64,
        stderr_of_l,
        stderr_log,
        omega,
    })
}

/// [`loglr_mc_keyed`] with the stream family seeded from `rng`.
pub fn loglr_mc<R: RngCore>(
    m: &DataMatrix,
    omega: f64,
    config: &SpikedModelConfig,
    n_mc: usize,
    rng: &mut R,
) -> Result<LRResult> {
    let key = StreamKey::new(rng.random());
    loglr_mc_keyed(m, omega, config, n_mc, &key)
}

fn fill_signs<R: RngCore>(rng: &mut R, s: &mut [f64]) {
    let mut bits = 0u64;
    for (i, v) in s.iter_mut().enumerate() {
        if i % 64 == 0 {
            bits = rng.next_u64();
        }
        *v = if bits & 1 == 1 { 1.0 } else { -1.0 };
        bits >>= 1;
    }
}

/// Density evaluations needed by one Monte-Carlo likelihood ratio.
pub fn mc_cost(n: usize, kind: ModelKind, prior: Prior, n_mc: usize) -> f64 {
    let entries = match kind {
        ModelKind::Wigner => n * (n + 1) / 2,
        ModelKind::Iid => n * n,
    } as f64;
    match prior {
        Prior::Rademacher => 3.0 * entries,
        Prior::Spherical => (n_mc as f64 + 1.0) * entries,
    }
}
