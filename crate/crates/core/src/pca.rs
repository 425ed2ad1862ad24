//! Principal-component detection after the optimal entrywise transform `q = −p'/p`.
//!
//! The transformed null matrix has entry variance `1/N` (because `E[q²] = F`), so its
//! spectrum fills `[−2, 2]` and a spike of effective strength above one produces an
//! outlier near `√s + 1/√s`.

use serde::{Deserialize, Serialize};

use crate::density::NoiseDensity;
use crate::eigen::top_eigenvalue;
use crate::error::{Error, Result};
use crate::matrix::DataMatrix;
use crate::models::ModelKind;
use crate::theory::effective_snr;

pub const DEFAULT_DELTA: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PcaDecision {
    Signal,
    NoSignal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PcaDetection {
    pub top_eigenvalue: f64,
    pub threshold: f64,
    pub decision: PcaDecision,
    pub effective_snr: Option<f64>,
}

/// The score transform of a density together with its Fisher information.
#[derive(Debug, Clone)]
pub struct ScoreTransform {
    density: NoiseDensity,
    f: f64,
}

impl ScoreTransform {
    pub fn new(density: &NoiseDensity) -> Result<Self> {
        let f = density.expectation(|x| density.score_ratio(1, x).powi(2))?;
        Ok(Self::with_fisher(density, f))
    }

    pub fn with_fisher(density: &NoiseDensity, f: f64) -> Self {
        Self {
            density: density.clone(),
            f,
        }
    }

    pub fn fisher(&self) -> f64 {
        self.f
    }

    #[inline]
    fn q(&self, x: f64) -> Result<f64> {
        let v = self.density.score(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::invalid(format!("score is not finite at {x}")))
        }
    }

    /// `q(√N M_ij) / √(NF)` entrywise.
    pub fn wigner(&self, m: &DataMatrix) -> Result<DataMatrix> {
        m.check_symmetric()?;
        let n = m.dim();
        let sqrt_n = (n as f64).sqrt();
        let scale = (n as f64 * self.f).sqrt().recip();
        let mut first_err = None;
        let out = DataMatrix::symmetric_from_fn(n, |i, j| match self.q(sqrt_n * m.get(i, j)) {
            Ok(v) => v * scale,
            Err(_) => {
                first_err.get_or_insert(Error::DensityZero {
                    row: i,
                    col: j,
                    argument: sqrt_n * m.get(i, j),
                });
                0.0
            }
        });
        first_err.map_or(Ok(out), Err)
    }

    /// `(q(√N Y_ij) + q(√N Y_ji)) / √(2NF)`, the same formula on the diagonal.
    pub fn iid(&self, y: &DataMatrix) -> Result<DataMatrix> {
        let n = y.dim();
        let sqrt_n = (n as f64).sqrt();
        let mut q = vec![0.0; n * n];
        for (k, (slot, &v)) in q.iter_mut().zip(y.as_slice()).enumerate() {
            *slot = self.q(sqrt_n * v).map_err(|_| Error::DensityZero {
                row: k / n,
                col: k % n,
                argument: sqrt_n * v,
            })?;
        }
        let scale = (2.0 * n as f64 * self.f).sqrt().recip();
        Ok(DataMatrix::symmetric_from_fn(n, |i, j| (q[i * n + j] + q[j * n + i]) * scale))
    }

    pub fn apply(&self, data: &DataMatrix, model: ModelKind) -> Result<DataMatrix> {
        match model {
            ModelKind::Wigner => self.wigner(data),
            ModelKind::Iid => self.iid(data),
        }
    }
}

pub fn transform_wigner(m: &DataMatrix, density: &NoiseDensity) -> Result<DataMatrix> {
    ScoreTransform::new(density)?.wigner(m)
}

pub fn symmetrize_transform_iid(y: &DataMatrix, density: &NoiseDensity) -> Result<DataMatrix> {
    ScoreTransform::new(density)?.iid(y)
}

/// Signal iff the top eigenvalue of the transformed matrix exceeds `2 + δ`.
pub fn pca_detect_with(
    data: &DataMatrix,
    transform: &ScoreTransform,
    model: ModelKind,
    delta: f64,
    omega: Option<f64>,
) -> Result<PcaDetection> {
    if !(delta > 0.0) {
        return Err(Error::invalid(format!("delta = {delta} must be positive")));
    }
    let top = top_eigenvalue(&transform.apply(data, model)?)?;
    let threshold = 2.0 + delta;
    Ok(PcaDetection {
        top_eigenvalue: top,
        threshold,
        decision: if top > threshold {
            PcaDecision::Signal
        } else {
            PcaDecision::NoSignal
        },
        effective_snr: omega.map(|w| effective_snr(w, transform.fisher(), model)),
    })
}

pub fn pca_detect(
    data: &DataMatrix,
    density: &NoiseDensity,
    model: ModelKind,
    delta: f64,
    omega: Option<f64>,
) -> Result<PcaDetection> {
    pca_detect_with(data, &ScoreTransform::new(density)?, model, delta, omega)
}

/// Asymptotic top eigenvalue `√s + 1/√s` for effective SNR `s > 1`, else the edge 2.
pub fn outlier_location(effective_snr: f64) -> f64 {
    if effective_snr > 1.0 {
        effective_snr.sqrt() + effective_snr.sqrt().recip()
    } else {
        2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lss::pretransform_sech;
    use crate::models::{sample_iid, sample_wigner, Prior, SpikedModelConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gaussian_transform_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cfg = SpikedModelConfig::new(9, 0.0, ModelKind::Wigner, Prior::Rademacher, NoiseDensity::gaussian());
        let m = sample_wigner(&cfg, &mut rng).unwrap();
        let t = transform_wigner(&m, &NoiseDensity::gaussian()).unwrap();
        for (a, b) in t.as_slice().iter().zip(m.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn sech_transform_is_the_lss_pretransform() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cfg = SpikedModelConfig::new(7, 0.0, ModelKind::Wigner, Prior::Rademacher, NoiseDensity::sech());
        let m = sample_wigner(&cfg, &mut rng).unwrap();
        let t = transform_wigner(&m, &NoiseDensity::sech()).unwrap();
        let l = pretransform_sech(&m).unwrap();
        for (a, b) in t.as_slice().iter().zip(l.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn iid_symmetrization_on_symmetric_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cfg = SpikedModelConfig::new(3, 0.0, ModelKind::Wigner, Prior::Rademacher, NoiseDensity::sech());
        let m = sample_wigner(&cfg, &mut rng).unwrap();
        let s = NoiseDensity::sech();
        let wig = transform_wigner(&m, &s).unwrap();
        let sym = symmetrize_transform_iid(&m, &s).unwrap();
        for (a, b) in sym.as_slice().iter().zip(wig.as_slice()) {
            assert!((a - 2f64.sqrt() * b).abs() < 1e-14);
        }
    }

    #[test]
    fn iid_output_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let cfg = SpikedModelConfig::new(6, 0.0, ModelKind::Iid, Prior::Rademacher, NoiseDensity::sech());
        let y = sample_iid(&cfg, &mut rng).unwrap();
        let t = symmetrize_transform_iid(&y, &NoiseDensity::sech()).unwrap();
        assert!(t.is_symmetric());
        t.check_symmetric().unwrap();
    }

    #[test]
    fn transformed_entries_have_unit_variance() {
        for d in [NoiseDensity::gaussian(), NoiseDensity::sech()] {
            let tr = ScoreTransform::new(&d).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let n = 100_000;
            let draws: Vec<f64> = (0..n).map(|_| d.score(d.sample(&mut rng)) / tr.fisher().sqrt()).collect();
            let m2 = draws.iter().map(|v| v * v).sum::<f64>() / n as f64;
            let m4 = draws.iter().map(|v| v.powi(4)).sum::<f64>() / n as f64;
            let se = ((m4 - m2 * m2) / n as f64).sqrt();
            assert!((m2 - 1.0).abs() < 4.0 * se, "{}: {m2}", d.name());
        }
    }

    #[test]
    fn large_delta_never_signals() {
        let x = [0.6, 0.8];
        let m = DataMatrix::symmetric_from_fn(2, |i, j| 3.0 * x[i] * x[j]);
        let r = pca_detect(&m, &NoiseDensity::gaussian(), ModelKind::Wigner, 10.0, Some(3.0)).unwrap();
        assert_eq!(r.decision, PcaDecision::NoSignal);
        assert_eq!(r.effective_snr, Some(3.0));
        assert!(pca_detect(&m, &NoiseDensity::gaussian(), ModelKind::Wigner, 0.0, None).is_err());
    }

    #[test]
    fn outlier_positions() {
        assert_eq!(outlier_location(0.5), 2.0);
        assert!((outlier_location(1.5) - 2.041_241_452_319_315).abs() < 1e-12);
        assert_eq!(outlier_location(4.0), 2.5);
    }
}
