//! Linear-spectral-statistic test for sech noise.
//!
//! The data are first passed entrywise through `√(2/N) tanh(π√N M_ij / 2)`, the optimal
//! score transform of the sech density normalized to unit entry variance. The statistic is a
//! regularized log-determinant of the transformed matrix.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::eigen::symmetric_eigenvalues;
use crate::error::{Error, Result};
use crate::matrix::DataMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    #[serde(rename = "accept_H0")]
    AcceptH0,
    #[serde(rename = "reject_H0")]
    RejectH0,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LssStatistic {
    pub value: f64,
    pub omega: f64,
    pub threshold: f64,
    pub decision: Decision,
}

fn coefficient(omega: f64) -> Result<f64> {
    let a = PI * PI * omega / 8.0;
    if !(omega >= 0.0) {
        return Err(Error::invalid(format!("omega = {omega} must be non-negative")));
    }
    if a >= 1.0 {
        return Err(Error::Domain {
            quantity: "lss statistic",
            omega,
            threshold: 8.0 / (PI * PI),
        });
    }
    Ok(a)
}

/// `M̃_ij = √(2/N) tanh(π√N M_ij / 2)`.
pub fn pretransform_sech(m: &DataMatrix) -> Result<DataMatrix> {
    m.check_symmetric()?;
    let n = m.dim() as f64;
    let (outer, inner) = ((2.0 / n).sqrt(), 0.5 * PI * n.sqrt());
    Ok(m.map(|v| outer * (inner * v).tanh()))
}

/// `−log det((1+a)I − √a M̃) + aN/2 + √a Tr M̃ + (a/2)(Tr M̃² − N)` with `a = π²ω/8`.
pub fn lss_statistic(mt: &DataMatrix, omega: f64) -> Result<f64> {
    let a = coefficient(omega)?;
    let eigenvalues = symmetric_eigenvalues(mt)?;
    let root = a.sqrt();
    let mut log_det = 0.0;
    for &lambda in &eigenvalues {
        let factor = (1.0 + a) - root * lambda;
        if !(factor > 0.0) {
            return Err(Error::NonPositiveFactor {
                eigenvalue: lambda,
                factor,
            });
        }
        log_det += factor.ln();
    }
    let n = mt.dim() as f64;
    Ok(-log_det + 0.5 * a * n + root * mt.trace() + 0.5 * a * (mt.trace_of_square() - n))
}

/// `−log(1 − π²ω/8) − 3π⁴ω²/512`.
pub fn lss_threshold(omega: f64) -> Result<f64> {
    let a = coefficient(omega)?;
    Ok(-(-a).ln_1p() - 3.0 * PI.powi(4) * omega * omega / 512.0)
}

/// Accepts the null when the statistic does not exceed the threshold.
pub fn lss_decide(value: f64, omega: f64) -> Result<LssStatistic> {
    let threshold = lss_threshold(omega)?;
    Ok(LssStatistic {
        value,
        omega,
        threshold,
        decision: if value <= threshold {
            Decision::AcceptH0
        } else {
            Decision::RejectH0
        },
    })
}

/// Transform, statistic and decision in one step.
pub fn lss_test(m: &DataMatrix, omega: f64) -> Result<LssStatistic> {
    let mt = pretransform_sech(m)?;
    lss_decide(lss_statistic(&mt, omega)?, omega)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::NoiseDensity;
    use crate::models::{sample_wigner, ModelKind, Prior, SpikedModelConfig};
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pretransform_limits() {
        let zero = DataMatrix::zeros(4, true);
        assert_eq!(pretransform_sech(&zero).unwrap(), zero);
        let big = DataMatrix::symmetric_from_fn(4, |i, j| if (i + j) % 2 == 0 { 1e3 } else { -1e3 });
        let t = pretransform_sech(&big).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expected = if (i + j) % 2 == 0 { 0.5f64.sqrt() } else { -(0.5f64.sqrt()) };
                assert!((t.get(i, j) - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_matrix_statistic() {
        let n = 6;
        let omega: f64 = 0.3;
        let a = PI * PI * omega / 8.0;
        let v = lss_statistic(&DataMatrix::zeros(n, true), omega).unwrap();
        // aN/2 cancels against −(a/2)N from the trace-square term
        assert!((v + n as f64 * a.ln_1p()).abs() < 1e-14);
    }

    #[test]
    fn omega_zero_gives_zero() {
        let m = DataMatrix::symmetric_from_fn(5, |i, j| 0.1 * (i as f64 - j as f64 * 0.3).sin());
        assert_eq!(lss_statistic(&m, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn threshold_and_boundary() {
        let t = lss_threshold(0.3).unwrap();
        assert!((t - 0.410_842_264_681_496_2).abs() < 1e-13, "{t}");
        assert_eq!(lss_decide(t, 0.3).unwrap().decision, Decision::AcceptH0);
        assert_eq!(lss_decide(t + 1.0, 0.3).unwrap().decision, Decision::RejectH0);
    }

    #[test]
    fn non_positive_factor_is_reported() {
        let m = DataMatrix::symmetric_from_fn(2, |i, j| if i == j { 5.0 } else { 0.0 });
        match lss_statistic(&m, 0.5) {
            Err(Error::NonPositiveFactor { eigenvalue, factor }) => {
                assert_eq!(eigenvalue, 5.0);
                assert!(factor <= 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn domain_check() {
        assert!(matches!(lss_threshold(0.9), Err(Error::Domain { .. })));
    }

    proptest! {
        #[test]
        fn permutation_invariance(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cfg = SpikedModelConfig::new(12, 0.0, ModelKind::Wigner, Prior::Rademacher, NoiseDensity::sech());
            let m = sample_wigner(&cfg, &mut rng).unwrap();
            let mut perm: Vec<usize> = (0..12).collect();
            perm.shuffle(&mut rng);
            let p = DataMatrix::symmetric_from_fn(12, |i, j| m.get(perm[i], perm[j]));
            let a = lss_statistic(&pretransform_sech(&m).unwrap(), 0.1).unwrap();
            let b = lss_statistic(&pretransform_sech(&p).unwrap(), 0.1).unwrap();
            prop_assert!((a - b).abs() < 1e-10);
        }
    }
}
