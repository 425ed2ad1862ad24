//! Finite-N checks of the spin-glass expansion behind the limit theorems.
//!
//! Expanding each entry's log-ratio to fourth order splits the log-LR into a quadratic
//! spin term with couplings `A`, an entry-only part `B`, and a remainder `C`. The spin part
//! `Z = 2^{−N} Σ_s exp(Σ_{i<j} A_ij s_i s_j / N)` factorizes exactly as
//! `ζ · Π_{i<j} cosh(A_ij / N)`, where `ζ` expands over even subgraphs of the complete graph
//! and, to leading order, over simple loops.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::density::{log_cosh, NoiseDensity};
use crate::error::{Error, Result};
use crate::lr::RademacherTable;
use crate::matrix::DataMatrix;
use crate::models::{add_spike, sample_iid, sample_spike, sample_wigner, ModelKind, Prior, SpikedModelConfig};
use crate::rng::{role, StreamKey};

pub const MAX_BRUTE_FORCE_N: usize = 16;
pub const MAX_EVEN_SUBGRAPH_N: usize = 5;
pub const MAX_CYCLES: f64 = 1e8;

#[derive(Debug, Clone, PartialEq)]
pub struct ABCDecomposition {
    pub a: DataMatrix,
    pub b: DataMatrix,
    pub c: DataMatrix,
    pub omega: f64,
}

/// Per-entry coefficients from the score ratios `[P1, P2, P3, P4]`.
#[inline]
fn abc_entry(p: [f64; 4], omega: f64, n: f64) -> (f64, f64, f64) {
    let [p1, p2, p3, p4] = p;
    let a = -(omega * n).sqrt() * (p1 + omega / (6.0 * n) * (p3 - 3.0 * p1 * p2 + 2.0 * p1.powi(3)));
    let b = omega / (2.0 * n) * (p2 - p1 * p1);
    let c = omega * omega / (24.0 * n * n)
        * (p4 - 3.0 * p2 * p2 - 4.0 * p1 * p3 + 12.0 * p1 * p1 * p2 - 6.0 * p1.powi(4));
    (a, b, c)
}

fn ratios(density: &NoiseDensity, x: f64, i: usize, j: usize) -> Result<[f64; 4]> {
    let r = density.score_ratios(x);
    if r.iter().all(|v| v.is_finite()) {
        Ok(r)
    } else {
        Err(Error::DensityZero {
            row: i,
            col: j,
            argument: x,
        })
    }
}

/// Wigner decomposition from the off-diagonal entries of `M`. Diagonals are zero.
pub fn compute_abc(m: &DataMatrix, omega: f64, density: &NoiseDensity) -> Result<ABCDecomposition> {
    m.check_symmetric()?;
    let n = m.dim();
    let (nf, sqrt_n) = (n as f64, (n as f64).sqrt());
    let mut coeffs = vec![(0.0, 0.0, 0.0); n * n];
    for i in 0..n {
        for j in i + 1..n {
            coeffs[i * n + j] = abc_entry(ratios(density, sqrt_n * m.get(i, j), i, j)?, omega, nf);
        }
    }
    Ok(assemble(n, &coeffs, omega))
}

/// IID decomposition: each unordered pair combines the two ordered entries.
pub fn compute_abc_iid(y: &DataMatrix, omega: f64, density: &NoiseDensity) -> Result<ABCDecomposition> {
    let n = y.dim();
    let (nf, sqrt_n) = (n as f64, (n as f64).sqrt());
    let mut coeffs = vec![(0.0, 0.0, 0.0); n * n];
    for i in 0..n {
        for j in i + 1..n {
            let (a1, b1, c1) = abc_entry(ratios(density, sqrt_n * y.get(i, j), i, j)?, omega, nf);
            let (a2, b2, c2) = abc_entry(ratios(density, sqrt_n * y.get(j, i), j, i)?, omega, nf);
            coeffs[i * n + j] = (a1 + a2, b1 + b2, c1 + c2);
        }
    }
    Ok(assemble(n, &coeffs, omega))
}

fn assemble(n: usize, coeffs: &[(f64, f64, f64)], omega: f64) -> ABCDecomposition {
    let pick = |f: fn(&(f64, f64, f64)) -> f64| {
        DataMatrix::symmetric_from_fn(n, |i, j| if i == j { 0.0 } else { f(&coeffs[i * n + j]) })
    };
    ABCDecomposition {
        a: pick(|t| t.0),
        b: pick(|t| t.1),
        c: pick(|t| t.2),
        omega,
    }
}

fn require_small(what: &'static str, n: usize, limit: usize) -> Result<()> {
    if n > limit {
        return Err(Error::EnumerationTooLarge { what, n, limit });
    }
    Ok(())
}

/// `log Z` with `Z = 2^{−N} Σ_s exp(Σ_{i<j} A_ij s_i s_j / N)`, by enumeration.
pub fn log_z_bruteforce(a: &DataMatrix) -> Result<f64> {
    let n = a.dim();
    require_small("spin partition function", n, MAX_BRUTE_FORCE_N)?;
    let scaled: Vec<f64> = a.as_slice().iter().map(|v| v / n as f64).collect();
    RademacherTable::from_couplings(n, 0.0, &scaled)?.log_average(false)
}

/// `ζ = 2^{−N} Σ_s Π_{i<j} (1 + s_i s_j tanh(A_ij / N))`, by enumeration.
pub fn zeta_bruteforce(a: &DataMatrix) -> Result<f64> {
    let n = a.dim();
    require_small("zeta", n, MAX_BRUTE_FORCE_N)?;
    let t = tanh_weights(a);
    let mut total = 0.0;
    for mask in 0u32..1 << n {
        let s = |i: usize| if mask >> i & 1 == 1 { -1.0 } else { 1.0 };
        let mut prod = 1.0;
        for i in 0..n {
            for j in i + 1..n {
                prod *= 1.0 + s(i) * s(j) * t[i * n + j];
            }
        }
        total += prod;
    }
    Ok(total / f64::from(1u32 << n))
}

fn tanh_weights(a: &DataMatrix) -> Vec<f64> {
    let n = a.dim() as f64;
    a.as_slice().iter().map(|v| (v / n).tanh()).collect()
}

/// `Σ_{i<j} log cosh(A_ij / N)`.
pub fn log_cosh_sum(a: &DataMatrix) -> f64 {
    let n = a.dim();
    let mut acc = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            acc += log_cosh(a.get(i, j) / n as f64);
        }
    }
    acc
}

/// `ζ' = Σ_{i<j} (A_ij² / 2N² − A_ij⁴ / 12N⁴)`.
pub fn zeta_prime(a: &DataMatrix) -> f64 {
    let n = a.dim();
    let nf = n as f64;
    let mut acc = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let y2 = (a.get(i, j) / nf).powi(2);
            acc += 0.5 * y2 - y2 * y2 / 12.0;
        }
    }
    acc
}

/// `Σ_Γ Π_{e∈Γ} tanh(A_e / N)` over all subgraphs with every degree even.
pub fn even_subgraph_sum(a: &DataMatrix) -> Result<f64> {
    let n = a.dim();
    require_small("even subgraph expansion", n, MAX_EVEN_SUBGRAPH_N)?;
    let t = tanh_weights(a);
    let edges: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let mut total = 0.0;
    for subset in 0u32..1 << edges.len() {
        let mut parity = 0u32;
        let mut weight = 1.0;
        for (e, &(i, j)) in edges.iter().enumerate() {
            if subset >> e & 1 == 1 {
                parity ^= (1 << i) | (1 << j);
                weight *= t[i * n + j];
            }
        }
        if parity == 0 {
            total += weight;
        }
    }
    Ok(total)
}

/// Falling factorial `N (N−1) ⋯ (N−k+1)`.
pub fn falling_factorial(n: usize, k: usize) -> f64 {
    (0..k).map(|i| (n - i) as f64).product()
}

/// Number of simple cycles of length `k` in the complete graph, `P(N, k) / 2k`.
pub fn cycle_count(n: usize, k: usize) -> f64 {
    if k < 3 || k > n {
        return 0.0;
    }
    falling_factorial(n, k) / (2 * k) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopExpansion {
    pub k_max: usize,
    /// `ξ_k` for `k = 3..=k_max`, index `k − 3`.
    pub xi: Vec<f64>,
    /// Cycles found per length, index `k − 3`.
    pub counts: Vec<u64>,
    /// `Σ_γ w(γ)²`.
    pub eta: f64,
    /// `Σ_γ log(1 + w(γ))`.
    pub log_product: f64,
}

impl LoopExpansion {
    pub fn xi(&self, k: usize) -> f64 {
        self.xi[k - 3]
    }
}

/// Enumerates simple cycles of length `3..=k_max`. Each cycle is visited once, as the
/// vertex sequence starting at its smallest vertex with the second vertex smaller than the
/// last.
pub fn loop_expansion(a: &DataMatrix, k_max: usize) -> Result<LoopExpansion> {
    let n = a.dim();
    let k_max = k_max.min(n);
    let estimate: f64 = (3..=k_max).map(|k| cycle_count(n, k)).sum();
    if estimate > MAX_CYCLES {
        return Err(Error::TooManyCycles {
            estimate,
            limit: MAX_CYCLES,
        });
    }
    let t = tanh_weights(a);
    let slots = k_max.saturating_sub(2);
    let mut out = LoopExpansion {
        k_max,
        xi: vec![0.0; slots],
        counts: vec![0; slots],
        eta: 0.0,
        log_product: 0.0,
    };
    let mut path = Vec::with_capacity(k_max);
    let mut used = vec![false; n];
    for start in 0..n {
        path.push(start);
        used[start] = true;
        extend(&t, n, k_max, &mut path, &mut used, 1.0, &mut out);
        used[start] = false;
        path.pop();
    }
    Ok(out)
}

fn extend(
    t: &[f64],
    n: usize,
    k_max: usize,
    path: &mut Vec<usize>,
    used: &mut [bool],
    weight: f64,
    out: &mut LoopExpansion,
) {
    let start = path[0];
    let last = *path.last().expect("path starts non-empty");
    for next in start + 1..n {
        if used[next] {
            continue;
        }
        let w = weight * t[last * n + next];
        let len = path.len() + 1;
        if len >= 3 && path[1] < next {
            let cycle = w * t[next * n + start];
            out.xi[len - 3] += cycle;
            out.counts[len - 3] += 1;
            out.eta += cycle * cycle;
            out.log_product += cycle.ln_1p();
        }
        if len < k_max {
            path.push(next);
            used[next] = true;
            extend(t, n, k_max, path, used, w, out);
            used[next] = false;
            path.pop();
        }
    }
}

/// `E[tanh²(A_12 / N)]` under the null, by quadrature over the entry density.
pub fn expected_tanh_sq(density: &NoiseDensity, omega: f64, n: usize) -> Result<f64> {
    let nf = n as f64;
    density.expectation(|x| {
        let (a, _, _) = abc_entry(density.score_ratios(x), omega, nf);
        (a / nf).tanh().powi(2)
    })
}

/// Exact finite-N second moment `E[ξ_k²] = P(N,k)/2k · E[tanh²(A_12/N)]^k`.
pub fn loop_second_moment(density: &NoiseDensity, omega: f64, n: usize, k: usize) -> Result<f64> {
    Ok(cycle_count(n, k) * expected_tanh_sq(density, omega, n)?.powi(k as i32))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Identity,
    Loops,
    AbcScaling,
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Suite::Identity),
            "loops" => Ok(Suite::Loops),
            "abc-scaling" => Ok(Suite::AbcScaling),
            other => Err(Error::invalid(format!(
                "unknown suite `{other}` (expected identity, loops or abc-scaling)"
            ))),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Identity => "identity",
            Suite::Loops => "loops",
            Suite::AbcScaling => "abc-scaling",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub name: String,
    pub passed: bool,
    /// Worst observed value of the checked quantity.
    pub measured: f64,
    /// The bound it is compared against.
    pub bound: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub seed: u64,
    pub passed: bool,
    pub properties: Vec<PropertyCheck>,
}

fn check(name: &str, measured: f64, bound: f64, detail: String) -> PropertyCheck {
    PropertyCheck {
        name: name.into(),
        passed: measured <= bound,
        measured,
        bound,
        detail,
    }
}

fn null_wigner(n: usize, density: &NoiseDensity, key: &StreamKey) -> Result<DataMatrix> {
    let cfg = SpikedModelConfig::new(n, 0.0, ModelKind::Wigner, Prior::Rademacher, density.clone());
    sample_wigner(&cfg, &mut key.rng())
}

/// Worst `|log Z − log ζ − Σ log cosh(A/N)|` over 100 instances with `N ∈ 3..=10`, both
/// built-in densities, `ω ∈ {0.1, 0.3}`, half of them spiked.
pub fn factorization_residual(seed: u64) -> Result<f64> {
    let base = StreamKey::new(seed).with(role::VERIFY).with(1);
    let densities = [NoiseDensity::sech(), NoiseDensity::gaussian()];
    let mut worst: f64 = 0.0;
    for inst in 0..100u64 {
        let n = 3 + (inst % 8) as usize;
        let density = &densities[(inst / 8 % 2) as usize];
        let omega = if inst / 16 % 2 == 0 { 0.1 } else { 0.3 };
        let key = base.with(inst);
        let mut m = null_wigner(n, density, &key.with(0))?;
        if inst % 2 == 1 {
            let x = sample_spike(Prior::Rademacher, n, &mut key.with(1).rng());
            m = add_spike(&m, omega, &x)?;
        }
        let abc = compute_abc(&m, omega, density)?;
        let residual = (log_z_bruteforce(&abc.a)? - zeta_bruteforce(&abc.a)?.ln() - log_cosh_sum(&abc.a)).abs();
        worst = worst.max(residual);
    }
    Ok(worst)
}

/// Worst `|ζ − Σ_Γ w(Γ)|` over ten instances for each `N ∈ {3, 4, 5}`.
pub fn even_subgraph_residual(seed: u64) -> Result<f64> {
    let base = StreamKey::new(seed).with(role::VERIFY).with(2);
    let mut worst: f64 = 0.0;
    for n in 3..=5usize {
        for rep in 0..10u64 {
            let key = base.with(n as u64).with(rep);
            // strong couplings so that every tanh weight is far from zero
            let m = null_wigner(n, &NoiseDensity::sech(), &key)?;
            let abc = compute_abc(&m, 0.5, &NoiseDensity::sech())?;
            let a = abc.a.map(|v| v * n as f64 / 2.0);
            worst = worst.max((zeta_bruteforce(&a)? - even_subgraph_sum(&a)?).abs());
        }
    }
    Ok(worst)
}

/// Outcome of the loop second-moment comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondMomentCheck {
    pub k: usize,
    pub n: usize,
    pub draws: usize,
    pub sample_mean: f64,
    pub standard_error: f64,
    pub oracle: f64,
    /// `|mean − oracle| / SE`.
    pub z_score: f64,
}

/// Sample mean of `ξ_k²` over null sech draws against the exact finite-N value.
pub fn loop_second_moment_check(
    seed: u64,
    n: usize,
    omega: f64,
    k: usize,
    draws: usize,
) -> Result<SecondMomentCheck> {
    let density = NoiseDensity::sech();
    let base = StreamKey::new(seed).with(role::VERIFY).with(3).with(k as u64);
    let mut values = Vec::with_capacity(draws);
    for d in 0..draws as u64 {
        let m = null_wigner(n, &density, &base.with(d))?;
        let abc = compute_abc(&m, omega, &density)?;
        values.push(loop_expansion(&abc.a, k)?.xi(k).powi(2));
    }
    let count = values.len() as f64;
    let mean = values.iter().sum::<f64>() / count;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1.0);
    let se = (var / count).sqrt();
    let oracle = loop_second_moment(&density, omega, n, k)?;
    Ok(SecondMomentCheck {
        k,
        n,
        draws,
        sample_mean: mean,
        standard_error: se,
        oracle,
        z_score: (mean - oracle).abs() / se,
    })
}

pub fn run_suite(suite: Suite, seed: u64) -> Result<VerifyReport> {
    let properties = match suite {
        Suite::Identity => identity_suite(seed)?,
        Suite::Loops => loops_suite(seed)?,
        Suite::AbcScaling => abc_scaling_suite(seed)?,
    };
    Ok(VerifyReport {
        suite,
        seed,
        passed: properties.iter().all(|p| p.passed),
        properties,
    })
}

fn identity_suite(seed: u64) -> Result<Vec<PropertyCheck>> {
    let mut out = vec![
        check(
            "cosh_factorization",
            factorization_residual(seed)?,
            1e-9,
            "max |log Z - log zeta - sum log cosh(A/N)| over 100 instances, N in 3..=10".into(),
        ),
        check(
            "even_subgraph_expansion",
            even_subgraph_residual(seed)?,
            1e-12,
            "max |zeta - sum over even subgraphs| for N in {3,4,5}".into(),
        ),
    ];
    // log Z − log ζ − ζ' is the quartic Taylor remainder of Σ log cosh, bounded by Σ y⁶/45
    let base = StreamKey::new(seed).with(role::VERIFY).with(4);
    let mut worst_excess: f64 = f64::NEG_INFINITY;
    for rep in 0..20u64 {
        let n = 4 + (rep % 6) as usize;
        let m = null_wigner(n, &NoiseDensity::sech(), &base.with(rep))?;
        let a = compute_abc(&m, 0.3, &NoiseDensity::sech())?.a;
        let residual = (log_z_bruteforce(&a)? - zeta_bruteforce(&a)?.ln() - zeta_prime(&a)).abs();
        let bound: f64 = a.as_slice().iter().map(|v| (v / n as f64).powi(6)).sum::<f64>() / 90.0;
        worst_excess = worst_excess.max(residual - bound);
    }
    out.push(check(
        "zeta_prime_taylor_remainder",
        worst_excess,
        1e-11,
        "max over 20 instances of |log Z - log zeta - zeta'| - sum_{i<j} (A/N)^6 / 45".into(),
    ));
    Ok(out)
}

fn loops_suite(seed: u64) -> Result<Vec<PropertyCheck>> {
    let mut out = Vec::new();
    let a4 = DataMatrix::symmetric_from_fn(4, |i, j| if i == j { 0.0 } else { 1.0 + (i * 4 + j) as f64 });
    let le = loop_expansion(&a4, 4)?;
    let count_error = (le.counts[0] as f64 - 4.0).abs() + (le.counts[1] as f64 - 3.0).abs();
    out.push(check(
        "cycle_counts_n4",
        count_error,
        0.0,
        format!("found {} triangles and {} squares, expected 4 and 3", le.counts[0], le.counts[1]),
    ));
    let density = NoiseDensity::sech();
    let omega = 0.5 / density.expectation(|x| density.score_ratio(1, x).powi(2))?;
    for k in [3usize, 4] {
        let c = loop_second_moment_check(seed, 12, omega, k, 400)?;
        out.push(check(
            &format!("loop_second_moment_k{k}"),
            c.z_score,
            3.0,
            format!(
                "mean xi_{k}^2 = {:.6e} +/- {:.2e}, exact finite-N value {:.6e}",
                c.sample_mean, c.standard_error, c.oracle
            ),
        ));
    }
    Ok(out)
}

fn abc_scaling_suite(seed: u64) -> Result<Vec<PropertyCheck>> {
    let density = NoiseDensity::sech();
    let omega = 0.3;
    let eps = 0.2;
    let base = StreamKey::new(seed).with(role::VERIFY).with(5);
    let mut out = Vec::new();
    let mut b_scaled = Vec::new();
    for n in [50usize, 100, 200] {
        let (mut max_a, mut max_b, mut max_c) = (0.0f64, 0.0f64, 0.0f64);
        for rep in 0..4u64 {
            let m = null_wigner(n, &density, &base.with(n as u64).with(rep))?;
            let abc = compute_abc(&m, omega, &density)?;
            let max_abs = |d: &DataMatrix| d.as_slice().iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            max_a = max_a.max(max_abs(&abc.a));
            max_b = max_b.max(max_abs(&abc.b));
            max_c = max_c.max(max_abs(&abc.c));
        }
        let nf = n as f64;
        out.push(check(&format!("max_abs_A_n{n}"), max_a, nf.powf(0.5 + eps), "bound N^(1/2+eps)".into()));
        out.push(check(&format!("max_abs_B_n{n}"), max_b, nf.powf(-1.0 + eps), "bound N^(-1+eps)".into()));
        out.push(check(&format!("max_abs_C_n{n}"), max_c, nf.powf(-2.0 + eps), "bound N^(-2+eps)".into()));
        b_scaled.push(max_b * nf);
    }
    let growth = b_scaled[2] / b_scaled[0];
    out.push(check(
        "N_max_abs_B_bounded",
        growth,
        2.0,
        format!("N max|B| at N = 50, 100, 200: {b_scaled:?}; ratio of last to first"),
    ));
    // the IID couplings obey the same orders
    let cfg = SpikedModelConfig::new(100, 0.0, ModelKind::Iid, Prior::Rademacher, density.clone());
    let y = sample_iid(&cfg, &mut base.with(999).rng())?;
    let abc = compute_abc_iid(&y, omega, &density)?;
    let max_b = abc.b.as_slice().iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    out.push(check("iid_max_abs_B_n100", max_b, 100f64.powf(-1.0 + eps), "bound N^(-1+eps)".into()));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, scale: f64, seed: u64) -> DataMatrix {
        let cfg = SpikedModelConfig::new(n, 0.0, ModelKind::Wigner, Prior::Rademacher, NoiseDensity::gaussian());
        sample_wigner(&cfg, &mut ChaCha8Rng::seed_from_u64(seed))
            .unwrap()
            .map(|v| v * scale)
    }

    #[test]
    fn omega_zero_vanishes() {
        let m = random_symmetric(5, 1.0, 1);
        let abc = compute_abc(&m, 0.0, &NoiseDensity::sech()).unwrap();
        for d in [&abc.a, &abc.b, &abc.c] {
            assert!(d.as_slice().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn gaussian_coefficients() {
        let n = 6;
        let m = random_symmetric(n, 1.0, 2);
        let omega: f64 = 0.4;
        let abc = compute_abc(&m, omega, &NoiseDensity::gaussian()).unwrap();
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    assert_eq!(abc.b.get(i, j), 0.0);
                    continue;
                }
                let x = (n as f64).sqrt() * m.get(i, j);
                assert!((abc.b.get(i, j) + omega / (2.0 * n as f64)).abs() < 1e-15);
                assert!(abc.c.get(i, j).abs() < 1e-13);
                assert!((abc.a.get(i, j) - (omega * n as f64).sqrt() * x).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sech_entry_matches_scalar_oracle() {
        let m = DataMatrix::symmetric_from_fn(2, |i, j| if i == j { 0.0 } else { 0.37 });
        let omega: f64 = 0.3;
        let abc = compute_abc(&m, omega, &NoiseDensity::sech()).unwrap();
        let b = std::f64::consts::FRAC_PI_2;
        let t = (b * 2f64.sqrt() * 0.37).tanh();
        let (p1, p2, p3) = (-b * t, b * b * (2.0 * t * t - 1.0), b.powi(3) * (5.0 * t - 6.0 * t.powi(3)));
        let a = -(2.0 * omega).sqrt() * (p1 + omega / 12.0 * (p3 - 3.0 * p1 * p2 + 2.0 * p1.powi(3)));
        assert!((abc.a.get(0, 1) - a).abs() < 1e-14);
        assert!((abc.b.get(0, 1) - omega / 4.0 * (p2 - p1 * p1)).abs() < 1e-15);
    }

    #[test]
    fn zero_couplings() {
        let a = DataMatrix::zeros(5, true);
        assert_eq!(log_z_bruteforce(&a).unwrap(), 0.0);
        assert_eq!(zeta_bruteforce(&a).unwrap(), 1.0);
        assert_eq!(zeta_prime(&a), 0.0);
    }

    #[test]
    fn triangle_zeta() {
        let a = random_symmetric(3, 3.0, 3);
        let t = |i, j| (a.get(i, j) / 3.0).tanh();
        let expected = 1.0 + t(0, 1) * t(0, 2) * t(1, 2);
        assert!((zeta_bruteforce(&a).unwrap() - expected).abs() < 1e-15);
        let le = loop_expansion(&a, 3).unwrap();
        assert_eq!(le.counts, vec![1]);
        assert!((le.xi(3) - t(0, 1) * t(0, 2) * t(1, 2)).abs() < 1e-15);
    }

    #[test]
    fn zeta_prime_single_entry() {
        let a_val: f64 = 0.9;
        let a = DataMatrix::symmetric_from_fn(2, |i, j| if i == j { 0.0 } else { a_val });
        let expected = a_val.powi(2) / 8.0 - a_val.powi(4) / 192.0;
        assert!((zeta_prime(&a) - expected).abs() < 1e-16);
    }

    #[test]
    fn factorization_identity() {
        for seed in 0..10 {
            let n = 3 + seed as usize % 8;
            let a = random_symmetric(n, 4.0, seed);
            let lhs = log_z_bruteforce(&a).unwrap();
            let rhs = zeta_bruteforce(&a).unwrap().ln() + log_cosh_sum(&a);
            assert!((lhs - rhs).abs() < 1e-10);
        }
    }

    #[test]
    fn even_subgraphs_match_zeta() {
        for n in 3..=5 {
            let a = random_symmetric(n, 2.0 * n as f64, n as u64);
            let diff = zeta_bruteforce(&a).unwrap() - even_subgraph_sum(&a).unwrap();
            assert!(diff.abs() < 1e-12, "n = {n}: {diff}");
        }
    }

    #[test]
    fn cycle_enumeration_counts() {
        let a = random_symmetric(7, 1.0, 9);
        let le = loop_expansion(&a, 7).unwrap();
        for k in 3..=7 {
            assert_eq!(le.counts[k - 3] as f64, cycle_count(7, k), "k = {k}");
        }
        let le = loop_expansion(&random_symmetric(4, 1.0, 1), 4).unwrap();
        assert_eq!(le.counts, vec![4, 3]);
    }

    #[test]
    fn refusals() {
        assert!(matches!(
            log_z_bruteforce(&DataMatrix::zeros(17, true)),
            Err(Error::EnumerationTooLarge { .. })
        ));
        assert!(even_subgraph_sum(&DataMatrix::zeros(6, true)).is_err());
        assert!(matches!(
            loop_expansion(&DataMatrix::zeros(40, true), 12),
            Err(Error::TooManyCycles { .. })
        ));
    }

    #[test]
    fn tanh_second_moment_limit() {
        // N · E[tanh²(A/N)] → ωF as N grows
        let s = NoiseDensity::sech();
        let f = std::f64::consts::PI.powi(2) / 8.0;
        let omega = 0.5 / f;
        let e = expected_tanh_sq(&s, omega, 10_000).unwrap();
        assert!((e * 10_000.0 - 0.5).abs() < 1e-3);
    }

    #[test]
    fn suite_names_round_trip() {
        for s in [Suite::Identity, Suite::Loops, Suite::AbcScaling] {
            assert_eq!(s.to_string().parse::<Suite>().unwrap(), s);
        }
    }
}
