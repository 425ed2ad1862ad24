//! Replicated detection experiments under the null and the spiked alternative.
//!
//! Every `(ω, replicate, hypothesis)` cell is an independent task with its own keyed
//! streams, and results are folded in cell order, so a report depends only on the
//! configuration and never on the number of workers.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{compute_info, InfoFunctionals, NoiseDensity};
use crate::error::{Error, Result};
use crate::lr::{loglr_exact, loglr_mc_keyed, mc_cost};
use crate::lss::{lss_test, Decision};
use crate::matrix::DataMatrix;
use crate::models::{add_spike, sample_noise, sample_spike, ModelKind, Prior, SpikedModelConfig};
use crate::pca::{outlier_location, pca_detect_with, PcaDecision, ScoreTransform, DEFAULT_DELTA};
use crate::rng::{role, StreamKey};
use crate::theory::{effective_snr, limiting_error, lss_error_sech, rho};

pub const DEFAULT_BUDGET: f64 = 1e9;
pub const MIN_NORMALITY_SAMPLES: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    LrMc,
    LrExact,
    Lss,
    Pca,
}

impl TestKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TestKind::LrMc => "lr_mc",
            TestKind::LrExact => "lr_exact",
            TestKind::Lss => "lss",
            TestKind::Pca => "pca",
        }
    }
}

impl std::str::FromStr for TestKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lr_mc" => Ok(TestKind::LrMc),
            "lr_exact" => Ok(TestKind::LrExact),
            "lss" => Ok(TestKind::Lss),
            "pca" => Ok(TestKind::Pca),
            other => Err(Error::invalid(format!(
                "unknown test `{other}` (expected lr_mc, lr_exact, lss or pca)"
            ))),
        }
    }
}

impl std::fmt::Display for TestKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hypothesis {
    H0,
    H1,
}

impl Hypothesis {
    fn index(self) -> u64 {
        match self {
            Hypothesis::H0 => 0,
            Hypothesis::H1 => 1,
        }
    }
}

fn default_budget() -> f64 {
    DEFAULT_BUDGET
}

fn default_delta() -> f64 {
    DEFAULT_DELTA
}

fn default_tests() -> Vec<TestKind> {
    vec![TestKind::LrMc]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(rename = "N")]
    pub n: usize,
    pub omega_grid: Vec<f64>,
    pub replicates: usize,
    pub n_mc: usize,
    /// `gaussian`, `sech` or `file:PATH`.
    pub density: String,
    pub model: ModelKind,
    pub prior: Prior,
    #[serde(default = "default_tests")]
    pub tests: Vec<TestKind>,
    pub master_seed: u64,
    /// Worker threads; `None` uses every available core.
    #[serde(default)]
    pub workers: Option<usize>,
    /// Constants for the theoretical curves; computed by quadrature when absent.
    #[serde(default)]
    pub theory_info: Option<InfoFunctionals>,
    /// Refuse configurations whose estimated density evaluations exceed this.
    #[serde(default = "default_budget")]
    pub budget: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
}

impl ExperimentConfig {
    /// Sech noise, Wigner model, Monte-Carlo LR only.
    pub fn new(n: usize, omega_grid: Vec<f64>, replicates: usize, n_mc: usize, prior: Prior, master_seed: u64) -> Self {
        Self {
            n,
            omega_grid,
            replicates,
            n_mc,
            density: "sech".into(),
            model: ModelKind::Wigner,
            prior,
            tests: default_tests(),
            master_seed,
            workers: None,
            theory_info: None,
            budget: DEFAULT_BUDGET,
            delta: DEFAULT_DELTA,
        }
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("N must be at least 1"));
        }
        if self.replicates == 0 {
            return Err(Error::invalid("replicates must be at least 1"));
        }
        if self.tests.is_empty() {
            return Err(Error::invalid("no tests enabled"));
        }
        if self.tests.contains(&TestKind::LrMc) && self.n_mc == 0 {
            return Err(Error::invalid("n_mc must be at least 1 for lr_mc"));
        }
        if self.tests.contains(&TestKind::LrExact) && self.prior != Prior::Rademacher {
            return Err(Error::invalid("lr_exact requires the rademacher prior"));
        }
        if let Some(w) = self.omega_grid.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::invalid(format!("omega = {w} must be finite and non-negative")));
        }
        if !(self.delta > 0.0) {
            return Err(Error::invalid(format!("delta = {} must be positive", self.delta)));
        }
        Ok(())
    }

    fn test_cost(&self, test: TestKind) -> f64 {
        let entries = match self.model {
            ModelKind::Wigner => self.n * (self.n + 1) / 2,
            ModelKind::Iid => self.n * self.n,
        } as f64;
        match test {
            TestKind::LrMc => mc_cost(self.n, self.model, self.prior, self.n_mc),
            // table construction plus one coupling update per visited spike
            TestKind::LrExact => 3.0 * entries + 2f64.powi(self.n as i32 - 1) * self.n as f64,
            TestKind::Lss | TestKind::Pca => entries,
        }
    }

    /// Estimated density evaluations for the whole sweep.
    pub fn estimated_cost(&self) -> f64 {
        let per_cell: f64 = self.tests.iter().map(|&t| self.test_cost(t)).sum();
        per_cell * 2.0 * self.replicates as f64 * self.omega_grid.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub test: TestKind,
    /// `log L̄` for the LR tests, the statistic for LSS, the top eigenvalue for PCA.
    pub statistic: Option<f64>,
    pub reject_h0: Option<bool>,
    /// Monte-Carlo standard error of `log L̄`, when applicable.
    pub stderr: Option<f64>,
    /// Set when the test could not be evaluated; the outcome is then indeterminate.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub omega: f64,
    pub replicate: usize,
    pub hypothesis: Hypothesis,
    /// Key path of the noise stream under the master seed.
    pub noise_stream: Vec<u64>,
    /// Key path of the planted spike stream, under the alternative only.
    pub spike_stream: Option<Vec<u64>>,
    pub outcomes: Vec<TestOutcome>,
}

/// Aggregated decisions for one `(ω, test)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorCell {
    pub omega: f64,
    pub test: TestKind,
    pub n_h0: usize,
    pub n_h1: usize,
    /// `P̂(reject | H0)`.
    pub type1_rate: f64,
    pub type1_se: f64,
    /// `P̂(accept | H1)`.
    pub type2_rate: f64,
    pub type2_se: f64,
    pub err_empirical: f64,
    pub err_se: f64,
    pub err_theory: Option<f64>,
    pub n_indeterminate: usize,
}

/// One row of `curves.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub omega: f64,
    pub test: TestKind,
    pub err_empirical: f64,
    pub err_se: f64,
    pub err_theory: Option<f64>,
    pub n_indeterminate: usize,
}

impl From<&ErrorCell> for CurveRow {
    fn from(c: &ErrorCell) -> Self {
        Self {
            omega: c.omega,
            test: c.test,
            err_empirical: c.err_empirical,
            err_se: c.err_se,
            err_theory: c.err_theory,
            n_indeterminate: c.n_indeterminate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalitySummary {
    pub omega: f64,
    pub test: TestKind,
    pub n_h0: usize,
    pub n_h1: usize,
    pub mean_h0: f64,
    pub var_h0: f64,
    pub mean_h1: f64,
    pub var_h1: f64,
    /// Limiting law parameter; absent when the theory does not apply.
    pub rho: Option<f64>,
    /// Kolmogorov-Smirnov distance to `N(−ρ, 2ρ)`.
    pub ks_h0: Option<f64>,
    /// Kolmogorov-Smirnov distance to `N(ρ, 2ρ)`.
    pub ks_h1: Option<f64>,
    /// All samples equal or `ρ = 0`: there is no Gaussian to compare against.
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub total_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub info: InfoFunctionals,
    /// Grid points removed because an enabled theoretical curve is undefined there.
    pub clipped: Vec<f64>,
    pub warnings: Vec<String>,
    pub estimated_cost: f64,
    pub records: Vec<ReplicateRecord>,
    pub curves: Vec<ErrorCell>,
    pub normality: Vec<NormalitySummary>,
    pub timings: Timings,
}

impl ExperimentReport {
    /// JSON of everything except timings and the worker hint, which are the only fields
    /// allowed to differ between runs of the same configuration.
    pub fn deterministic_json(&self) -> Result<String> {
        let mut copy = self.clone();
        copy.timings = Timings { total_seconds: 0.0 };
        copy.config.workers = None;
        Ok(serde_json::to_string(&copy)?)
    }

    pub fn lr_test(&self) -> Option<TestKind> {
        [TestKind::LrMc, TestKind::LrExact]
            .into_iter()
            .find(|t| self.config.tests.contains(t))
    }

    pub fn cell(&self, omega: f64, test: TestKind) -> Option<&ErrorCell> {
        self.curves.iter().find(|c| c.omega == omega && c.test == test)
    }

    /// Successful statistics of `test` at `omega` under `hypothesis`, in replicate order.
    pub fn statistics(&self, omega: f64, test: TestKind, hypothesis: Hypothesis) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.omega == omega && r.hypothesis == hypothesis)
            .flat_map(|r| r.outcomes.iter().filter(|o| o.test == test))
            .filter(|o| o.error.is_none())
            .filter_map(|o| o.statistic)
            .collect()
    }
}

/// Theoretical total error of `test` at `omega`, when a limit is known.
fn theory_error(config: &ExperimentConfig, density: &NoiseDensity, info: &InfoFunctionals, test: TestKind, omega: f64) -> Result<Option<f64>> {
    let sech_wigner = density.is_sech() && config.model == ModelKind::Wigner;
    let value = match test {
        TestKind::LrMc | TestKind::LrExact => match config.prior {
            Prior::Rademacher => rho(omega, info, config.model).and_then(limiting_error).map(Some),
            // the spherical-prior LR tracks the spectral test for sech noise
            Prior::Spherical if sech_wigner => lss_error_sech(omega).map(Some),
            Prior::Spherical => Ok(None),
        },
        TestKind::Lss if sech_wigner => lss_error_sech(omega).map(Some),
        TestKind::Lss => Ok(None),
        TestKind::Pca => {
            let s = effective_snr(omega, info.f, config.model);
            Ok(Some(if outlier_location(s) > 2.0 + config.delta { 0.0 } else { 1.0 }))
        }
    };
    match value {
        Err(Error::Domain { .. }) => Err(Error::Domain {
            quantity: "theory",
            omega,
            threshold: f64::NAN,
        }),
        other => other,
    }
}

struct Context {
    config: ExperimentConfig,
    model: SpikedModelConfig,
    transform: Option<ScoreTransform>,
}

fn run_cell(ctx: &Context, omega_index: usize, omega: f64, replicate: usize, hypothesis: Hypothesis) -> ReplicateRecord {
    let cfg = &ctx.config;
    let cell = |r: u64| {
        StreamKey::new(cfg.master_seed)
            .with(r)
            .with(omega_index as u64)
            .with(replicate as u64)
            .with(hypothesis.index())
    };
    let noise_key = cell(role::NOISE);
    let spike_key = (hypothesis == Hypothesis::H1).then(|| cell(role::SPIKE));
    let mut model = ctx.model.clone();
    model.lambda = omega;
    let data = sample_noise(&model, &mut noise_key.rng()).and_then(|noise| match &spike_key {
        Some(k) => add_spike(&noise, omega, &sample_spike(cfg.prior, cfg.n, &mut k.rng())),
        None => Ok(noise),
    });
    let outcomes = cfg
        .tests
        .iter()
        .map(|&test| match &data {
            Ok(m) => evaluate(ctx, &model, m, omega, test, &cell(role::MC_SPIKES)),
            Err(e) => failed(test, e),
        })
        .collect();
    ReplicateRecord {
        omega,
        replicate,
        hypothesis,
        noise_stream: noise_key.path().to_vec(),
        spike_stream: spike_key.map(|k| k.path().to_vec()),
        outcomes,
    }
}

fn failed(test: TestKind, e: &Error) -> TestOutcome {
    TestOutcome {
        test,
        statistic: None,
        reject_h0: None,
        stderr: None,
        error: Some(e.to_string()),
    }
}

fn evaluate(ctx: &Context, model: &SpikedModelConfig, m: &DataMatrix, omega: f64, test: TestKind, mc_key: &StreamKey) -> TestOutcome {
    let result = match test {
        TestKind::LrMc => loglr_mc_keyed(m, omega, model, ctx.config.n_mc, mc_key)
            .map(|r| (r.log_lr, r.log_lr > 0.0, Some(r.stderr_log))),
        TestKind::LrExact => loglr_exact(m, omega, model).map(|r| (r.log_lr, r.log_lr > 0.0, None)),
        TestKind::Lss => lss_test(m, omega).map(|s| (s.value, s.decision == Decision::RejectH0, None)),
        TestKind::Pca => {
            let transform = ctx.transform.as_ref().expect("transform is built when pca is enabled");
            pca_detect_with(m, transform, ctx.config.model, ctx.config.delta, Some(omega))
                .map(|d| (d.top_eigenvalue, d.decision == PcaDecision::Signal, None))
        }
    };
    match result {
        Ok((statistic, reject, stderr)) if statistic.is_finite() => TestOutcome {
            test,
            statistic: Some(statistic),
            reject_h0: Some(reject),
            stderr,
            error: None,
        },
        Ok((statistic, ..)) => failed(test, &Error::invalid(format!("statistic is not finite ({statistic})"))),
        Err(e) => failed(test, &e),
    }
}

fn binomial(successes: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let p = successes as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}

fn aggregate(records: &[ReplicateRecord], omega: f64, test: TestKind, err_theory: Option<f64>) -> ErrorCell {
    let (mut n_h0, mut n_h1, mut rejects, mut accepts, mut indeterminate) = (0, 0, 0, 0, 0);
    for r in records.iter().filter(|r| r.omega == omega) {
        for o in r.outcomes.iter().filter(|o| o.test == test) {
            match (o.reject_h0, r.hypothesis) {
                (None, _) => indeterminate += 1,
                (Some(rej), Hypothesis::H0) => {
                    n_h0 += 1;
                    rejects += usize::from(rej);
                }
                (Some(rej), Hypothesis::H1) => {
                    n_h1 += 1;
                    accepts += usize::from(!rej);
                }
            }
        }
    }
    let (type1_rate, type1_se) = binomial(rejects, n_h0);
    let (type2_rate, type2_se) = binomial(accepts, n_h1);
    ErrorCell {
        omega,
        test,
        n_h0,
        n_h1,
        type1_rate,
        type1_se,
        type2_rate,
        type2_se,
        err_empirical: type1_rate + type2_rate,
        err_se: type1_se.hypot(type2_se),
        err_theory,
        n_indeterminate: indeterminate,
    }
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// `sup |F_n − Φ((x − mean)/sd)|` over the sample.
pub fn ks_distance(sample: &[f64], mean: f64, sd: f64) -> f64 {
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let cdf = 0.5 * libm::erfc(-(x - mean) / (sd * std::f64::consts::SQRT_2));
            (cdf - i as f64 / n).abs().max(((i + 1) as f64 / n - cdf).abs())
        })
        .fold(0.0, f64::max)
}

/// Log-LR moments at `omega` against the limiting `N(∓ρ, 2ρ)` laws.
pub fn normality_summary(report: &ExperimentReport, omega: f64) -> Result<NormalitySummary> {
    let test = report
        .lr_test()
        .ok_or_else(|| Error::invalid("normality summary needs an LR test in the report"))?;
    let h0 = report.statistics(omega, test, Hypothesis::H0);
    let h1 = report.statistics(omega, test, Hypothesis::H1);
    let got = h0.len().min(h1.len());
    if got < MIN_NORMALITY_SAMPLES {
        return Err(Error::InsufficientSamples {
            got,
            need: MIN_NORMALITY_SAMPLES,
        });
    }
    let (mean_h0, var_h0) = mean_var(&h0);
    let (mean_h1, var_h1) = mean_var(&h1);
    let rho = match rho(omega, &report.info, report.config.model) {
        Ok(r) if report.config.prior == Prior::Rademacher => Some(r),
        _ => None,
    };
    let degenerate = var_h0 == 0.0 || var_h1 == 0.0 || rho.is_some_and(|r| r <= 0.0);
    let ks = |sample: &[f64], sign: f64| match rho {
        Some(r) if !degenerate => Some(ks_distance(sample, sign * r, (2.0 * r).sqrt())),
        _ => None,
    };
    Ok(NormalitySummary {
        omega,
        test,
        n_h0: h0.len(),
        n_h1: h1.len(),
        mean_h0,
        var_h0,
        mean_h1,
        var_h1,
        rho,
        ks_h0: ks(&h0, -1.0),
        ks_h1: ks(&h1, 1.0),
        degenerate,
    })
}

/// Runs the sweep. Per-replicate failures are recorded as indeterminate outcomes.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    config.validate()?;
    let density = NoiseDensity::from_spec(&config.density)?;
    let info = match config.theory_info {
        Some(info) => info,
        None => compute_info(&density, &density)?,
    };
    let mut clipped = Vec::new();
    let mut warnings = Vec::new();
    let mut grid = Vec::new();
    let mut theory = Vec::new();
    for &omega in &config.omega_grid {
        let row: Result<Vec<Option<f64>>> = config
            .tests
            .iter()
            .map(|&t| theory_error(config, &density, &info, t, omega))
            .collect();
        match row {
            Ok(values) => {
                grid.push(omega);
                theory.push(values);
            }
            Err(Error::Domain { .. }) => {
                warnings.push(format!("omega = {omega} clipped: a theoretical curve is undefined there"));
                clipped.push(omega);
            }
            Err(e) => return Err(e),
        }
    }
    let mut effective = config.clone();
    effective.omega_grid = grid.clone();
    let estimated_cost = effective.estimated_cost();
    if estimated_cost > config.budget {
        return Err(Error::BudgetExceeded {
            estimate: estimated_cost,
            ceiling: config.budget,
        });
    }
    let transform = if config.tests.contains(&TestKind::Pca) {
        Some(ScoreTransform::new(&density)?)
    } else {
        None
    };
    let ctx = Context {
        model: SpikedModelConfig::new(config.n, 0.0, config.model, config.prior, density),
        config: config.clone(),
        transform,
    };
    let tasks: Vec<(usize, f64, usize, Hypothesis)> = grid
        .iter()
        .enumerate()
        .flat_map(|(k, &w)| {
            (0..config.replicates)
                .flat_map(move |r| [Hypothesis::H0, Hypothesis::H1].map(|h| (k, w, r, h)))
        })
        .collect();
    let omega_index = |w: f64| config.omega_grid.iter().position(|&x| x == w).expect("grid point");
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    let records: Vec<ReplicateRecord> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(_, w, r, h)| run_cell(&ctx, omega_index(w), w, r, h))
            .collect()
    });
    let curves = grid
        .iter()
        .zip(&theory)
        .flat_map(|(&w, row)| {
            let records = &records;
            config.tests.iter().zip(row).map(move |(&t, &th)| aggregate(records, w, t, th))
        })
        .collect();
    let mut report = ExperimentReport {
        config: config.clone(),
        info,
        clipped,
        warnings,
        estimated_cost,
        records,
        curves,
        normality: Vec::new(),
        timings: Timings { total_seconds: 0.0 },
    };
    if report.lr_test().is_some() {
        for &w in &grid {
            match normality_summary(&report, w) {
                Ok(s) => report.normality.push(s),
                Err(Error::InsufficientSamples { .. }) => {}
                Err(e) => return Err(e),
            }
        }
    }
    report.timings.total_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Paths written by [`export`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExportPaths {
    pub report: PathBuf,
    pub curves: PathBuf,
    pub loglr_samples: PathBuf,
}

impl ExportPaths {
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        Self {
            report: dir.join("report.json"),
            curves: dir.join("curves.csv"),
            loglr_samples: dir.join("loglr_samples.csv"),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `report.json`, `curves.csv` and `loglr_samples.csv`.
pub fn export(report: &ExperimentReport, paths: &ExportPaths) -> Result<()> {
    for p in [&paths.report, &paths.curves, &paths.loglr_samples] {
        if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
    }
    let json = serde_json::to_string_pretty(report)?;
    fs::write(&paths.report, json).map_err(io_err(&paths.report))?;

    let path = &paths.curves;
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(csv_err(path))?;
    w.write_record(["omega", "test", "err_empirical", "err_se", "err_theory", "n_indeterminate"])
        .map_err(csv_err(path))?;
    for cell in &report.curves {
        w.serialize(CurveRow::from(cell)).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))?;

    let path = &paths.loglr_samples;
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(["omega", "hypothesis", "replicate", "loglr"])
        .map_err(csv_err(path))?;
    if let Some(test) = report.lr_test() {
        for r in &report.records {
            let value = r.outcomes.iter().find(|o| o.test == test).and_then(|o| o.statistic);
            if let Some(v) = value {
                let h = match r.hypothesis {
                    Hypothesis::H0 => "H0",
                    Hypothesis::H1 => "H1",
                };
                w.write_record([r.omega.to_string(), h.into(), r.replicate.to_string(), v.to_string()])
                    .map_err(csv_err(path))?;
            }
        }
    }
    w.flush().map_err(io_err(path))
}

pub fn read_curves(path: impl AsRef<Path>) -> Result<Vec<CurveRow>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize().map(|row| row.map_err(csv_err(path))).collect()
}
