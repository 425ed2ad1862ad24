use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use spiked_detect::density::{check_ibp_identities, compute_info_with, GTildeConvention};
use spiked_detect::harness::{export, run_experiment, ExperimentConfig, ExportPaths, TestKind};
use spiked_detect::lr::{loglr_exact, loglr_mc_keyed};
use spiked_detect::lss::lss_test;
use spiked_detect::models::{add_spike, sample_noise, sample_spike};
use spiked_detect::pca::{pca_detect, DEFAULT_DELTA};
use spiked_detect::rng::{role, StreamKey};
use spiked_detect::sg_verify::{run_suite, Suite};
use spiked_detect::theory::{parse_grid, theory_table, write_theory_csv};
use spiked_detect::{compute_info, DataMatrix, InfoFunctionals, ModelKind, NoiseDensity, Prior, SpikedModelConfig};

const THREADS_ENV: &str = "SPIKED_DETECT_THREADS";

#[derive(Parser)]
#[command(name = "spiked-detect", version, about = "Detection of rank-one spikes in noisy symmetric and IID matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Convention {
    ScoreWeighted,
    Literal,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Mc,
}

#[derive(Subcommand)]
enum Command {
    /// Information functionals and integration-by-parts residuals of a density.
    Info {
        #[arg(long, default_value = "sech")]
        density: String,
        /// Density of the Wigner diagonal; defaults to `--density`.
        #[arg(long)]
        diag_density: Option<String>,
        #[arg(long, value_enum, default_value = "score-weighted")]
        g_tilde: Convention,
    },
    /// Draws a noise matrix, with a planted spike when `--lambda` is positive.
    Sample {
        #[arg(long, default_value = "wigner")]
        kind: ModelKind,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
        #[arg(long, default_value = "sech")]
        density: String,
        #[arg(long, default_value = "rademacher")]
        prior: Prior,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write the planted spike, one entry per line.
        #[arg(long)]
        spike_out: Option<PathBuf>,
    },
    /// Likelihood ratio of a matrix, exact or by Monte Carlo.
    Lr {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        omega: f64,
        #[arg(long, default_value = "sech")]
        density: String,
        #[arg(long, default_value = "wigner")]
        model: ModelKind,
        #[arg(long, value_enum, default_value = "mc")]
        mode: Mode,
        #[arg(long, default_value_t = 100_000)]
        n_mc: usize,
        #[arg(long, default_value = "rademacher")]
        prior: Prior,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Limiting error curves on an `ω` grid.
    Theory {
        #[arg(long, default_value = "sech")]
        density: String,
        #[arg(long, default_value = "wigner")]
        model: ModelKind,
        #[arg(long, default_value = "0:0.5:0.01")]
        omega_grid: String,
        /// Use the commonly quoted sech constants instead of quadrature.
        #[arg(long)]
        published: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Linear spectral statistic test for sech noise.
    Lss {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        omega: f64,
    },
    /// Top eigenvalue of the score-transformed matrix against `2 + δ`.
    Pca {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "sech")]
        density: String,
        #[arg(long, default_value = "wigner")]
        model: ModelKind,
        #[arg(long, default_value_t = DEFAULT_DELTA)]
        delta: f64,
        /// Reports the effective SNR for this `ω`.
        #[arg(long)]
        omega: Option<f64>,
    },
    /// Finite-N checks of the spin-glass expansion.
    Verify {
        #[arg(long)]
        suite: Suite,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replicated error-curve experiment.
    Fig2 {
        /// JSON experiment configuration; command-line flags are ignored when given.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 32)]
        n: usize,
        #[arg(long, default_value_t = 200)]
        reps: usize,
        #[arg(long, default_value_t = 10_000)]
        n_mc: usize,
        #[arg(long, default_value = "0:0.5:0.05")]
        omega: String,
        #[arg(long, default_value = "sech")]
        density: String,
        #[arg(long, default_value = "wigner")]
        model: ModelKind,
        #[arg(long, default_value = "rademacher")]
        prior: Prior,
        /// Comma-separated subset of lr_mc, lr_exact, lss, pca.
        #[arg(long, default_value = "lr_mc")]
        tests: String,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        published: bool,
        #[arg(long)]
        budget: Option<f64>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, default_value = "results")]
        out_dir: PathBuf,
    },
}

fn print_json(value: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn density(spec: &str) -> Result<NoiseDensity> {
    NoiseDensity::from_spec(spec).with_context(|| format!("loading density `{spec}`"))
}

fn read_matrix(path: &PathBuf) -> Result<DataMatrix> {
    DataMatrix::read_csv(path).with_context(|| format!("reading matrix from {}", path.display()))
}

fn info_for(d: &NoiseDensity, published: bool) -> Result<InfoFunctionals> {
    if published {
        if !d.is_sech() {
            bail!("--published is only defined for the sech density");
        }
        return Ok(InfoFunctionals::sech_published());
    }
    Ok(compute_info(d, d)?)
}

fn workers_override() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => Ok(Some(v.trim().parse().with_context(|| format!("{THREADS_ENV}={v} is not a count"))?)),
        Err(_) => Ok(None),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Info {
            density: spec,
            diag_density,
            g_tilde,
        } => {
            let d = density(&spec)?;
            let dd = match &diag_density {
                Some(s) => density(s)?,
                None => d.clone(),
            };
            let convention = match g_tilde {
                Convention::ScoreWeighted => GTildeConvention::ScoreWeighted,
                Convention::Literal => GTildeConvention::Literal,
            };
            let report = compute_info_with(&d, &dd, convention)?;
            let residuals = check_ibp_identities(&d)?;
            print_json(&json!({
                "density": d.name(),
                "F": report.info.f,
                "F_d": report.info.f_d,
                "G": report.info.g,
                "G_tilde": report.info.g_tilde,
                "I_cross": report.info.i_cross,
                "g_tilde_convention": report.convention,
                "tail_bound": report.tail_bound,
                "ibp_residuals": residuals,
                "ibp_max_residual": residuals.max(),
            }))
        }
        Command::Sample {
            kind,
            n,
            lambda,
            density: spec,
            prior,
            seed,
            out,
            spike_out,
        } => {
            let cfg = SpikedModelConfig::new(n, lambda, kind, prior, density(&spec)?);
            let key = StreamKey::new(seed).with(role::CLI);
            let noise = sample_noise(&cfg, &mut key.with(role::NOISE).rng())?;
            let spike = sample_spike(prior, n, &mut key.with(role::SPIKE).rng());
            let m = if lambda > 0.0 { add_spike(&noise, lambda, &spike)? } else { noise };
            m.write_csv(&out)?;
            if let Some(path) = spike_out {
                let text: String = spike.entries.iter().map(|v| format!("{v}\n")).collect();
                std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(())
        }
        Command::Lr {
            input,
            omega,
            density: spec,
            model,
            mode,
            n_mc,
            prior,
            seed,
        } => {
            let m = read_matrix(&input)?;
            let cfg = SpikedModelConfig::new(m.dim(), omega, model, prior, density(&spec)?);
            let result = match mode {
                Mode::Exact => loglr_exact(&m, omega, &cfg)?,
                Mode::Mc => loglr_mc_keyed(&m, omega, &cfg, n_mc, &StreamKey::new(seed).with(role::MC_SPIKES))?,
            };
            print_json(&result)
        }
        Command::Theory {
            density: spec,
            model,
            omega_grid,
            published,
            out,
        } => {
            let d = density(&spec)?;
            let info = info_for(&d, published)?;
            let rows = theory_table(&parse_grid(&omega_grid)?, &info, model, d.is_sech())?;
            match out {
                Some(path) => write_theory_csv(&path, &rows)?,
                None => print_json(&rows)?,
            }
            Ok(())
        }
        Command::Lss { input, omega } => print_json(&lss_test(&read_matrix(&input)?, omega)?),
        Command::Pca {
            input,
            density: spec,
            model,
            delta,
            omega,
        } => print_json(&pca_detect(&read_matrix(&input)?, &density(&spec)?, model, delta, omega)?),
        Command::Verify { suite, seed, out } => {
            let report = run_suite(suite, seed)?;
            for p in &report.properties {
                eprintln!(
                    "{} {}: measured {:.3e}, bound {:.3e}",
                    if p.passed { "PASS" } else { "FAIL" },
                    p.name,
                    p.measured,
                    p.bound
                );
            }
            match out {
                Some(path) => std::fs::write(&path, serde_json::to_string_pretty(&report)?)
                    .with_context(|| format!("writing {}", path.display()))?,
                None => print_json(&report)?,
            }
            if !report.passed {
                bail!("suite {suite} has failing properties");
            }
            Ok(())
        }
        Command::Fig2 {
            config,
            n,
            reps,
            n_mc,
            omega,
            density: spec,
            model,
            prior,
            tests,
            seed,
            published,
            budget,
            workers,
            out_dir,
        } => {
            let mut cfg = match config {
                Some(path) => ExperimentConfig::from_json_file(&path)
                    .with_context(|| format!("reading config {}", path.display()))?,
                None => {
                    let mut cfg = ExperimentConfig::new(n, parse_grid(&omega)?, reps, n_mc, prior, seed);
                    cfg.density = spec;
                    cfg.model = model;
                    cfg.tests = tests
                        .split(',')
                        .map(|t| t.trim().parse::<TestKind>())
                        .collect::<Result<_, _>>()?;
                    if published {
                        cfg.theory_info = Some(info_for(&density(&cfg.density)?, true)?);
                    }
                    if let Some(b) = budget {
                        cfg.budget = b;
                    }
                    cfg.workers = workers;
                    cfg
                }
            };
            if let Some(w) = workers_override()? {
                cfg.workers = Some(w);
            }
            let d = density(&cfg.density)?;
            let report = run_experiment(&cfg)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            export(&report, &ExportPaths::in_dir(&out_dir))?;
            let grid: Vec<f64> = cfg.omega_grid.iter().copied().filter(|w| !report.clipped.contains(w)).collect();
            let rows = theory_table(&grid, &report.info, cfg.model, d.is_sech())?;
            write_theory_csv(out_dir.join("theory.csv"), &rows)?;
            for c in &report.curves {
                let theory = c.err_theory.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"));
                println!(
                    "omega {:<6} {:<8} err {:.4} +/- {:.4}  theory {theory}  indeterminate {}",
                    c.omega, c.test, c.err_empirical, c.err_se, c.n_indeterminate
                );
            }
            eprintln!("wrote {} in {:.1}s", out_dir.display(), report.timings.total_seconds);
            Ok(())
        }
    }
}

fn main() -> Result<()> {
    run(Cli::parse())
}
