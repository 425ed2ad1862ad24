//! Limiting laws of the log likelihood ratio and the resulting error curves.
//!
//! Below the detection threshold the log-LR converges to `N(∓ρ, 2ρ)` under the null and
//! the alternative, so the optimal test (threshold 0) has total error `erfc(√ρ / 2)`.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::density::InfoFunctionals;
use crate::error::{Error, Result};
use crate::models::ModelKind;

/// Effective signal-to-noise ratio after the optimal entrywise transform.
pub fn effective_snr(omega: f64, f: f64, model: ModelKind) -> f64 {
    match model {
        ModelKind::Wigner => omega * f,
        ModelKind::Iid => 2.0 * omega * f,
    }
}

/// Largest admissible `ω` for the LR limit theory (exclusive).
pub fn omega_threshold(model: ModelKind, f: f64) -> f64 {
    match model {
        ModelKind::Wigner => 1.0 / f,
        ModelKind::Iid => 1.0 / (2.0 * f),
    }
}

fn check_omega(quantity: &'static str, omega: f64, threshold: f64) -> Result<()> {
    if !(omega >= 0.0) {
        return Err(Error::invalid(format!("{quantity}: omega = {omega} must be non-negative")));
    }
    if omega >= threshold {
        return Err(Error::Domain {
            quantity,
            omega,
            threshold,
        });
    }
    Ok(())
}

/// `ρ = −¼[log(1−ωF) + ω(F−2F_d) + (ω²/4)(2F²−G)]` for the Wigner model.
pub fn rho_wigner(omega: f64, info: &InfoFunctionals) -> Result<f64> {
    check_omega("rho", omega, 1.0 / info.f)
        .map(|_| rho_wigner_unchecked(omega, info))
}

fn rho_wigner_unchecked(omega: f64, info: &InfoFunctionals) -> f64 {
    let InfoFunctionals { f, f_d, g, .. } = *info;
    -0.25 * ((-omega * f).ln_1p() + omega * (f - 2.0 * f_d) + 0.25 * omega * omega * (2.0 * f * f - g))
}

/// `ρ* = −¼[log(1−2ωF) + (ω²/2)(2F²−G)]` for the IID model.
pub fn rho_iid(omega: f64, info: &InfoFunctionals) -> Result<f64> {
    check_omega("rho*", omega, 1.0 / (2.0 * info.f))?;
    let InfoFunctionals { f, g, .. } = *info;
    Ok(-0.25 * ((-2.0 * omega * f).ln_1p() + 0.5 * omega * omega * (2.0 * f * f - g)))
}

pub fn rho(omega: f64, info: &InfoFunctionals, model: ModelKind) -> Result<f64> {
    match model {
        ModelKind::Wigner => rho_wigner(omega, info),
        ModelKind::Iid => rho_iid(omega, info),
    }
}

/// `−¼[log(1−t) + t + t²/2] = Σ_{k≥3} t^k / 4k`.
fn nu_of(t: f64) -> f64 {
    -0.25 * ((-t).ln_1p() + t + 0.5 * t * t)
}

/// Partial sum `Σ_{k=3}^{terms+2} t^k / 4k`.
pub fn nu_series(t: f64, terms: usize) -> f64 {
    let mut power = t * t;
    let mut acc = 0.0;
    for k in 3..terms + 3 {
        power *= t;
        acc += power / (4.0 * k as f64);
    }
    acc
}

/// Variance parameter of the spin-glass part, `t = ωF`.
pub fn nu(omega: f64, f: f64) -> Result<f64> {
    check_omega("nu", omega, 1.0 / f)?;
    Ok(nu_of(omega * f))
}

/// IID counterpart, `t = 2ωF`.
pub fn nu_star(omega: f64, f: f64) -> Result<f64> {
    check_omega("nu*", omega, 1.0 / (2.0 * f))?;
    Ok(nu_of(2.0 * omega * f))
}

/// `erfc(√ρ / 2)`.
pub fn limiting_error(rho: f64) -> Result<f64> {
    if !(rho >= 0.0) {
        return Err(Error::invalid(format!("rho = {rho} must be non-negative")));
    }
    Ok(libm::erfc(0.5 * rho.sqrt()))
}

fn sech_a(omega: f64) -> f64 {
    PI * PI * omega / 8.0
}

/// Limiting error of the spectral test for sech noise,
/// `erfc(¼√(−log(1−a) + a))` with `a = π²ω/8`.
pub fn lss_error_sech(omega: f64) -> Result<f64> {
    check_omega("lss error", omega, 8.0 / (PI * PI))?;
    let a = sech_a(omega);
    Ok(libm::erfc(0.25 * (-(-a).ln_1p() + a).sqrt()))
}

/// Radicand `−log(1−a) + a + 7π⁴ω²/128` of the closed-form sech LR error.
pub fn sech_lr_radicand(omega: f64) -> Result<f64> {
    check_omega("sech LR radicand", omega, 8.0 / (PI * PI))?;
    let a = sech_a(omega);
    Ok(-(-a).ln_1p() + a + 7.0 * PI.powi(4) * omega * omega / 128.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitingLaw {
    pub rho: f64,
    pub model: ModelKind,
    pub omega: f64,
    pub info: InfoFunctionals,
}

impl LimitingLaw {
    pub fn new(omega: f64, info: InfoFunctionals, model: ModelKind) -> Result<Self> {
        Ok(Self {
            rho: rho(omega, &info, model)?,
            model,
            omega,
            info,
        })
    }

    /// `(mean, variance)` of the limiting log-LR under the null.
    pub fn null_moments(&self) -> (f64, f64) {
        (-self.rho, 2.0 * self.rho)
    }

    /// `(mean, variance)` under the alternative.
    pub fn alternative_moments(&self) -> (f64, f64) {
        (self.rho, 2.0 * self.rho)
    }

    pub fn error(&self) -> f64 {
        libm::erfc(0.5 * self.rho.max(0.0).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    LrWigner,
    LrIid,
    LssSech,
    LrSechClosedForm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorCurve {
    pub kind: CurveKind,
    pub omegas: Vec<f64>,
    pub values: Vec<f64>,
    /// Grid points dropped because the curve is undefined there.
    pub clipped: Vec<f64>,
}

/// Evaluates a theoretical curve on `grid`, dropping inadmissible `ω` into `clipped`.
pub fn error_curve(kind: CurveKind, grid: &[f64], info: &InfoFunctionals) -> Result<ErrorCurve> {
    let mut curve = ErrorCurve {
        kind,
        omegas: Vec::new(),
        values: Vec::new(),
        clipped: Vec::new(),
    };
    for &omega in grid {
        let value = match kind {
            CurveKind::LrWigner => rho_wigner(omega, info).and_then(limiting_error),
            CurveKind::LrIid => rho_iid(omega, info).and_then(limiting_error),
            CurveKind::LssSech => lss_error_sech(omega),
            CurveKind::LrSechClosedForm => {
                sech_lr_radicand(omega).map(|r| libm::erfc(0.25 * r.sqrt()))
            }
        };
        match value {
            Ok(v) => {
                curve.omegas.push(omega);
                curve.values.push(v);
            }
            Err(Error::Domain { .. }) => curve.clipped.push(omega),
            Err(e) => return Err(e),
        }
    }
    Ok(curve)
}

/// Parses `start:stop:step` (inclusive of `stop` up to rounding) or a comma list.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::invalid(format!("cannot parse grid `{spec}`"));
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step): (f64, f64, f64) = (
                start.trim().parse().map_err(|_| bad())?,
                stop.trim().parse().map_err(|_| bad())?,
                step.trim().parse().map_err(|_| bad())?,
            );
            if !(step > 0.0) || !(stop >= start) {
                return Err(bad());
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize;
            // rounded to 12 decimals so that 0.1 + 2·0.1 prints as 0.3
            Ok((0..=count)
                .map(|k| ((start + k as f64 * step) * 1e12).round() / 1e12)
                .collect())
        }
        [single] => single
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
            .collect(),
        _ => Err(bad()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryRow {
    pub omega: f64,
    pub rho: Option<f64>,
    pub err_lr: Option<f64>,
    pub err_lss: Option<f64>,
    pub eff_snr: f64,
}

/// One row per grid point; quantities undefined at that `ω` are left empty.
pub fn theory_table(grid: &[f64], info: &InfoFunctionals, model: ModelKind, sech: bool) -> Result<Vec<TheoryRow>> {
    grid.iter()
        .map(|&omega| {
            let rho = match rho(omega, info, model) {
                Ok(r) => Some(r),
                Err(Error::Domain { .. }) => None,
                Err(e) => return Err(e),
            };
            let err_lss = if sech && model == ModelKind::Wigner {
                lss_error_sech(omega).ok()
            } else {
                None
            };
            Ok(TheoryRow {
                omega,
                rho,
                err_lr: rho.map(|r| libm::erfc(0.5 * r.max(0.0).sqrt())),
                err_lss,
                eff_snr: effective_snr(omega, info.f, model),
            })
        })
        .collect()
}

/// Writes `omega,rho,err_lr,err_lss,eff_snr`.
pub fn write_theory_csv(path: impl AsRef<Path>, rows: &[TheoryRow]) -> Result<()> {
    let path = path.as_ref();
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["omega", "rho", "err_lr", "err_lss", "eff_snr"])
        .map_err(csv_err)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.omega.to_string(),
            opt(r.rho),
            opt(r.err_lr),
            opt(r.err_lss),
            r.eff_snr.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
