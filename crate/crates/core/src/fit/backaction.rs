use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{least_squares, Dataset, FitError, FitResult, LmOptions, ResidualMode};
use crate::device::DeviceParams;

/// Required detuning coverage on each side of the sideband, in linewidths.
pub const MIN_DETUNING_SPAN: f64 = 2.0;

/// One point of a backaction sweep. `n_d` overrides the sweep-wide photon
/// number for this point (a fixed-power sweep changes n_d with δ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackactionPoint {
    pub delta: f64,
    pub omega_m_eff: f64,
    pub gamma_m_eff: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_d: Option<f64>,
}

/// Which observables enter the fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackactionMode {
    #[default]
    Both,
    ShiftOnly,
    DampingOnly,
}

/// Fits the spring shift and backaction damping of a detuning sweep with a
/// single shared coupling, holding κ, Ωm and Γm of `params` fixed.
///
/// Point i is modelled with g_i² = g²·n_i/n_d. Estimates: `g` (at `n_d`),
/// `g_squared`, `g0` = g/√n_d and `cavity_pull` = g0/x_zp (magnitude, rad/s
/// per m). Shift and damping residuals are both in rad/s and weighted equally.
pub fn fit_backaction(
    sweep: &[BackactionPoint],
    params: &DeviceParams,
    n_d: f64,
    mode: BackactionMode,
) -> Result<FitResult, FitError> {
    if sweep.len() < 2 {
        return Err(FitError::InsufficientPoints {
            needed: 2,
            got: sweep.len(),
        });
    }
    if !(n_d.is_finite() && n_d > 0.0) {
        return Err(FitError::InvalidData(format!("reference photon number must be positive, got {n_d}")));
    }
    let kappa = params.kappa();
    let (lo, hi) = sweep
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.delta), b.max(p.delta)));
    let covered = (-lo).min(hi) / kappa;
    if !(covered >= MIN_DETUNING_SPAN) {
        return Err(FitError::InsufficientSpan {
            span_widths: covered,
            needed: MIN_DETUNING_SPAN,
        });
    }

    // per unit of u = g²/κ², each observable is linear: value − bare = u·slope
    let mut slopes = Vec::new();
    let mut targets = Vec::new();
    for p in sweep {
        let n = p.n_d.unwrap_or(n_d);
        let values = [p.delta, p.omega_m_eff, p.gamma_m_eff, n];
        if values.iter().any(|v| !v.is_finite()) || n < 0.0 {
            return Err(FitError::InvalidData(format!("bad sweep point at delta = {}", p.delta)));
        }
        let lorentz = 4.0 * kappa * kappa * (n / n_d) / (kappa * kappa + 4.0 * p.delta * p.delta);
        if mode != BackactionMode::DampingOnly {
            slopes.push(lorentz * p.delta / kappa);
            targets.push((p.omega_m_eff - params.omega_m()) / kappa);
        }
        if mode != BackactionMode::ShiftOnly {
            slopes.push(lorentz);
            targets.push((p.gamma_m_eff - params.gamma_m()) / kappa);
        }
    }
    let index: Vec<f64> = (0..slopes.len()).map(|i| i as f64).collect();
    let data = Dataset::real(index, targets)?;
    let model = |x: f64, q: &[f64]| Complex64::new(q[0] * slopes[x as usize], 0.0);
    let raw = least_squares(
        "backaction",
        &["g_squared"],
        model,
        &data,
        &[0.0],
        ResidualMode::Complex,
        &LmOptions::default(),
    )?;

    let k2 = kappa * kappa;
    let u = raw.estimates[0];
    let g = kappa * u.max(0.0).sqrt();
    let x_zp = params.x_zp();
    let root_n = n_d.sqrt();
    let g0 = g / root_n;
    let std_errors = raw.std_errors.as_ref().map(|s| {
        let su = s[0];
        let sg = kappa * su / (2.0 * u.max(0.0).sqrt() + su.sqrt());
        vec![sg, su * k2, sg / root_n, sg / root_n / x_zp]
    });
    Ok(FitResult {
        names: ["g", "g_squared", "g0", "cavity_pull"].map(String::from).to_vec(),
        estimates: vec![g, u * k2, g0, g0 / x_zp],
        std_errors,
        residual_norm: raw.residual_norm * kappa,
        ..raw
    })
}
