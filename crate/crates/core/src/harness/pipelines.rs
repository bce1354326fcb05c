use serde::{Deserialize, Serialize};

use super::noise::{inject_noise, inject_real_noise};
use super::sweeps::detuning_sweep;
use super::{HarnessError, NoiseModel};
use crate::device::{thermal_occupancy, DeviceParams};
use crate::features::{argmax, parabolic_vertex, width_at_level};
use crate::fit::{fit_backaction, fit_cavity, fit_coupling, BackactionMode, Dataset, FitResult};
use crate::response::{backaction, bare_transmission, dressed_spectrum, thermal_sideband, Coupling, DriveConfig};
use crate::spectrum::{linear_grid, ComplexSpectrum};

/// Mechanical frequency and linewidth read off a transparency window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmitFeature {
    /// Window centre minus the drive frequency.
    pub omega_m_eff: f64,
    /// Full width at half maximum of |T − T_bare|².
    pub gamma_m_eff: f64,
}

/// Probe grid centred on the predicted window (ωd + Ω′m) spanning ±10 Γ′m.
pub fn omit_window(params: &DeviceParams, drive: &DriveConfig, points: usize) -> Result<Vec<f64>, HarnessError> {
    let b = backaction(drive.relative_detuning(params), drive.coupling_rate(params), params);
    Ok(linear_grid(drive.omega_d() + b.omega_m_eff, 10.0 * b.gamma_m_eff, points)?)
}

/// Locates the transparency feature as the peak of |T − T_bare|², whose
/// width is Γ′m for weak coupling. `None` if the peak or its half-maximum
/// crossings fall outside the grid.
pub fn omit_feature(spectrum: &ComplexSpectrum, drive: &DriveConfig, params: &DeviceParams) -> Option<OmitFeature> {
    let offsets: Vec<f64> = spectrum.frequencies().iter().map(|w| w - drive.omega_d()).collect();
    let excess: Vec<f64> = spectrum
        .frequencies()
        .iter()
        .zip(spectrum.values())
        .map(|(&w, t)| (t - bare_transmission(w, params)).norm_sqr())
        .collect();
    let peak = argmax(&excess)?;
    if excess[peak] <= 0.0 {
        return None;
    }
    let (centre, _) = parabolic_vertex(&offsets, &excess, peak);
    let width = width_at_level(&offsets, &excess, peak, excess[peak] / 2.0, true)?;
    Some(OmitFeature {
        omega_m_eff: centre,
        gamma_m_eff: width,
    })
}

/// Thermal noise spectrum of the drum seen at `offsets` from the drive
/// (rad/s), with the dressed frequency and damping of `drive`, bath
/// occupancy at the device temperature, and optional additive noise.
pub fn mechanical_noise_spectrum(
    params: &DeviceParams,
    drive: &DriveConfig,
    offsets: &[f64],
    scale: f64,
    noise: Option<&NoiseModel>,
) -> Result<Dataset, HarnessError> {
    let b = backaction(drive.relative_detuning(params), drive.coupling_rate(params), params);
    let n_m = thermal_occupancy(params.omega_m(), params.temperature())?;
    let clean: Vec<f64> = offsets
        .iter()
        .map(|&x| thermal_sideband(x, b.omega_m_eff, b.gamma_m_eff, n_m, scale))
        .collect();
    let power = match noise {
        Some(m) => inject_real_noise(&clean, m, 0),
        None => clean,
    };
    Ok(Dataset::real(offsets.to_vec(), power)?)
}

/// One estimated quantity next to its true value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub name: String,
    pub truth: f64,
    pub estimate: f64,
    pub sigma: Option<f64>,
}

impl Comparison {
    fn from_fit(fit: &FitResult, name: &str, truth: f64) -> Result<Self, HarnessError> {
        let estimate = fit
            .get(name)
            .ok_or_else(|| HarnessError::InvalidInput(format!("fit has no `{name}` estimate")))?;
        Ok(Self {
            name: name.to_string(),
            truth,
            estimate,
            sigma: fit.std_error(name),
        })
    }

    pub fn rel_error(&self) -> f64 {
        ((self.estimate - self.truth) / self.truth).abs()
    }

    /// Whether the estimate lies within `k` reported standard errors.
    pub fn within_sigma(&self, k: f64) -> bool {
        self.sigma
            .is_some_and(|s| (self.estimate - self.truth).abs() <= k * s)
    }
}

/// A synthesize→fit run and how its estimates compare with the truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTrip {
    pub fit: FitResult,
    pub comparisons: Vec<Comparison>,
}

impl RoundTrip {
    pub fn max_rel_error(&self) -> f64 {
        self.comparisons.iter().map(Comparison::rel_error).fold(0.0, f64::max)
    }

    pub fn comparison(&self, name: &str) -> Option<&Comparison> {
        self.comparisons.iter().find(|c| c.name == name)
    }
}

/// Bare spectrum on `grid` → cavity fit; compares ωc, κ, κex.
pub fn cavity_roundtrip(
    params: &DeviceParams,
    grid: &[f64],
    noise: Option<&NoiseModel>,
) -> Result<RoundTrip, HarnessError> {
    let mut spectrum = dressed_spectrum(grid, &DriveConfig::undriven(params), params)?;
    if let Some(m) = noise {
        spectrum = inject_noise(&spectrum, m)?;
    }
    let fit = fit_cavity(&spectrum)?;
    let comparisons = vec![
        Comparison::from_fit(&fit, "omega_c", params.omega_c())?,
        Comparison::from_fit(&fit, "kappa", params.kappa())?,
        Comparison::from_fit(&fit, "kappa_ex", params.kappa_ex())?,
    ];
    Ok(RoundTrip { fit, comparisons })
}

/// Dressed spectrum at photon number `n_d` and relative detuning `delta` →
/// coupling fit with the cavity held fixed; compares g.
pub fn coupling_roundtrip(
    params: &DeviceParams,
    n_d: f64,
    delta: f64,
    grid: &[f64],
    noise: Option<&NoiseModel>,
) -> Result<RoundTrip, HarnessError> {
    let drive = DriveConfig::red_sideband(params, delta, Coupling::Photons(n_d))?;
    let mut spectrum = dressed_spectrum(grid, &drive, params)?;
    if let Some(m) = noise {
        spectrum = inject_noise(&spectrum, m)?;
    }
    let fit = fit_coupling(&spectrum, params, &drive)?;
    let comparisons = vec![Comparison::from_fit(&fit, "g", drive.coupling_rate(params))?];
    Ok(RoundTrip { fit, comparisons })
}

/// Fixed-power detuning sweep → backaction fit; compares g at δ = 0, g0 and
/// |G|. `noise` (sigma in rad/s) perturbs each Ω′m and Γ′m independently.
pub fn backaction_roundtrip(
    params: &DeviceParams,
    p_in: f64,
    delta_grid: &[f64],
    noise: Option<&NoiseModel>,
) -> Result<RoundTrip, HarnessError> {
    let sweep = detuning_sweep(params, p_in, delta_grid)?;
    let mut points = sweep.backaction_points();
    if let Some(m) = noise {
        let shifts: Vec<f64> = points.iter().map(|p| p.omega_m_eff).collect();
        let damping: Vec<f64> = points.iter().map(|p| p.gamma_m_eff).collect();
        let shifts = inject_real_noise(&shifts, m, 0);
        let damping = inject_real_noise(&damping, m, 1);
        for (p, (s, d)) in points.iter_mut().zip(shifts.into_iter().zip(damping)) {
            p.omega_m_eff = s;
            p.gamma_m_eff = d;
        }
    }
    let n_ref = sweep.photons_at_zero();
    let fit = fit_backaction(&points, params, n_ref, BackactionMode::Both)?;
    let comparisons = vec![
        Comparison::from_fit(&fit, "g", params.g0() * n_ref.sqrt())?,
        Comparison::from_fit(&fit, "g0", params.g0())?,
        Comparison::from_fit(&fit, "cavity_pull", params.cavity_pull().abs())?,
    ];
    Ok(RoundTrip { fit, comparisons })
}
