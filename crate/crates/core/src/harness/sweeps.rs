use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::noise::inject_noise_trace;
use super::pipelines::{omit_feature, omit_window, OmitFeature};
use super::{HarnessError, NoiseModel};
use crate::constants::hz_to_rad;
use crate::device::{drive_photon_number, pumped_coupling, DeviceParams};
use crate::features::doublet_separation;
use crate::fit::{fit_coupling, fit_sqrt_law, fit_sqrt_law_weighted, BackactionPoint, FitError, FitResult};
use crate::formats::MapTable;
use crate::constants::rad_to_hz;
use crate::response::{backaction, dressed_spectrum, transmission, Coupling, DriveConfig};
use crate::spectrum::{amplitude_db, linear_grid, merge_grids, ComplexSpectrum};

/// One drive strength of a power sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerPoint {
    pub n_d: f64,
    pub g_true: f64,
    pub spectrum: ComplexSpectrum,
    pub fit: Result<FitResult, FitError>,
    /// Distance between the two deepest |T| minima, if there are two.
    pub splitting: Option<f64>,
    /// Two minima more than one cavity linewidth apart.
    pub resolved: bool,
}

/// Probe spectra at increasing drive photon number, drive on the red
/// sideband (δ = 0), with g fitted per spectrum and g0 from the √n_d law.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSweep {
    pub params: DeviceParams,
    pub probe_grid: Vec<f64>,
    pub noise: Option<NoiseModel>,
    pub points: Vec<PowerPoint>,
    pub sqrt_law: Result<FitResult, FitError>,
}

impl PowerSweep {
    /// Smallest swept n_d whose spectrum shows two resolved minima.
    pub fn crossover(&self) -> Option<f64> {
        self.points
            .iter()
            .filter(|p| p.resolved)
            .map(|p| p.n_d)
            .min_by(f64::total_cmp)
    }
}

/// Default probe grid for power sweeps: ±2.5 MHz around the cavity with 2001
/// points, plus 401 points within ±2 kHz so the narrow transparency window
/// at low n_d is sampled.
pub fn power_sweep_grid(params: &DeviceParams) -> Vec<f64> {
    let wide = linear_grid(params.omega_c(), hz_to_rad(2.5e6), 2001).expect("valid grid");
    let narrow = linear_grid(params.omega_c(), hz_to_rad(2e3), 401).expect("valid grid");
    merge_grids(&wide, &narrow)
}

fn resolved_splitting(grid: &[f64], spectrum: &ComplexSpectrum, kappa: f64) -> (Option<f64>, bool) {
    let splitting = doublet_separation(grid, &spectrum.magnitudes());
    (splitting, splitting.is_some_and(|s| s > kappa))
}

pub fn power_sweep(
    params: &DeviceParams,
    n_d_list: &[f64],
    grid: &[f64],
    noise: Option<&NoiseModel>,
) -> Result<PowerSweep, HarnessError> {
    if n_d_list.is_empty() {
        return Err(HarnessError::InvalidInput("n_d list is empty".into()));
    }
    if let Some(bad) = n_d_list.iter().find(|n| !(n.is_finite() && **n >= 0.0)) {
        return Err(HarnessError::InvalidInput(format!("photon numbers must be finite and >= 0, got {bad}")));
    }
    let points: Vec<PowerPoint> = n_d_list
        .par_iter()
        .enumerate()
        .map(|(k, &n_d)| -> Result<PowerPoint, HarnessError> {
            let drive = DriveConfig::red_sideband(params, 0.0, Coupling::Photons(n_d))?;
            let clean = dressed_spectrum(grid, &drive, params)?;
            let spectrum = match noise {
                Some(m) => inject_noise_trace(&clean, m, k as u32)?,
                None => clean,
            };
            let fit = fit_coupling(&spectrum, params, &drive);
            let (splitting, resolved) = resolved_splitting(grid, &spectrum, params.kappa());
            Ok(PowerPoint {
                n_d,
                g_true: drive.coupling_rate(params),
                spectrum,
                fit,
                splitting,
                resolved,
            })
        })
        .collect::<Result<_, _>>()?;

    let fitted: Vec<(f64, f64, Option<f64>)> = points
        .iter()
        .filter_map(|p| {
            let fit = p.fit.as_ref().ok()?;
            Some((p.n_d, fit.get("g")?, fit.std_error("g").filter(|s| *s > 0.0)))
        })
        .collect();
    let photons: Vec<f64> = fitted.iter().map(|f| f.0).collect();
    let couplings: Vec<f64> = fitted.iter().map(|f| f.1).collect();
    // weight by the per-spectrum uncertainties when every fit reports one
    let sigmas: Option<Vec<f64>> = fitted.iter().map(|f| f.2).collect();
    let sqrt_law = match sigmas {
        Some(s) if noise.is_some() => fit_sqrt_law_weighted(&photons, &couplings, &s),
        _ => fit_sqrt_law(&photons, &couplings),
    };
    Ok(PowerSweep {
        params: params.clone(),
        probe_grid: grid.to_vec(),
        noise: noise.copied(),
        points,
        sqrt_law,
    })
}

/// Bisects (in log n_d) for the smallest photon number whose noiseless
/// spectrum on `grid` has two minima more than κ apart. Returns `None`
/// unless `lo` is unresolved and `hi` resolved.
pub fn find_crossover(
    params: &DeviceParams,
    grid: &[f64],
    lo: f64,
    hi: f64,
    rel_tol: f64,
) -> Result<Option<f64>, HarnessError> {
    if !(lo > 0.0 && hi > lo && rel_tol > 0.0) {
        return Err(HarnessError::InvalidInput("need 0 < lo < hi and rel_tol > 0".into()));
    }
    let resolved = |n: f64| -> Result<bool, HarnessError> {
        let drive = DriveConfig::red_sideband(params, 0.0, Coupling::Photons(n))?;
        let spectrum = dressed_spectrum(grid, &drive, params)?;
        Ok(resolved_splitting(grid, &spectrum, params.kappa()).1)
    };
    if resolved(lo)? || !resolved(hi)? {
        return Ok(None);
    }
    let (mut a, mut b) = (lo, hi);
    while b / a > 1.0 + rel_tol {
        let mid = (a * b).sqrt();
        if resolved(mid)? {
            b = mid;
        } else {
            a = mid;
        }
    }
    Ok(Some(b))
}

/// Backaction at one relative detuning of a fixed-power sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetuningPoint {
    pub delta: f64,
    pub n_d: f64,
    pub g: f64,
    pub omega_m_eff: f64,
    pub gamma_m_eff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetuningSweep {
    pub params: DeviceParams,
    pub p_in: f64,
    pub points: Vec<DetuningPoint>,
}

impl DetuningSweep {
    /// Photon number the drive power produces at δ = 0.
    pub fn photons_at_zero(&self) -> f64 {
        let p = &self.params;
        drive_photon_number(self.p_in, p.omega_c() - p.omega_m(), -p.omega_m(), p.kappa(), p.kappa_ex())
            .expect("validated at construction")
    }

    /// Sweep points in the form [`crate::fit::fit_backaction`] takes, each
    /// carrying its own n_d.
    pub fn backaction_points(&self) -> Vec<BackactionPoint> {
        self.points
            .iter()
            .map(|p| BackactionPoint {
                delta: p.delta,
                omega_m_eff: p.omega_m_eff,
                gamma_m_eff: p.gamma_m_eff,
                n_d: Some(p.n_d),
            })
            .collect()
    }

    /// Ω′m and Γ′m read off noiseless dressed spectra (the transparency
    /// window), for comparison with the closed-form values. `points` sets
    /// the probe samples per window.
    pub fn cross_check(&self, points: usize) -> Result<Vec<Option<OmitFeature>>, HarnessError> {
        self.points
            .par_iter()
            .map(|pt| {
                let drive = DriveConfig::red_sideband(&self.params, pt.delta, Coupling::Rate(pt.g))?;
                let grid = omit_window(&self.params, &drive, points)?;
                let spectrum = dressed_spectrum(&grid, &drive, &self.params)?;
                Ok(omit_feature(&spectrum, &drive, &self.params))
            })
            .collect()
    }
}

/// Spring shift and backaction damping versus relative detuning δ at fixed
/// incident drive power `p_in` (W). n_d follows the cavity Lorentzian at
/// Δ = δ − Ωm.
pub fn detuning_sweep(params: &DeviceParams, p_in: f64, delta_grid: &[f64]) -> Result<DetuningSweep, HarnessError> {
    if !(p_in.is_finite() && p_in >= 0.0) {
        return Err(HarnessError::InvalidInput(format!("drive power must be finite and >= 0, got {p_in}")));
    }
    let limit = params.omega_m() / 2.0;
    let points = delta_grid
        .iter()
        .map(|&delta| {
            if !(delta.is_finite() && delta.abs() <= limit) {
                return Err(HarnessError::InvalidInput(format!(
                    "relative detuning {delta} rad/s lies outside ±Ωm/2"
                )));
            }
            let omega_d = params.omega_c() - params.omega_m() + delta;
            let n_d = drive_photon_number(p_in, omega_d, delta - params.omega_m(), params.kappa(), params.kappa_ex())?;
            let g = pumped_coupling(params.g0(), n_d)?;
            let b = backaction(delta, g, params);
            Ok(DetuningPoint {
                delta,
                n_d,
                g,
                omega_m_eff: b.omega_m_eff,
                gamma_m_eff: b.gamma_m_eff,
            })
        })
        .collect::<Result<_, HarnessError>>()?;
    Ok(DetuningSweep {
        params: params.clone(),
        p_in,
        points,
    })
}

/// |T| in dB over a drive × probe product grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoToneMap {
    pub params: DeviceParams,
    pub coupling: Coupling,
    pub noise: Option<NoiseModel>,
    pub drive_grid: Vec<f64>,
    pub probe_grid: Vec<f64>,
    /// Drive-major: row i holds every probe point at `drive_grid[i]`.
    pub mag_db: Vec<f64>,
}

impl TwoToneMap {
    pub fn row(&self, drive: usize) -> &[f64] {
        let n = self.probe_grid.len();
        &self.mag_db[drive * n..(drive + 1) * n]
    }

    /// Separation of the two deepest minima in each row.
    pub fn mode_separations(&self) -> Vec<Option<f64>> {
        (0..self.drive_grid.len())
            .map(|i| doublet_separation(&self.probe_grid, self.row(i)))
            .collect()
    }

    /// Smallest two-minimum separation over all rows that have two minima.
    pub fn min_mode_separation(&self) -> Option<f64> {
        self.mode_separations().into_iter().flatten().min_by(f64::total_cmp)
    }

    pub fn to_table(&self) -> MapTable {
        MapTable {
            drive_hz: self.drive_grid.iter().map(|&w| rad_to_hz(w)).collect(),
            probe_hz: self.probe_grid.iter().map(|&w| rad_to_hz(w)).collect(),
            mag_db: self.mag_db.clone(),
        }
    }
}

fn strictly_increasing(name: &str, grid: &[f64]) -> Result<(), HarnessError> {
    if grid.is_empty() || grid.iter().any(|v| !v.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(HarnessError::InvalidInput(format!("{name} grid must be non-empty, finite and strictly increasing")));
    }
    Ok(())
}

/// Two-tone transmission map. Row i uses a drive at `drive_grid[i]` with the
/// given coupling specification (so `Coupling::Power` varies n_d across rows)
/// and noise trace i.
pub fn two_tone_map(
    params: &DeviceParams,
    drive_grid: &[f64],
    probe_grid: &[f64],
    coupling: Coupling,
    noise: Option<&NoiseModel>,
) -> Result<TwoToneMap, HarnessError> {
    strictly_increasing("drive", drive_grid)?;
    strictly_increasing("probe", probe_grid)?;
    let rows: Vec<Vec<f64>> = drive_grid
        .par_iter()
        .enumerate()
        .map(|(i, &omega_d)| -> Result<Vec<f64>, HarnessError> {
            let drive = DriveConfig::new(omega_d, coupling)?;
            let g = drive.coupling_rate(params);
            Ok(probe_grid
                .iter()
                .enumerate()
                .map(|(j, &wp)| {
                    let mut t: Complex64 = transmission(wp, omega_d, g, params);
                    if let Some(m) = noise {
                        t += m.complex_sample(i as u32, j);
                    }
                    amplitude_db(t)
                })
                .collect())
        })
        .collect::<Result<_, _>>()?;
    Ok(TwoToneMap {
        params: params.clone(),
        coupling,
        noise: noise.copied(),
        drive_grid: drive_grid.to_vec(),
        probe_grid: probe_grid.to_vec(),
        mag_db: rows.concat(),
    })
}
