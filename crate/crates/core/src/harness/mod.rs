//! End-to-end synthetic experiments: probe sweeps, power and detuning sweeps,
//! two-tone maps, seeded noise, and synthesize→fit pipelines.
//!
//! All noise is keyed by (seed, trace, point index), so results do not
//! depend on evaluation order or thread count.

mod noise;
mod pipelines;
mod sweeps;

use thiserror::Error;

use crate::device::{DeviceError, DeviceParams};
use crate::fit::FitError;
use crate::response::{dressed_spectrum, DriveConfig};
use crate::spectrum::{ComplexSpectrum, SpectrumError};

pub use noise::{inject_noise, inject_noise_trace, inject_real_noise, NoiseModel};
pub use pipelines::{
    backaction_roundtrip, cavity_roundtrip, coupling_roundtrip, mechanical_noise_spectrum, omit_feature,
    omit_window, Comparison, OmitFeature, RoundTrip,
};
pub use sweeps::{
    detuning_sweep, find_crossover, power_sweep, power_sweep_grid, two_tone_map, DetuningPoint, DetuningSweep,
    PowerPoint, PowerSweep, TwoToneMap,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Dressed transmission over `grid`, optionally with additive noise
/// (trace 0 of `noise`). The drive and parameters are embedded in the result.
pub fn probe_sweep(
    params: &DeviceParams,
    drive: &DriveConfig,
    grid: &[f64],
    noise: Option<&NoiseModel>,
) -> Result<ComplexSpectrum, HarnessError> {
    let clean = dressed_spectrum(grid, drive, params)?;
    Ok(match noise {
        Some(model) => inject_noise(&clean, model)?,
        None => clean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{deepest_minima, local_minima};
    use crate::response::{bare_transmission, Coupling};
    use crate::spectrum::linear_grid;

    #[test]
    fn undriven_probe_sweep_is_the_bare_dip() {
        let p = DeviceParams::membrane_device();
        let grid = linear_grid(p.omega_c(), 2.0 * p.kappa(), 101).unwrap();
        let s = probe_sweep(&p, &DriveConfig::undriven(&p), &grid, None).unwrap();
        for (w, t) in grid.iter().zip(s.values()) {
            assert_eq!(*t, bare_transmission(*w, &p));
        }
    }

    #[test]
    fn strong_drive_splits_the_dip() {
        let p = DeviceParams::membrane_device();
        let drive = DriveConfig::red_sideband(&p, 0.0, Coupling::Photons(5e6)).unwrap();
        let grid = linear_grid(p.omega_c(), 2.0 * std::f64::consts::TAU * 1e6, 2001).unwrap();
        let s = probe_sweep(&p, &drive, &grid, None).unwrap();
        let mags = s.magnitudes();
        let minima = deepest_minima(&grid, &mags, 2);
        assert_eq!(minima.len(), 2);
        assert!(minima[0].0 < p.omega_c() && minima[1].0 > p.omega_c());
        assert!(local_minima(&mags).len() >= 2);
    }

    #[test]
    fn weak_drive_opens_a_narrow_window() {
        let p = DeviceParams::membrane_device();
        let drive = DriveConfig::red_sideband(&p, 0.0, Coupling::Photons(10.0)).unwrap();
        let g = drive.coupling_rate(&p);
        let width = p.gamma_m() + 4.0 * g * g / p.kappa();
        let grid = linear_grid(p.omega_c(), 5.0 * width, 201).unwrap();
        let s = probe_sweep(&p, &drive, &grid, None).unwrap();
        let mags = s.magnitudes();
        let bare = bare_transmission(p.omega_c(), &p).norm();
        // transparency peak in the middle of the dip, back to the dip at the edges
        assert!(mags[100] > bare * 1.1);
        assert!((mags[0] - bare).abs() < 0.05 * (mags[100] - bare));
    }
}
