//! Probe-frequency grids and complex transmission spectra.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::device::DeviceParams;
use crate::response::DriveConfig;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectrumError {
    #[error("frequency and value lists differ in length ({frequencies} vs {values})")]
    LengthMismatch { frequencies: usize, values: usize },
    #[error("frequencies must be strictly increasing (index {0})")]
    NotIncreasing(usize),
    #[error("non-finite entry at index {0}")]
    NonFinite(usize),
    #[error("grid needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("grid half-span must be positive and finite, got {0}")]
    BadSpan(f64),
}

/// A uniform grid `center ± half_span` with `points` samples, in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub center: f64,
    pub half_span: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn new(center: f64, half_span: f64, points: usize) -> Self {
        Self {
            center,
            half_span,
            points,
        }
    }

    /// Grid centred on the cavity spanning ±`n_kappa`·κ.
    pub fn around_cavity(params: &DeviceParams, n_kappa: f64, points: usize) -> Self {
        Self::new(params.omega_c(), n_kappa * params.kappa(), points)
    }

    pub fn build(&self) -> Result<Vec<f64>, SpectrumError> {
        linear_grid(self.center, self.half_span, self.points)
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        let p = DeviceParams::membrane_device();
        Self::around_cavity(&p, 10.0, 2001)
    }
}

/// `points` samples evenly spaced over `center ± half_span`, inclusive.
///
/// Offsets are formed relative to the centre so that an odd point count puts
/// a sample exactly on `center`.
pub fn linear_grid(center: f64, half_span: f64, points: usize) -> Result<Vec<f64>, SpectrumError> {
    if points < 2 {
        return Err(SpectrumError::TooFewPoints(points));
    }
    if !(half_span.is_finite() && half_span > 0.0) {
        return Err(SpectrumError::BadSpan(half_span));
    }
    if !center.is_finite() {
        return Err(SpectrumError::NonFinite(0));
    }
    let mid = (points - 1) as f64 / 2.0;
    let grid: Vec<f64> = (0..points)
        .map(|i| center + half_span * ((i as f64 - mid) / mid))
        .collect();
    check_increasing(&grid)?;
    Ok(grid)
}

/// Sorted union of two grids with exact duplicates removed.
pub fn merge_grids(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = a.iter().chain(b).copied().collect();
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

fn check_increasing(freqs: &[f64]) -> Result<(), SpectrumError> {
    for (i, f) in freqs.iter().enumerate() {
        if !f.is_finite() {
            return Err(SpectrumError::NonFinite(i));
        }
    }
    if let Some(i) = freqs.windows(2).position(|w| w[1] <= w[0]) {
        return Err(SpectrumError::NotIncreasing(i + 1));
    }
    Ok(())
}

/// Where a synthetic spectrum came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumOrigin {
    pub drive: DriveConfig,
    pub params: DeviceParams,
}

/// Complex transmission sampled on a strictly increasing probe grid (rad/s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexSpectrum {
    probe_frequencies: Vec<f64>,
    values: Vec<Complex64>,
    origin: Option<SpectrumOrigin>,
}

impl ComplexSpectrum {
    pub fn new(
        probe_frequencies: Vec<f64>,
        values: Vec<Complex64>,
        origin: Option<SpectrumOrigin>,
    ) -> Result<Self, SpectrumError> {
        if probe_frequencies.len() != values.len() {
            return Err(SpectrumError::LengthMismatch {
                frequencies: probe_frequencies.len(),
                values: values.len(),
            });
        }
        check_increasing(&probe_frequencies)?;
        if let Some(i) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(SpectrumError::NonFinite(i));
        }
        Ok(Self {
            probe_frequencies,
            values,
            origin,
        })
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.probe_frequencies
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn origin(&self) -> Option<&SpectrumOrigin> {
        self.origin.as_ref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|t| t.norm()).collect()
    }

    /// 20·log10|T|.
    pub fn magnitudes_db(&self) -> Vec<f64> {
        self.values.iter().map(|t| amplitude_db(*t)).collect()
    }

    /// arg(T) under the +j convention of the transmission model.
    pub fn phases(&self) -> Vec<f64> {
        self.values.iter().map(|t| t.arg()).collect()
    }

    /// Same grid and origin, new values. Values must be finite.
    pub fn with_values(&self, values: Vec<Complex64>) -> Result<Self, SpectrumError> {
        Self::new(self.probe_frequencies.clone(), values, self.origin.clone())
    }
}

pub fn amplitude_db(t: Complex64) -> f64 {
    20.0 * t.norm().log10()
}
