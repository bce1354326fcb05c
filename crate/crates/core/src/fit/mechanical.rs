use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{difference_noise, least_squares, Dataset, FitError, FitResult, LmOptions, Ordinate, ResidualMode};
use crate::features::{argmax, parabolic_vertex, width_at_level};

/// Fewest samples a Lorentzian fit accepts.
pub const MIN_POINTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechanicalGuess {
    pub omega_m: f64,
    pub gamma_m: f64,
    pub area: f64,
    pub background: f64,
    pub height: f64,
    pub noise: f64,
}

/// Lorentzian of FWHM `width` and integral `area` centred on `centre`.
pub fn lorentzian(x: f64, centre: f64, width: f64, area: f64) -> f64 {
    let half = width / 2.0;
    let d = x - centre;
    area * half / std::f64::consts::PI / (d * d + half * half)
}

pub fn mechanical_initial_guess(freqs: &[f64], power: &[f64]) -> Result<MechanicalGuess, FitError> {
    if freqs.len() != power.len() {
        return Err(FitError::InvalidData("frequency and power lengths differ".into()));
    }
    if freqs.len() < MIN_POINTS {
        return Err(FitError::InsufficientPoints {
            needed: MIN_POINTS,
            got: freqs.len(),
        });
    }
    let n = power.len();
    let edge = (n / 20).max(1);
    let mut edges: Vec<f64> = power[..edge].iter().chain(&power[n - edge..]).copied().collect();
    edges.sort_by(f64::total_cmp);
    let background = edges[edges.len() / 2];
    let noise = difference_noise(power);
    let peak = argmax(power).unwrap_or(0);
    let (omega_m, top) = parabolic_vertex(freqs, power, peak);
    let height = top - background;
    if !(height > 3.0 * noise) || height <= 0.0 {
        return Err(FitError::NoPeak { height, noise });
    }
    let gamma_m = width_at_level(freqs, power, peak, background + height / 2.0, true)
        .filter(|w| *w > 0.0)
        .unwrap_or_else(|| {
            // unresolved or truncated: fall back to a few sample spacings
            let spacing = (freqs[n - 1] - freqs[0]) / (n - 1) as f64;
            3.0 * spacing
        });
    Ok(MechanicalGuess {
        omega_m,
        gamma_m,
        area: height * std::f64::consts::PI * gamma_m / 2.0,
        background,
        height,
        noise,
    })
}

pub fn fit_mechanical(noise_spectrum: &Dataset) -> Result<FitResult, FitError> {
    fit_mechanical_with(noise_spectrum, &LmOptions::default())
}

/// Fits a Lorentzian plus constant background to a real noise spectrum.
/// Estimates: `omega_m`, `gamma_m` (FWHM), `area`, `background`.
///
/// Complex ordinates are reduced to their magnitudes.
pub fn fit_mechanical_with(noise_spectrum: &Dataset, options: &LmOptions) -> Result<FitResult, FitError> {
    let freqs = noise_spectrum.x();
    let power: Vec<f64> = match noise_spectrum.y() {
        Ordinate::Real(v) => v.clone(),
        Ordinate::Complex(v) => v.iter().map(|c| c.norm()).collect(),
    };
    let power = power.as_slice();
    let guess = mechanical_initial_guess(freqs, power)?;
    let width = guess.gamma_m;
    let centre = guess.omega_m;
    let level = guess.height;
    let offsets: Vec<f64> = freqs.iter().map(|w| (w - centre) / width).collect();
    let scaled: Vec<f64> = power.iter().map(|p| p / level).collect();
    let data = Dataset::real(offsets, scaled)?;
    let model = |x: f64, p: &[f64]| Complex64::new(lorentzian(x, p[0], p[1], p[2]) + p[3], 0.0);
    let init = [
        0.0,
        1.0,
        guess.area / (level * width),
        guess.background / level,
    ];
    let raw = least_squares(
        "mechanical",
        &["omega_m", "gamma_m", "area", "background"],
        model,
        &data,
        &init,
        ResidualMode::Complex,
        options,
    )?;
    let scales = [width, width, level * width, level];
    let mut estimates = raw.estimates.clone();
    estimates[0] = centre + width * raw.estimates[0];
    estimates[1] = raw.estimates[1].abs() * width;
    estimates[2] *= scales[2];
    estimates[3] *= scales[3];
    let std_errors = raw
        .std_errors
        .as_ref()
        .map(|s| s.iter().zip(scales).map(|(v, k)| v * k).collect());
    Ok(FitResult {
        estimates,
        std_errors,
        residual_norm: raw.residual_norm * level,
        ..raw
    })
}
