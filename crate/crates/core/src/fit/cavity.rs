use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{difference_noise, least_squares, Dataset, FitError, FitResult, LmOptions, ResidualMode};
use crate::features::{parabolic_vertex, width_at_level};
use crate::response::notch_transmission;
use crate::spectrum::ComplexSpectrum;

/// Minimum span of the probe grid in cavity linewidths.
pub const MIN_SPAN_LINEWIDTHS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityFitOptions {
    /// Fit a constant complex background factor A·e^{jφ}.
    pub background: bool,
    pub mode: ResidualMode,
    pub lm: LmOptions,
}

impl Default for CavityFitOptions {
    fn default() -> Self {
        Self {
            background: false,
            mode: ResidualMode::Complex,
            lm: LmOptions::default(),
        }
    }
}

/// Starting point for the cavity fit, read off the spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityGuess {
    /// Parabolic-refined location of the |T| minimum.
    pub omega_c: f64,
    /// Full width at half depth of 1 − |T|², which is exactly κ for a notch.
    pub kappa: f64,
    /// From the dip depth: κex = κ·(1 − |T_min|).
    pub kappa_ex: f64,
    /// Mean |T| over the outer 5% of the grid on each side.
    pub amplitude: f64,
    pub phase: f64,
    pub depth: f64,
    pub noise: f64,
}

pub fn cavity_initial_guess(spectrum: &ComplexSpectrum) -> Result<CavityGuess, FitError> {
    let n = spectrum.len();
    if n < 5 {
        return Err(FitError::InsufficientPoints { needed: 5, got: n });
    }
    let freqs = spectrum.frequencies();
    let values = spectrum.values();
    let edge = (n / 20).max(1);
    let edges: Vec<Complex64> = values[..edge].iter().chain(&values[n - edge..]).copied().collect();
    let amplitude = edges.iter().map(|v| v.norm()).sum::<f64>() / edges.len() as f64;
    let phase = edges.iter().sum::<Complex64>().arg();
    if !(amplitude > 0.0) {
        return Err(FitError::NoDip {
            depth: 0.0,
            noise: 0.0,
        });
    }
    let mags: Vec<f64> = values.iter().map(|v| v.norm() / amplitude).collect();
    let noise = difference_noise(&mags);
    let imin = mags
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let (omega_c, floor) = parabolic_vertex(freqs, &mags, imin);
    let floor = floor.clamp(0.0, 1.0);
    let depth = 1.0 - floor;
    if depth <= 3.0 * noise || depth <= 1e-9 {
        return Err(FitError::NoDip { depth, noise });
    }
    let absorbed: Vec<f64> = mags.iter().map(|m| 1.0 - m * m).collect();
    let kappa = width_at_level(freqs, &absorbed, imin, absorbed[imin] / 2.0, true).ok_or(
        FitError::InsufficientSpan {
            span_widths: 0.0,
            needed: MIN_SPAN_LINEWIDTHS,
        },
    )?;
    let span = (freqs[n - 1] - freqs[0]) / kappa;
    if span < MIN_SPAN_LINEWIDTHS {
        return Err(FitError::InsufficientSpan {
            span_widths: span,
            needed: MIN_SPAN_LINEWIDTHS,
        });
    }
    Ok(CavityGuess {
        omega_c,
        kappa,
        kappa_ex: kappa * depth,
        amplitude,
        phase,
        depth,
        noise,
    })
}

pub fn fit_cavity(spectrum: &ComplexSpectrum) -> Result<FitResult, FitError> {
    fit_cavity_with(spectrum, &CavityFitOptions::default())
}

/// Fits the bare notch response to a spectrum. Estimates: `omega_c`, `kappa`,
/// `kappa_ex`, `kappa_0` (derived), plus `amplitude` and `phase` with a
/// background.
pub fn fit_cavity_with(spectrum: &ComplexSpectrum, options: &CavityFitOptions) -> Result<FitResult, FitError> {
    let guess = cavity_initial_guess(spectrum)?;
    let scale = guess.kappa;
    let centre = guess.omega_c;
    // offsets from the guessed centre keep GHz-scale frequencies out of the model
    let offsets: Vec<f64> = spectrum.frequencies().iter().map(|w| w - centre).collect();
    let data = Dataset::complex(offsets, spectrum.values().to_vec())?;

    let model = |x: f64, p: &[f64]| {
        let t = notch_transmission(x - scale * p[0], scale * p[1], scale * p[2]);
        if p.len() == 5 {
            Complex64::from_polar(p[3], p[4]) * t
        } else {
            t
        }
    };
    let mut init = vec![0.0, 1.0, guess.kappa_ex / scale];
    let mut names = vec!["omega_c", "kappa", "kappa_ex"];
    if options.background {
        init.extend([guess.amplitude, guess.phase]);
        names.extend(["amplitude", "phase"]);
    }
    let raw = least_squares("cavity", &names, model, &data, &init, options.mode, &options.lm)?;

    let mut estimates = raw.estimates.clone();
    estimates[0] = centre + scale * raw.estimates[0];
    estimates[1] *= scale;
    estimates[2] *= scale;
    let kappa_0 = estimates[1] - estimates[2];
    let std_errors = raw.std_errors.as_ref().map(|s| {
        let mut out = s.clone();
        for v in out.iter_mut().take(3) {
            *v *= scale;
        }
        // κ0 = κ − κex; correlation ignored, so this is an upper bound
        out.push((out[1] * out[1] + out[2] * out[2]).sqrt());
        out
    });
    estimates.push(kappa_0);
    let mut names: Vec<String> = raw.names.clone();
    names.push("kappa_0".into());
    Ok(FitResult {
        names,
        estimates,
        std_errors,
        ..raw
    })
}
