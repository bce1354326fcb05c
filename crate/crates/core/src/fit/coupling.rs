use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{curve_residuals, least_squares, Dataset, FitError, FitResult, LmOptions, ResidualMode};
use crate::device::DeviceParams;
use crate::response::{transmission_with_g_squared, DriveConfig};
use crate::spectrum::ComplexSpectrum;

/// Range of g²/κ² covered by the coarse scan that seeds the coupling fit.
const SCAN_DECADES: (i32, i32) = (-10, 4);
const SCAN_PER_DECADE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingFitOptions {
    pub mode: ResidualMode,
    /// Fit a constant complex background factor A·e^{jφ}.
    pub background: bool,
    pub lm: LmOptions,
}

impl Default for CouplingFitOptions {
    fn default() -> Self {
        Self {
            mode: ResidualMode::Complex,
            background: false,
            lm: LmOptions::default(),
        }
    }
}

pub fn fit_coupling(spectrum: &ComplexSpectrum, params: &DeviceParams, drive: &DriveConfig) -> Result<FitResult, FitError> {
    fit_coupling_with(spectrum, params, drive, &CouplingFitOptions::default())
}

/// Fits the coupling rate g of a dressed spectrum taken with `drive` (only
/// its frequency is used), holding the cavity and mechanical parameters of `params` fixed.
///
/// The free parameter is u = g²/κ², which may cross zero during the search.
/// Estimates: `g` = κ·√max(u, 0) and `g_squared`, plus `amplitude` and
/// `phase` with a background.
pub fn fit_coupling_with(
    spectrum: &ComplexSpectrum,
    params: &DeviceParams,
    drive: &DriveConfig,
    options: &CouplingFitOptions,
) -> Result<FitResult, FitError> {
    if spectrum.len() < 3 {
        return Err(FitError::InsufficientPoints {
            needed: 3,
            got: spectrum.len(),
        });
    }
    let kappa = params.kappa();
    let wc = params.omega_c();
    let drive = drive.omega_d() - wc;
    let offsets: Vec<f64> = spectrum.frequencies().iter().map(|w| w - wc).collect();
    let data = Dataset::complex(offsets, spectrum.values().to_vec())?;
    let k2 = kappa * kappa;

    let background_init = if options.background {
        // ratio of data to the bare response at the grid edges
        let n = spectrum.len();
        let edge = (n / 20).max(1);
        let ratio: Complex64 = (0..edge)
            .chain(n - edge..n)
            .map(|i| data_value(&data, i) / transmission_with_g_squared(data.x()[i], drive, 0.0, params))
            .sum::<Complex64>()
            / (2 * edge) as f64;
        Some((ratio.norm(), ratio.arg()))
    } else {
        None
    };

    // coarse scan in u, with u = 0 always included
    let cost_at = |u: f64| {
        let mut p = vec![1.0];
        if let Some((a, phi)) = background_init {
            p.extend([a, phi]);
        }
        let model = |x: f64, q: &[f64]| scaled_model(x, q, u, drive, k2, params);
        curve_residuals(&model, &data, &p, options.mode)
            .iter()
            .map(|r| r * r)
            .sum::<f64>()
    };
    let (lo, hi) = SCAN_DECADES;
    let steps = (hi - lo) as usize * SCAN_PER_DECADE;
    let mut best = (0.0, cost_at(0.0));
    for k in 0..=steps {
        let u = 10f64.powf(lo as f64 + k as f64 / SCAN_PER_DECADE as f64);
        let c = cost_at(u);
        if c < best.1 {
            best = (u, c);
        }
    }
    let u_scale = best.0.max(10f64.powi(lo));

    let mut init = vec![best.0 / u_scale];
    let mut names = vec!["g_squared"];
    if let Some((a, phi)) = background_init {
        init.extend([a, phi]);
        names.extend(["amplitude", "phase"]);
    }
    let model = |x: f64, q: &[f64]| scaled_model(x, q, u_scale, drive, k2, params);
    let raw = least_squares("coupling", &names, model, &data, &init, options.mode, &options.lm)?;

    let u = raw.estimates[0] * u_scale;
    let sigma_u = raw.std_errors.as_ref().map(|s| s[0] * u_scale);
    let g = kappa * u.max(0.0).sqrt();
    // delta method far from zero, κ·√σu at u = 0
    let sigma_g = sigma_u.map(|s| kappa * s / (2.0 * u.max(0.0).sqrt() + s.sqrt()));

    let mut estimates = vec![g, u * k2];
    estimates.extend_from_slice(&raw.estimates[1..]);
    let mut out_names = vec!["g".to_string(), "g_squared".to_string()];
    out_names.extend(raw.names[1..].iter().cloned());
    let std_errors = match (raw.std_errors.as_ref(), sigma_u, sigma_g) {
        (Some(s), Some(su), Some(sg)) => {
            let mut v = vec![sg, su * k2];
            v.extend_from_slice(&s[1..]);
            Some(v)
        }
        _ => None,
    };
    Ok(FitResult {
        names: out_names,
        estimates,
        std_errors,
        ..raw
    })
}

fn data_value(data: &Dataset, i: usize) -> Complex64 {
    match data.y() {
        super::Ordinate::Complex(v) => v[i],
        super::Ordinate::Real(v) => Complex64::new(v[i], 0.0),
    }
}

/// q[0]·scale = g²/κ²; optional q[1], q[2] are background amplitude and phase.
fn scaled_model(x: f64, q: &[f64], scale: f64, drive: f64, k2: f64, params: &DeviceParams) -> Complex64 {
    let t = transmission_with_g_squared(x, drive, q[0] * scale * k2, params);
    if q.len() == 3 {
        Complex64::from_polar(q[1], q[2]) * t
    } else {
        t
    }
}

/// Least-squares fit of g = g0·√n_d through the origin.
///
/// g0 = Σ√n·g / Σn. Its uncertainty comes from the scatter of the residuals
/// and needs at least two points; a single point yields no uncertainty.
pub fn fit_sqrt_law(photons: &[f64], couplings: &[f64]) -> Result<FitResult, FitError> {
    if photons.len() != couplings.len() {
        return Err(FitError::InvalidData("photon and coupling counts differ".into()));
    }
    if photons.is_empty() {
        return Err(FitError::InsufficientPoints { needed: 1, got: 0 });
    }
    if photons.iter().chain(couplings).any(|v| !v.is_finite()) {
        return Err(FitError::InvalidData("non-finite value".into()));
    }
    if photons.iter().any(|&n| n < 0.0) {
        return Err(FitError::InvalidData("negative photon number".into()));
    }
    let total: f64 = photons.iter().sum();
    if total == 0.0 {
        return Err(FitError::AllZeroPhotons);
    }
    let g0 = photons.iter().zip(couplings).map(|(n, g)| n.sqrt() * g).sum::<f64>() / total;
    let residuals: Vec<f64> = photons
        .iter()
        .zip(couplings)
        .map(|(n, g)| g - g0 * n.sqrt())
        .collect();
    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    let count = photons.len();
    let std_errors = (count >= 2).then(|| vec![(rss / (count - 1) as f64 / total).sqrt()]);
    Ok(FitResult {
        model_id: "sqrt_law".into(),
        names: vec!["g0".into()],
        estimates: vec![g0],
        std_errors,
        residual_norm: rss.sqrt(),
        residual_count: count,
        iterations: 0,
        converged: true,
    })
}

/// Weighted version of [`fit_sqrt_law`] for couplings with known 1σ errors:
/// g0 = Σ(√n·g/σ²) / Σ(n/σ²), σ_g0 = 1/√Σ(n/σ²).
pub fn fit_sqrt_law_weighted(photons: &[f64], couplings: &[f64], sigmas: &[f64]) -> Result<FitResult, FitError> {
    let unweighted = fit_sqrt_law(photons, couplings)?;
    if sigmas.len() != photons.len() {
        return Err(FitError::InvalidData("sigma count differs from point count".into()));
    }
    if sigmas.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(FitError::InvalidData("sigmas must be finite and positive".into()));
    }
    let weights: Vec<f64> = sigmas.iter().map(|s| 1.0 / (s * s)).collect();
    let total: f64 = photons.iter().zip(&weights).map(|(n, w)| n * w).sum();
    let g0 = photons
        .iter()
        .zip(couplings)
        .zip(&weights)
        .map(|((n, g), w)| n.sqrt() * g * w)
        .sum::<f64>()
        / total;
    let rss: f64 = photons
        .iter()
        .zip(couplings)
        .map(|(n, g)| (g - g0 * n.sqrt()).powi(2))
        .sum();
    Ok(FitResult {
        estimates: vec![g0],
        std_errors: Some(vec![total.sqrt().recip()]),
        residual_norm: rss.sqrt(),
        ..unweighted
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::hz_to_rad;
    use crate::response::{dressed_spectrum, Coupling};
    use crate::spectrum::linear_grid;

    fn spectrum_for(g: f64, delta: f64) -> (ComplexSpectrum, DriveConfig, DeviceParams) {
        let p = DeviceParams::membrane_device();
        let drive = DriveConfig::red_sideband(&p, delta, Coupling::Rate(g)).unwrap();
        let grid = linear_grid(p.omega_c(), 15.0 * p.kappa(), 1501).unwrap();
        (dressed_spectrum(&grid, &drive, &p).unwrap(), drive, p)
    }

    #[test]
    fn recovers_coupling_noiseless() {
        for ratio in [0.05, 0.4, 2.0] {
            let p = DeviceParams::membrane_device();
            let g = ratio * p.kappa();
            let (s, wd, p) = spectrum_for(g, 0.1 * p.kappa());
            let fit = fit_coupling(&s, &p, &wd).unwrap();
            assert!(fit.converged, "{ratio}");
            let rel = (fit.get("g").unwrap() - g).abs() / g;
            assert!(rel < 1e-6, "ratio {ratio}: {rel}");
        }
    }

    #[test]
    fn undriven_spectrum_gives_zero_coupling() {
        let (s, wd, p) = spectrum_for(0.0, 0.0);
        let fit = fit_coupling(&s, &p, &wd).unwrap();
        assert!(fit.get("g").unwrap() < 1e-3 * p.kappa());
    }

    #[test]
    fn background_is_fitted_alongside() {
        let p = DeviceParams::membrane_device();
        let g = 0.3 * p.kappa();
        let (s, wd, p) = spectrum_for(g, 0.0);
        let factor = Complex64::from_polar(0.8, -0.4);
        let s = s.with_values(s.values().iter().map(|v| v * factor).collect()).unwrap();
        let opts = CouplingFitOptions {
            background: true,
            ..CouplingFitOptions::default()
        };
        let fit = fit_coupling_with(&s, &p, &wd, &opts).unwrap();
        assert!((fit.get("g").unwrap() / g - 1.0).abs() < 1e-6);
        assert!((fit.get("amplitude").unwrap() - 0.8).abs() < 1e-9);
    }

    #[test]
    fn sqrt_law_closed_form() {
        let n = [1e3, 1e4, 1e5];
        let g: Vec<f64> = n.iter().map(|v: &f64| 1394.2 * v.sqrt()).collect();
        let fit = fit_sqrt_law(&n, &g).unwrap();
        assert!((fit.get("g0").unwrap() / 1394.2 - 1.0).abs() < 1e-14);
        assert!(fit.std_error("g0").unwrap() < 1e-9);

        let single = fit_sqrt_law(&[4.0], &[10.0]).unwrap();
        assert_eq!(single.get("g0"), Some(5.0));
        assert!(single.std_errors.is_none());

        assert_eq!(fit_sqrt_law(&[0.0, 0.0], &[1.0, 2.0]), Err(FitError::AllZeroPhotons));
        assert!(fit_sqrt_law(&[], &[]).is_err());
        assert!(fit_sqrt_law(&[-1.0], &[1.0]).is_err());
    }

    #[test]
    fn sqrt_law_with_scatter() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, Normal};
        let g0 = hz_to_rad(230.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let scatter = Normal::new(1.0, 0.1).unwrap();
        let n: Vec<f64> = (0..20).map(|i| 10f64.powf(2.0 + i as f64 * 0.25)).collect();
        let g: Vec<f64> = n.iter().map(|v| g0 * v.sqrt() * scatter.sample(&mut rng)).collect();
        let fit = fit_sqrt_law(&n, &g).unwrap();
        assert!((fit.get("g0").unwrap() / g0 - 1.0).abs() < 0.05);
    }

    #[test]
    fn weighted_sqrt_law() {
        let n = [1e2, 1e4, 1e6];
        let g: Vec<f64> = n.iter().map(|v: &f64| 2.0 * v.sqrt()).collect();
        let fit = fit_sqrt_law_weighted(&n, &g, &[1.0, 1.0, 1.0]).unwrap();
        assert!((fit.get("g0").unwrap() - 2.0).abs() < 1e-12);
        let expected = 1.0 / (1e2f64 + 1e4 + 1e6).sqrt();
        assert!((fit.std_error("g0").unwrap() / expected - 1.0).abs() < 1e-12);
        assert!(fit_sqrt_law_weighted(&n, &g, &[1.0, 0.0, 1.0]).is_err());
    }
}
