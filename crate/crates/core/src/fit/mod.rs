//! Parameter estimation on synthetic or measured spectra.
//!
//! Every fit runs on parameters rescaled to order unity (frequencies as
//! offsets in units of a linewidth guess) and reports estimates in SI units
//! (rad/s for rates).

mod backaction;
mod cavity;
mod coupling;
pub mod lm;
mod mechanical;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use backaction::{fit_backaction, BackactionMode, BackactionPoint};
pub use cavity::{cavity_initial_guess, fit_cavity, fit_cavity_with, CavityFitOptions, CavityGuess};
pub use coupling::{fit_coupling, fit_coupling_with, fit_sqrt_law, fit_sqrt_law_weighted, CouplingFitOptions};
pub use lm::{LmOptions, LmReport, Termination};
pub use mechanical::{fit_mechanical, fit_mechanical_with, lorentzian, mechanical_initial_guess, MechanicalGuess};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("insufficient points: need at least {needed}, got {got}")]
    InsufficientPoints { needed: usize, got: usize },
    #[error("no resolvable dip: depth {depth:.3e} vs noise floor {noise:.3e}")]
    NoDip { depth: f64, noise: f64 },
    #[error("no resolvable peak: height {height:.3e} vs noise floor {noise:.3e}")]
    NoPeak { height: f64, noise: f64 },
    #[error("spectrum spans {span_widths:.2} linewidths, need at least {needed}")]
    InsufficientSpan { span_widths: f64, needed: f64 },
    #[error("every n_d is zero; g0 is undetermined")]
    AllZeroPhotons,
    #[error("invalid dataset: {0}")]
    InvalidData(String),
}

/// Ordinate values of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ordinate {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

impl Ordinate {
    pub fn len(&self) -> usize {
        match self {
            Ordinate::Real(v) => v.len(),
            Ordinate::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Abscissae with real or complex ordinates and optional per-point weights
/// (residuals are multiplied by the weight).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    x: Vec<f64>,
    y: Ordinate,
    weights: Option<Vec<f64>>,
}

impl Dataset {
    pub fn new(x: Vec<f64>, y: Ordinate, weights: Option<Vec<f64>>) -> Result<Self, FitError> {
        if x.len() != y.len() {
            return Err(FitError::InvalidData(format!(
                "{} abscissae but {} ordinates",
                x.len(),
                y.len()
            )));
        }
        if let Some(w) = &weights {
            if w.len() != x.len() {
                return Err(FitError::InvalidData("weight count differs from point count".into()));
            }
            if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(FitError::InvalidData("weights must be finite and non-negative".into()));
            }
        }
        let finite = match &y {
            Ordinate::Real(v) => v.iter().all(|a| a.is_finite()),
            Ordinate::Complex(v) => v.iter().all(|a| a.re.is_finite() && a.im.is_finite()),
        };
        if !finite || x.iter().any(|a| !a.is_finite()) {
            return Err(FitError::InvalidData("non-finite value".into()));
        }
        Ok(Self { x, y, weights })
    }

    pub fn real(x: Vec<f64>, y: Vec<f64>) -> Result<Self, FitError> {
        Self::new(x, Ordinate::Real(y), None)
    }

    pub fn complex(x: Vec<f64>, y: Vec<Complex64>) -> Result<Self, FitError> {
        Self::new(x, Ordinate::Complex(y), None)
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &Ordinate {
        &self.y
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// How complex data is compared to a complex model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualMode {
    /// Stacked real and imaginary parts: fits magnitude and phase.
    #[default]
    Complex,
    /// |data| − |model| only.
    Magnitude,
}

/// Builds the residual vector of `model` against `data`.
///
/// Real data is compared with the real part of the model.
pub fn curve_residuals<M>(model: &M, data: &Dataset, params: &[f64], mode: ResidualMode) -> Vec<f64>
where
    M: Fn(f64, &[f64]) -> Complex64,
{
    let weight = |i: usize| data.weights.as_ref().map_or(1.0, |w| w[i]);
    match &data.y {
        Ordinate::Real(y) => data
            .x
            .iter()
            .zip(y)
            .enumerate()
            .map(|(i, (&x, &v))| weight(i) * (model(x, params).re - v))
            .collect(),
        Ordinate::Complex(y) => {
            let mut out = Vec::with_capacity(2 * y.len());
            for (i, (&x, &v)) in data.x.iter().zip(y).enumerate() {
                let m = model(x, params);
                match mode {
                    ResidualMode::Complex => {
                        out.push(weight(i) * (m.re - v.re));
                        out.push(weight(i) * (m.im - v.im));
                    }
                    ResidualMode::Magnitude => out.push(weight(i) * (m.norm() - v.norm())),
                }
            }
            out
        }
    }
}

/// Named estimates with their uncertainties and solver diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model_id: String,
    pub names: Vec<String>,
    pub estimates: Vec<f64>,
    /// 1σ per estimate; absent when the normal matrix is ill conditioned.
    pub std_errors: Option<Vec<f64>>,
    pub residual_norm: f64,
    pub residual_count: usize,
    pub iterations: usize,
    pub converged: bool,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.estimates[i])
    }

    pub fn std_error(&self, name: &str) -> Option<f64> {
        let i = self.index(name)?;
        self.std_errors.as_ref().map(|s| s[i])
    }

    fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// ‖r‖² / (N − p) divided by σ², for residuals with known noise σ.
    pub fn reduced_chi_square(&self, sigma: f64) -> f64 {
        let dof = self.residual_count.saturating_sub(self.estimates.len()).max(1);
        self.residual_norm.powi(2) / (dof as f64 * sigma * sigma)
    }
}

/// Generic least-squares curve fit of `model(x, params)` to `data`.
///
/// `names` labels the parameters in the result. Parameters are used as given;
/// callers should pass order-unity parameterizations.
pub fn least_squares<M>(
    model_id: &str,
    names: &[&str],
    model: M,
    data: &Dataset,
    init: &[f64],
    mode: ResidualMode,
    options: &LmOptions,
) -> Result<FitResult, FitError>
where
    M: Fn(f64, &[f64]) -> Complex64,
{
    if names.len() != init.len() {
        return Err(FitError::InvalidData("parameter names and initial values differ in length".into()));
    }
    if init.iter().any(|v| !v.is_finite()) {
        return Err(FitError::InvalidData("initial parameters must be finite".into()));
    }
    let options = LmOptions {
        residual_floor: options.residual_floor.max(rounding_floor(data)),
        ..*options
    };
    let report = lm::minimize(|p| curve_residuals(&model, data, p, mode), init, &options);
    Ok(FitResult {
        model_id: model_id.to_string(),
        names: names.iter().map(|s| s.to_string()).collect(),
        estimates: report.params.clone(),
        std_errors: report.std_errors(),
        residual_norm: report.residual_norm,
        residual_count: report.residuals.len(),
        iterations: report.iterations,
        converged: report.converged,
    })
}

/// Residuals below a part per million of the data norm count as an exact fit.
fn rounding_floor(data: &Dataset) -> f64 {
    let norm = match &data.y {
        Ordinate::Real(v) => v.iter().map(|a| a * a).sum::<f64>(),
        Ordinate::Complex(v) => v.iter().map(|a| a.norm_sqr()).sum::<f64>(),
    };
    1e-6 * norm.sqrt()
}

/// Robust noise estimate from first differences: MAD / (0.6745·√2).
pub(crate) fn difference_noise(values: &[f64]) -> f64 {
    if values.len() < 3 {
        return 0.0;
    }
    let mut diffs: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    diffs.sort_by(f64::total_cmp);
    let median = diffs[diffs.len() / 2];
    median / (0.6745 * std::f64::consts::SQRT_2)
}
