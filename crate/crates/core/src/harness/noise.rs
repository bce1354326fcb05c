use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::spectrum::ComplexSpectrum;

/// Additive white Gaussian noise. For complex data the real and imaginary
/// parts each get standard deviation `sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn new(sigma: f64, seed: u64) -> Result<Self, HarnessError> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(HarnessError::InvalidInput(format!("noise sigma must be finite and >= 0, got {sigma}")));
        }
        Ok(Self { sigma, seed })
    }

    /// Generator for one point: ChaCha8 seeded with `seed`, on a stream
    /// picked by `trace` (high 32 bits) and `index` (low 32 bits).
    fn rng(&self, trace: u32, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(((trace as u64) << 32) | (index as u64 & 0xffff_ffff));
        rng
    }

    pub fn complex_sample(&self, trace: u32, index: usize) -> Complex64 {
        let mut rng = self.rng(trace, index);
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(self.sigma * re, self.sigma * im)
    }

    pub fn real_sample(&self, trace: u32, index: usize) -> f64 {
        let v: f64 = self.rng(trace, index).sample(StandardNormal);
        self.sigma * v
    }
}

pub fn inject_noise(spectrum: &ComplexSpectrum, model: &NoiseModel) -> Result<ComplexSpectrum, HarnessError> {
    inject_noise_trace(spectrum, model, 0)
}

/// Adds noise realization `trace` of `model`. Distinct traces of one model
/// are independent; sweeps use the sweep index as the trace.
pub fn inject_noise_trace(
    spectrum: &ComplexSpectrum,
    model: &NoiseModel,
    trace: u32,
) -> Result<ComplexSpectrum, HarnessError> {
    if model.sigma == 0.0 {
        return Ok(spectrum.clone());
    }
    let values: Vec<Complex64> = spectrum
        .values()
        .par_iter()
        .enumerate()
        .map(|(i, v)| v + model.complex_sample(trace, i))
        .collect();
    Ok(spectrum.with_values(values)?)
}

pub fn inject_real_noise(values: &[f64], model: &NoiseModel, trace: u32) -> Vec<f64> {
    values
        .par_iter()
        .enumerate()
        .map(|(i, v)| v + model.real_sample(trace, i))
        .collect()
}
