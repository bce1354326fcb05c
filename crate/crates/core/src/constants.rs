//! Physical constants and frequency-unit conversions.
//!
//! All constants are CODATA 2018 values. ħ is derived from the exact SI value of
//! the Planck constant, h / 2π, rounded to the nearest double.

use std::f64::consts::TAU;

/// Reduced Planck constant ħ in J·s.
pub const HBAR: f64 = 1.054_571_817_646_156_4e-34;

/// Boltzmann constant k_B in J/K (exact since 2019).
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Vacuum permittivity ε₀ in F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;

/// Ordinary frequency (Hz) to angular frequency (rad/s).
#[inline]
#[must_use]
pub fn hz_to_rad(hz: f64) -> f64 {
    TAU * hz
}

/// Angular frequency (rad/s) to ordinary frequency (Hz).
#[inline]
#[must_use]
pub fn rad_to_hz(omega: f64) -> f64 {
    omega / TAU
}
