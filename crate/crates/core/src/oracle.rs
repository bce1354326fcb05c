//! Independent checks of the closed-form dressed transmission.
//!
//! Both solvers work directly from the linearized Langevin equations in the
//! physics convention (time dependence e^{−iωt}), with the cavity in the
//! frame rotating at the drive and the mechanics in the lab frame:
//!
//! ```text
//! da/dt = (iΔ − κ/2)·a + ig(b + b†) + √(κex/2)·a_in
//! db/dt = (−iΩm − Γm/2)·b + ig(a + a†)
//! a_out = a_in − √(κex/2)·a
//! ```
//!
//! The closed form uses the engineering +j convention, which is the complex
//! conjugate for real parameters; results are conjugated before returning.

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::device::DeviceParams;
use crate::response::{normal_modes_at, DriveConfig};

/// Upper bound on integration steps for a single time-domain run.
pub const MAX_STEPS: u64 = 10_000_000;

/// Demodulated windows must agree to this relative level.
pub const STEADY_STATE_DRIFT: f64 = 1e-4;

/// Settling time in units of the slowest amplitude-decay time.
const SETTLE_DECAY_TIMES: f64 = 14.0;

/// Integration step as a fraction of the fastest period in the rotating frame.
const STEPS_PER_FAST_PERIOD: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("sideband system is singular")]
    Singular,
    #[error("steady state not reached: relative drift {drift:.3e} between demodulation windows")]
    NonConvergent { drift: f64 },
    #[error("run needs {steps} steps, above the budget of {MAX_STEPS}")]
    StepBudget { steps: u64 },
    #[error("demodulation needs at least one cycle")]
    NoCycles,
}

/// Which response amplitudes the harmonic-balance solve keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Truncation {
    /// Probe, idler and both mechanical amplitudes.
    #[default]
    Full,
    /// Idler (a† at the probe beat) removed.
    NoIdler,
}

/// Steady-state response amplitudes at the probe beat frequency Ω = ωp − ωd,
/// for unit probe input, in the physics convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SidebandBasis {
    /// Cavity amplitude at the probe frequency.
    pub probe: Complex64,
    /// Conjugate cavity amplitude at the idler frequency 2ωd − ωp.
    pub idler: Complex64,
    /// Mechanical amplitude b at the beat frequency.
    pub mechanical: Complex64,
    /// Conjugate mechanical amplitude b† at the beat frequency.
    pub mechanical_conj: Complex64,
    /// ‖M·u − rhs‖ / ‖rhs‖ after substituting the solution back.
    pub relative_residual: f64,
}

/// Offsets used by both solvers: (ωp − ωc, ωd − ωc).
fn offsets(omega_p: f64, drive: &DriveConfig, params: &DeviceParams) -> (f64, f64) {
    let wc = params.omega_c();
    (omega_p - wc, drive.omega_d() - wc)
}

/// Solves the four coupled amplitude equations for a unit probe.
pub fn sideband_amplitudes(
    omega_p: f64,
    drive: &DriveConfig,
    params: &DeviceParams,
    truncation: Truncation,
) -> Result<SidebandBasis, OracleError> {
    let (probe, det) = offsets(omega_p, drive, params);
    let beat = probe - det;
    let g = drive.coupling_rate(params);
    let i = Complex64::i();
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let half_k = params.kappa() / 2.0;
    let half_gm = params.gamma_m() / 2.0;
    let wm = params.omega_m();
    let ig = i * g;
    let input = (params.kappa_ex() / 2.0).sqrt();

    // rows: a(Ω), a†(Ω), b(Ω), b†(Ω)
    let a_diag = c(half_k, -probe);
    let idler_diag = c(half_k, -(probe - 2.0 * det));
    let b_diag = c(half_gm, wm - beat);
    let bc_diag = c(half_gm, -(wm + beat));
    let zero = c(0.0, 0.0);

    match truncation {
        Truncation::Full => {
            #[rustfmt::skip]
            let m = Matrix4::new(
                a_diag, zero,       -ig,    -ig,
                zero,   idler_diag,  ig,     ig,
                -ig,    -ig,         b_diag, zero,
                ig,     ig,          zero,   bc_diag,
            );
            let rhs = Vector4::new(c(input, 0.0), zero, zero, zero);
            let u = m.lu().solve(&rhs).ok_or(OracleError::Singular)?;
            if u.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(OracleError::Singular);
            }
            let residual = (m * u - rhs).norm() / rhs.norm();
            Ok(SidebandBasis {
                probe: u[0],
                idler: u[1],
                mechanical: u[2],
                mechanical_conj: u[3],
                relative_residual: residual,
            })
        }
        Truncation::NoIdler => {
            #[rustfmt::skip]
            let m = Matrix3::new(
                a_diag, -ig,    -ig,
                -ig,    b_diag, zero,
                ig,     zero,   bc_diag,
            );
            let rhs = Vector3::new(c(input, 0.0), zero, zero);
            let u = m.lu().solve(&rhs).ok_or(OracleError::Singular)?;
            if u.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(OracleError::Singular);
            }
            let residual = (m * u - rhs).norm() / rhs.norm();
            Ok(SidebandBasis {
                probe: u[0],
                idler: zero,
                mechanical: u[1],
                mechanical_conj: u[2],
                relative_residual: residual,
            })
        }
    }
}

/// Probe transmission from the harmonic-balance solve, in the +j convention.
pub fn sideband_linear_solve(
    omega_p: f64,
    drive: &DriveConfig,
    params: &DeviceParams,
) -> Result<Complex64, OracleError> {
    sideband_linear_solve_with(omega_p, drive, params, Truncation::Full)
}

pub fn sideband_linear_solve_with(
    omega_p: f64,
    drive: &DriveConfig,
    params: &DeviceParams,
    truncation: Truncation,
) -> Result<Complex64, OracleError> {
    let basis = sideband_amplitudes(omega_p, drive, params, truncation)?;
    let t_physics = 1.0 - (params.kappa_ex() / 2.0).sqrt() * basis.probe;
    Ok(t_physics.conj())
}

/// Copy of `params` with Γm raised to `gamma_over_kappa`·κ, keeping Ωm/κ and
/// everything else. Makes time-domain runs affordable.
pub fn desk_scaled(params: &DeviceParams, gamma_over_kappa: f64) -> DeviceParams {
    let mut spec = params.spec();
    spec.gamma_m = gamma_over_kappa * params.kappa();
    DeviceParams::new(spec).expect("rescaled damping stays valid")
}

/// Sampled amplitudes from a time-domain run.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeTrace {
    pub dt: f64,
    pub duration: f64,
    /// Cavity amplitude a (drive frame).
    pub cavity: Vec<Complex64>,
    /// Mechanical amplitude b (lab frame).
    pub mechanical: Vec<Complex64>,
    pub sample_every: usize,
}

impl TimeTrace {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.cavity.len()).map(|k| (k * self.sample_every) as f64 * self.dt)
    }
}

#[derive(Debug, Clone, Copy)]
struct Equations {
    detuning: f64,
    half_kappa: f64,
    omega_m: f64,
    half_gamma: f64,
    g: f64,
    input: f64,
}

impl Equations {
    fn new(params: &DeviceParams, detuning: f64, g: f64) -> Self {
        Self {
            detuning,
            half_kappa: params.kappa() / 2.0,
            omega_m: params.omega_m(),
            half_gamma: params.gamma_m() / 2.0,
            g,
            input: (params.kappa_ex() / 2.0).sqrt(),
        }
    }

    fn rhs(&self, a: Complex64, b: Complex64, drive_in: Complex64) -> (Complex64, Complex64) {
        let i = Complex64::i();
        let x = b + b.conj();
        let y = a + a.conj();
        let da = Complex64::new(-self.half_kappa, self.detuning) * a + i * self.g * x + self.input * drive_in;
        let db = Complex64::new(-self.half_gamma, -self.omega_m) * b + i * self.g * y;
        (da, db)
    }

    /// One classical RK4 step. `inputs` are the probe input at t, t + dt/2, t + dt.
    fn step(&self, a: Complex64, b: Complex64, dt: f64, inputs: [Complex64; 3]) -> (Complex64, Complex64) {
        let (ka1, kb1) = self.rhs(a, b, inputs[0]);
        let (ka2, kb2) = self.rhs(a + ka1 * (dt / 2.0), b + kb1 * (dt / 2.0), inputs[1]);
        let (ka3, kb3) = self.rhs(a + ka2 * (dt / 2.0), b + kb2 * (dt / 2.0), inputs[1]);
        let (ka4, kb4) = self.rhs(a + ka3 * dt, b + kb3 * dt, inputs[2]);
        (
            a + (ka1 + 2.0 * ka2 + 2.0 * ka3 + ka4) * (dt / 6.0),
            b + (kb1 + 2.0 * kb2 + 2.0 * kb3 + kb4) * (dt / 6.0),
        )
    }
}

/// Undriven evolution from the given initial amplitudes.
pub fn free_evolution(
    params: &DeviceParams,
    detuning: f64,
    g: f64,
    initial: (Complex64, Complex64),
    dt: f64,
    steps: usize,
    sample_every: usize,
) -> TimeTrace {
    let eqs = Equations::new(params, detuning, g);
    let zero = Complex64::new(0.0, 0.0);
    let sample_every = sample_every.max(1);
    let (mut a, mut b) = initial;
    let mut cavity = vec![a];
    let mut mechanical = vec![b];
    for n in 1..=steps {
        (a, b) = eqs.step(a, b, dt, [zero; 3]);
        if n % sample_every == 0 {
            cavity.push(a);
            mechanical.push(b);
        }
    }
    TimeTrace {
        dt,
        duration: steps as f64 * dt,
        cavity,
        mechanical,
        sample_every,
    }
}

/// Probe transmission measured by integrating the equations of motion with a
/// unit probe at `omega_p`, waiting for the slowest hybrid mode to settle,
/// then demodulating the output over `cycles` beat periods. Returns the +j
/// convention value of the last window.
pub fn time_domain_transmission(
    omega_p: f64,
    drive: &DriveConfig,
    params: &DeviceParams,
    cycles: usize,
) -> Result<Complex64, OracleError> {
    if cycles == 0 {
        return Err(OracleError::NoCycles);
    }
    let (probe, det) = offsets(omega_p, drive, params);
    let beat = probe - det;
    let g = drive.coupling_rate(params);

    let fastest = 2.0 * params.omega_m().max(det.abs()).max(beat.abs());
    let period = if beat != 0.0 {
        std::f64::consts::TAU / beat.abs()
    } else {
        std::f64::consts::TAU / fastest
    };
    // whole number of steps per beat period so windows cover exact cycles
    let per_period = (STEPS_PER_FAST_PERIOD * fastest * period / std::f64::consts::TAU).ceil() as u64;
    let per_period = per_period.max(4);
    let dt = period / per_period as f64;

    let slowest = if g > 0.0 {
        normal_modes_at(drive.relative_detuning(params), g, params).slowest_decay()
    } else {
        params.kappa() / 2.0
    };
    let settle_periods = (SETTLE_DECAY_TIMES / slowest / period).ceil() as u64;
    let window_steps = cycles as u64 * per_period;
    let total = settle_periods * per_period + 2 * window_steps;
    if total > MAX_STEPS {
        return Err(OracleError::StepBudget { steps: total });
    }

    // probe input e^{−iΩt} tabulated at half steps; periodic in per_period steps
    let table: Vec<Complex64> = (0..2 * per_period)
        .map(|k| Complex64::from_polar(1.0, -beat * (k as f64) * dt / 2.0))
        .collect();
    let at_half = |half_index: u64| table[(half_index % (2 * per_period)) as usize];

    let eqs = Equations::new(params, det, g);
    let input = eqs.input;
    let (mut a, mut b) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    let mut windows = [Complex64::new(0.0, 0.0); 2];
    let window_start = total - 2 * window_steps;
    for n in 0..total {
        if n >= window_start {
            // demodulate a_out = a_in − √(κex/2)·a against e^{+iΩt}
            let carrier = at_half(2 * n);
            let out = carrier - input * a;
            let w = ((n - window_start) / window_steps) as usize;
            windows[w] += out * carrier.conj();
        }
        let inputs = [at_half(2 * n), at_half(2 * n + 1), at_half(2 * n + 2)];
        (a, b) = eqs.step(a, b, dt, inputs);
    }
    let first = windows[0] / window_steps as f64;
    let last = windows[1] / window_steps as f64;
    let drift = (last - first).norm() / last.norm().max(f64::MIN_POSITIVE);
    if !(drift <= STEADY_STATE_DRIFT) {
        return Err(OracleError::NonConvergent { drift });
    }
    Ok(last.conj())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::response::{bare_transmission, Coupling};

    #[test]
    fn zero_coupling_matches_bare_cavity() {
        let p = DeviceParams::membrane_device();
        let drive = DriveConfig::undriven(&p);
        for k in -20..=20 {
            let wp = p.omega_c() + 0.25 * k as f64 * p.kappa();
            let oracle = sideband_linear_solve(wp, &drive, &p).unwrap();
            let bare = bare_transmission(wp, &p);
            assert!((oracle - bare).norm() <= 1e-12 * bare.norm(), "{oracle} vs {bare}");
        }
    }

    #[test]
    fn substituted_solution_reproduces_inputs() {
        let p = DeviceParams::membrane_device();
        let drive = DriveConfig::red_sideband(&p, 0.2 * p.kappa(), Coupling::Photons(1e5)).unwrap();
        for k in -10..=10 {
            let wp = p.omega_c() + 0.3 * k as f64 * p.kappa();
            for truncation in [Truncation::Full, Truncation::NoIdler] {
                let basis = sideband_amplitudes(wp, &drive, &p, truncation).unwrap();
                assert!(basis.relative_residual < 1e-10, "{}", basis.relative_residual);
            }
        }
    }

    #[test]
    fn bare_cavity_in_time_domain() {
        let p = desk_scaled(&DeviceParams::membrane_device(), 1e-2);
        let drive = DriveConfig::undriven(&p);
        let t = time_domain_transmission(p.omega_c(), &drive, &p, 4).unwrap();
        let expected = 1.0 - p.kappa_ex() / p.kappa();
        assert!((t - expected).norm() < 1e-3, "{t}");
    }

    #[test]
    fn rejects_zero_cycles() {
        let p = DeviceParams::membrane_device();
        let drive = DriveConfig::undriven(&p);
        assert_eq!(
            time_domain_transmission(p.omega_c(), &drive, &p, 0),
            Err(OracleError::NoCycles)
        );
    }

    #[test]
    fn true_mechanical_damping_exceeds_step_budget() {
        let p = DeviceParams::membrane_device();
        let drive = DriveConfig::red_sideband(&p, 0.0, Coupling::Rate(0.01 * p.kappa())).unwrap();
        assert!(matches!(
            time_domain_transmission(p.omega_c(), &drive, &p, 4),
            Err(OracleError::StepBudget { .. })
        ));
    }

    #[test]
    fn deterministic() {
        let p = desk_scaled(&DeviceParams::membrane_device(), 1e-2);
        let drive = DriveConfig::red_sideband(&p, 0.0, Coupling::Rate(2.0 * p.kappa())).unwrap();
        let a = time_domain_transmission(p.omega_c() + 0.5 * p.kappa(), &drive, &p, 2).unwrap();
        let b = time_domain_transmission(p.omega_c() + 0.5 * p.kappa(), &drive, &p, 2).unwrap();
        assert_eq!(a.re.to_bits(), b.re.to_bits());
        assert_eq!(a.im.to_bits(), b.im.to_bits());
    }
}
