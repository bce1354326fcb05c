//! Static device description and the closed-form quantities derived from it.
//!
//! Everything here is in SI units with angular frequencies in rad/s.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::{hz_to_rad, BOLTZMANN, HBAR, VACUUM_PERMITTIVITY};

/// Relative tolerance for the `kappa = kappa_ex + kappa_0` check.
pub const LOSS_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DeviceError {
    #[error("{name} must be strictly positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("{name} must be non-negative, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("{name} must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },
    #[error("eta must lie in (0, 1], got {0}")]
    ParticipationOutOfRange(f64),
    #[error("kappa ({kappa}) != kappa_ex ({kappa_ex}) + kappa_0 ({kappa_0})")]
    InconsistentLoss {
        kappa: f64,
        kappa_ex: f64,
        kappa_0: f64,
    },
}

fn finite(name: &'static str, value: f64) -> Result<f64, DeviceError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(DeviceError::NonFinite { name, value })
    }
}

fn positive(name: &'static str, value: f64) -> Result<f64, DeviceError> {
    finite(name, value)?;
    if value > 0.0 {
        Ok(value)
    } else {
        Err(DeviceError::NonPositive { name, value })
    }
}

fn non_negative(name: &'static str, value: f64) -> Result<f64, DeviceError> {
    finite(name, value)?;
    if value >= 0.0 {
        Ok(value)
    } else {
        Err(DeviceError::Negative { name, value })
    }
}

fn participation(eta: f64) -> Result<f64, DeviceError> {
    if eta.is_finite() && eta > 0.0 && eta <= 1.0 {
        Ok(eta)
    } else {
        Err(DeviceError::ParticipationOutOfRange(eta))
    }
}

/// Unvalidated device description; turn it into [`DeviceParams`] with
/// [`DeviceParams::new`].
///
/// When `cavity_pull` is `None` it is computed from the parallel-plate model
/// using `omega_c`, `gap` and `eta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceSpec {
    pub omega_c: f64,
    pub kappa: f64,
    pub kappa_ex: f64,
    pub kappa_0: f64,
    pub omega_m: f64,
    pub gamma_m: f64,
    pub mass: f64,
    pub gap: f64,
    pub inductance: f64,
    pub capacitance: f64,
    pub eta: f64,
    pub temperature: f64,
    pub cavity_pull: Option<f64>,
}

/// Validated device parameters.
///
/// Construction guarantees `kappa == kappa_ex + kappa_0` (to
/// [`LOSS_SUM_TOLERANCE`]), strictly positive rates, mass, gap, circuit
/// elements and temperature, and `0 < eta <= 1`. The cavity pull
/// `G = dωc/dx` is stored signed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DeviceSpec", into = "DeviceSpec")]
pub struct DeviceParams {
    omega_c: f64,
    kappa: f64,
    kappa_ex: f64,
    kappa_0: f64,
    omega_m: f64,
    gamma_m: f64,
    mass: f64,
    gap: f64,
    inductance: f64,
    capacitance: f64,
    eta: f64,
    temperature: f64,
    cavity_pull: f64,
}

impl DeviceParams {
    pub fn new(spec: DeviceSpec) -> Result<Self, DeviceError> {
        let omega_c = positive("omega_c", spec.omega_c)?;
        let kappa = positive("kappa", spec.kappa)?;
        let kappa_ex = positive("kappa_ex", spec.kappa_ex)?;
        let kappa_0 = non_negative("kappa_0", spec.kappa_0)?;
        let sum = kappa_ex + kappa_0;
        if (kappa - sum).abs() > LOSS_SUM_TOLERANCE * kappa {
            return Err(DeviceError::InconsistentLoss {
                kappa,
                kappa_ex,
                kappa_0,
            });
        }
        let gap = positive("gap", spec.gap)?;
        let eta = participation(spec.eta)?;
        let cavity_pull = match spec.cavity_pull {
            Some(pull) => finite("cavity_pull", pull)?,
            None => parallel_plate_pull(omega_c, gap, eta)?,
        };
        Ok(Self {
            omega_c,
            kappa,
            kappa_ex,
            kappa_0,
            omega_m: positive("omega_m", spec.omega_m)?,
            gamma_m: positive("gamma_m", spec.gamma_m)?,
            mass: positive("mass", spec.mass)?,
            gap,
            inductance: positive("inductance", spec.inductance)?,
            capacitance: positive("capacitance", spec.capacitance)?,
            eta,
            temperature: positive("temperature", spec.temperature)?,
            cavity_pull,
        })
    }

    /// The aluminum-membrane device: 7.47 GHz cavity with κ/2π = 170 kHz
    /// (κex/2π = 130 kHz), a 10.69 MHz drum mode with Γm/2π = 30 Hz and
    /// m = 50 pg, G/2π = 56 MHz/nm, held at 40 mK.
    pub fn membrane_device() -> Self {
        Self::new(DeviceSpec {
            omega_c: hz_to_rad(7.47e9),
            kappa: hz_to_rad(170e3),
            kappa_ex: hz_to_rad(130e3),
            kappa_0: hz_to_rad(40e3),
            omega_m: hz_to_rad(10.69e6),
            gamma_m: hz_to_rad(30.0),
            mass: 50e-15,
            gap: 50e-9,
            inductance: 12e-9,
            capacitance: 38e-15,
            eta: 0.75,
            temperature: 40e-3,
            cavity_pull: Some(-hz_to_rad(56e6) / 1e-9),
        })
        .expect("membrane device parameters are valid")
    }

    /// Back to an editable description, with the cavity pull pinned.
    pub fn spec(&self) -> DeviceSpec {
        DeviceSpec {
            omega_c: self.omega_c,
            kappa: self.kappa,
            kappa_ex: self.kappa_ex,
            kappa_0: self.kappa_0,
            omega_m: self.omega_m,
            gamma_m: self.gamma_m,
            mass: self.mass,
            gap: self.gap,
            inductance: self.inductance,
            capacitance: self.capacitance,
            eta: self.eta,
            temperature: self.temperature,
            cavity_pull: Some(self.cavity_pull),
        }
    }

    pub fn omega_c(&self) -> f64 {
        self.omega_c
    }
    pub fn kappa(&self) -> f64 {
        self.kappa
    }
    pub fn kappa_ex(&self) -> f64 {
        self.kappa_ex
    }
    pub fn kappa_0(&self) -> f64 {
        self.kappa_0
    }
    pub fn omega_m(&self) -> f64 {
        self.omega_m
    }
    pub fn gamma_m(&self) -> f64 {
        self.gamma_m
    }
    pub fn mass(&self) -> f64 {
        self.mass
    }
    pub fn gap(&self) -> f64 {
        self.gap
    }
    pub fn inductance(&self) -> f64 {
        self.inductance
    }
    pub fn capacitance(&self) -> f64 {
        self.capacitance
    }
    pub fn eta(&self) -> f64 {
        self.eta
    }
    pub fn temperature(&self) -> f64 {
        self.temperature
    }
    /// Signed G = dωc/dx in rad/s per metre.
    pub fn cavity_pull(&self) -> f64 {
        self.cavity_pull
    }

    /// Ωm/κ.
    pub fn sideband_ratio(&self) -> f64 {
        self.omega_m / self.kappa
    }

    pub fn is_resolved_sideband(&self) -> bool {
        self.sideband_ratio() > 1.0
    }

    pub fn x_zp(&self) -> f64 {
        // inputs validated positive
        (HBAR / (2.0 * self.mass * self.omega_m)).sqrt()
    }

    /// Single-photon coupling rate g0 = |G|·x_zp in rad/s.
    pub fn g0(&self) -> f64 {
        self.cavity_pull.abs() * self.x_zp()
    }

    /// Linearized coupling rate for `n_d` intracavity drive photons.
    pub fn coupling_for_photons(&self, n_d: f64) -> Result<f64, DeviceError> {
        pumped_coupling(self.g0(), n_d)
    }

    pub fn figures_of_merit(&self) -> FiguresOfMerit {
        FiguresOfMerit::from_params(self)
    }
}

impl TryFrom<DeviceSpec> for DeviceParams {
    type Error = DeviceError;

    fn try_from(spec: DeviceSpec) -> Result<Self, Self::Error> {
        Self::new(spec)
    }
}

impl From<DeviceParams> for DeviceSpec {
    fn from(params: DeviceParams) -> Self {
        params.spec()
    }
}

/// Derived figures of merit. Rates are angular (rad/s), times in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiguresOfMerit {
    pub q_mechanical: f64,
    pub sideband_ratio: f64,
    pub cooling_factor: f64,
    pub n_cavity: f64,
    pub n_mech: f64,
    pub gamma_th: f64,
    pub group_delay: f64,
    pub storage_time: f64,
    pub x_zp: f64,
    pub g0: f64,
}

impl FiguresOfMerit {
    pub fn from_params(params: &DeviceParams) -> Self {
        let omega_m = params.omega_m;
        let gamma_m = params.gamma_m;
        // validated positive frequencies and temperature
        let n_cavity = bose_einstein(params.omega_c, params.temperature);
        let n_mech = bose_einstein(omega_m, params.temperature);
        let gamma_th = n_mech * gamma_m;
        Self {
            q_mechanical: omega_m / gamma_m,
            sideband_ratio: omega_m / params.kappa,
            cooling_factor: params.kappa / gamma_m,
            n_cavity,
            n_mech,
            gamma_th,
            group_delay: 1.0 / gamma_m,
            storage_time: 1.0 / gamma_th,
            x_zp: params.x_zp(),
            g0: params.g0(),
        }
    }
}

/// x_zp = √(ħ / 2mΩm).
pub fn zero_point_motion(mass: f64, omega_m: f64) -> Result<f64, DeviceError> {
    let mass = positive("mass", mass)?;
    let omega_m = positive("omega_m", omega_m)?;
    Ok((HBAR / (2.0 * mass * omega_m)).sqrt())
}

/// Cavity pull of a parallel-plate capacitor whose moving plate carries a
/// fraction `eta` of the total capacitance: G = −η·ωc/(2d).
pub fn parallel_plate_pull(omega_c: f64, gap: f64, eta: f64) -> Result<f64, DeviceError> {
    let omega_c = finite("omega_c", omega_c)?;
    let gap = positive("gap", gap)?;
    let eta = participation(eta)?;
    Ok(-(eta * omega_c) / (2.0 * gap))
}

/// C = A·ε₀/d.
pub fn parallel_plate_capacitance(area: f64, gap: f64) -> Result<f64, DeviceError> {
    let area = positive("area", area)?;
    let gap = positive("gap", gap)?;
    Ok(area * VACUUM_PERMITTIVITY / gap)
}

/// ωc = 1/√(LC).
pub fn lc_resonance(inductance: f64, capacitance: f64) -> Result<f64, DeviceError> {
    let l = positive("inductance", inductance)?;
    let c = positive("capacitance", capacitance)?;
    Ok(1.0 / (l * c).sqrt())
}

/// g0 = |G|·x_zp. The sign of G is irrelevant to the coupling rate.
pub fn single_photon_coupling(cavity_pull: f64, x_zp: f64) -> Result<f64, DeviceError> {
    let pull = finite("cavity_pull", cavity_pull)?;
    let x_zp = non_negative("x_zp", x_zp)?;
    Ok(pull.abs() * x_zp)
}

/// g = g0·√n_d.
pub fn pumped_coupling(g0: f64, n_d: f64) -> Result<f64, DeviceError> {
    let g0 = non_negative("g0", g0)?;
    let n_d = non_negative("n_d", n_d)?;
    Ok(g0 * n_d.sqrt())
}

/// Intracavity drive photon number
/// n_d = 2·P_in·κex / (ħ·ωd·(κ² + 4Δ²)), with Δ = ωd − ωc.
pub fn drive_photon_number(
    p_in: f64,
    omega_d: f64,
    detuning: f64,
    kappa: f64,
    kappa_ex: f64,
) -> Result<f64, DeviceError> {
    let p_in = non_negative("p_in", p_in)?;
    let omega_d = positive("omega_d", omega_d)?;
    let detuning = finite("detuning", detuning)?;
    let kappa = positive("kappa", kappa)?;
    let kappa_ex = non_negative("kappa_ex", kappa_ex)?;
    Ok(2.0 * p_in * kappa_ex / (HBAR * omega_d * (kappa * kappa + 4.0 * detuning * detuning)))
}

/// Bose-Einstein occupancy 1/(exp(ħω/k_B T) − 1); zero at T = 0.
pub fn thermal_occupancy(omega: f64, temperature: f64) -> Result<f64, DeviceError> {
    let omega = positive("omega", omega)?;
    let temperature = non_negative("temperature", temperature)?;
    Ok(bose_einstein(omega, temperature))
}

fn bose_einstein(omega: f64, temperature: f64) -> f64 {
    if temperature == 0.0 {
        return 0.0;
    }
    let x = HBAR * omega / (BOLTZMANN * temperature);
    1.0 / x.exp_m1()
}
