//! Subcommand bodies. Every file-writing command is a [`Job`], so that a
//! manifest can name it and replay it.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use electromech::constants::{hz_to_rad, rad_to_hz};
use electromech::device::lc_resonance;
use electromech::features::doublet_separation;
use electromech::fit::{
    fit_backaction, fit_cavity, fit_coupling_with, fit_mechanical, BackactionMode, CouplingFitOptions, Dataset,
    FitResult,
};
use electromech::formats::{
    parse_noise_csv, parse_spectrum_csv, write_map_csv, write_noise_csv, write_rows, write_spectrum_csv, NoiseTable,
    ParamRecord, RunManifest, SpectrumTable,
};
use electromech::harness::{
    backaction_roundtrip, cavity_roundtrip, coupling_roundtrip, detuning_sweep, inject_real_noise,
    mechanical_noise_spectrum, power_sweep, power_sweep_grid, probe_sweep, two_tone_map, NoiseModel, RoundTrip,
};
use electromech::response::backaction;
use electromech::spectrum::linear_grid;
use electromech::{Coupling, DeviceParams, DriveConfig};
use serde::{Deserialize, Serialize};

use crate::output::{write_run, Outputs};

/// A run finished but its numbers cannot be trusted (non-convergence,
/// failed comparison). Maps to exit status 1.
#[derive(Debug)]
pub struct NumericalFailure(pub String);

impl fmt::Display for NumericalFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for NumericalFailure {}

/// Probe or sweep grid size, overridable on every generating command.
#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
pub struct GridArgs {
    /// Number of grid points.
    #[arg(long)]
    pub points: Option<usize>,
    /// Half-span of the grid in Hz.
    #[arg(long, value_name = "HZ")]
    pub span_hz: Option<f64>,
}

impl GridArgs {
    fn resolve(&self, default_span_hz: f64, default_points: usize) -> (f64, usize) {
        (self.span_hz.unwrap_or(default_span_hz), self.points.unwrap_or(default_points))
    }

    fn given(&self) -> bool {
        self.points.is_some() || self.span_hz.is_some()
    }

    fn validate(&self) -> Result<()> {
        if let Some(n) = self.points {
            if n < 2 {
                bail!("--points must be at least 2, got {n}");
            }
        }
        if let Some(s) = self.span_hz {
            if !(s.is_finite() && s > 0.0) {
                bail!("--span-hz must be positive, got {s}");
            }
        }
        Ok(())
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumArgs {
    /// Intracavity drive photon number.
    #[arg(long, default_value_t = 0.0)]
    pub nd: f64,
    /// Relative detuning δ of the drive's upper sideband from the cavity, Hz.
    #[arg(long, value_name = "HZ", default_value_t = 0.0, allow_hyphen_values = true)]
    pub delta_hz: f64,
    /// Additive complex noise, standard deviation per quadrature.
    #[arg(long)]
    pub noise: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct PowerArgs {
    /// Photon numbers to sweep (comma separated). Default: 12 log-spaced
    /// values from 1 to 5e6.
    #[arg(long, value_delimiter = ',')]
    pub nd: Vec<f64>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct DetuningArgs {
    /// Incident drive power in W.
    #[arg(long, value_name = "W", default_value_t = 1e-11)]
    pub power_w: f64,
    /// Noise added to Ω′m/2π and Γ′m/2π, Hz.
    #[arg(long, value_name = "HZ")]
    pub noise_hz: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct MapArgs {
    /// Intracavity drive photon number (held fixed across drive frequency).
    #[arg(long, default_value_t = 1e4)]
    pub nd: f64,
    /// Half-span of the drive grid around ωc − Ωm, Hz.
    #[arg(long, value_name = "HZ", default_value_t = 3e5)]
    pub drive_span_hz: f64,
    #[arg(long, default_value_t = 121)]
    pub drive_points: usize,
    #[arg(long)]
    pub noise: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct NoiseArgs {
    #[arg(long, default_value_t = 0.0)]
    pub nd: f64,
    #[arg(long, value_name = "HZ", default_value_t = 0.0, allow_hyphen_values = true)]
    pub delta_hz: f64,
    /// Additive noise on the power spectral density (units of the output).
    #[arg(long)]
    pub noise: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    Cavity,
    Mechanical,
    Coupling,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct FitArgs {
    #[arg(long, value_enum)]
    pub model: FitModel,
    /// Spectrum CSV (cavity, coupling) or noise CSV (mechanical).
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    /// Relative detuning of the drive used to take the spectrum (coupling).
    #[arg(long, value_name = "HZ", default_value_t = 0.0, allow_hyphen_values = true)]
    pub delta_hz: f64,
    /// Also fit a constant complex background (coupling).
    #[arg(long)]
    pub background: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundtripModel {
    Cavity,
    Coupling,
    Backaction,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct RoundtripArgs {
    #[arg(long, value_enum)]
    pub model: RoundtripModel,
    /// Drive photon number (coupling).
    #[arg(long, default_value_t = 1e5)]
    pub nd: f64,
    /// Relative detuning (coupling), Hz.
    #[arg(long, value_name = "HZ", default_value_t = 0.0, allow_hyphen_values = true)]
    pub delta_hz: f64,
    /// Drive power (backaction), W.
    #[arg(long, value_name = "W", default_value_t = 1e-11)]
    pub power_w: f64,
    /// Noise σ: per quadrature of T (cavity, coupling) or in Hz on Ω′m/2π
    /// and Γ′m/2π (backaction).
    #[arg(long)]
    pub noise: Option<f64>,
    /// Pass band in reported standard errors when noise is on.
    #[arg(long, default_value_t = 3.0)]
    pub sigmas: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone)]
pub enum Job {
    Spectrum(SpectrumArgs),
    SweepPower(PowerArgs),
    SweepDetuning(DetuningArgs),
    Map(MapArgs),
    NoiseSpectrum(NoiseArgs),
    Fit(FitArgs),
    Roundtrip(RoundtripArgs),
}

fn non_negative(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v >= 0.0) {
        bail!("{name} must be finite and >= 0, got {v}");
    }
    Ok(())
}

fn noise_level(v: Option<f64>) -> Result<()> {
    match v {
        Some(s) => non_negative("--noise", s),
        None => Ok(()),
    }
}

impl Job {
    pub fn name(&self) -> &'static str {
        match self {
            Job::Spectrum(_) => "spectrum",
            Job::SweepPower(_) => "sweep-power",
            Job::SweepDetuning(_) => "sweep-detuning",
            Job::Map(_) => "map",
            Job::NoiseSpectrum(_) => "noise-spectrum",
            Job::Fit(_) => "fit",
            Job::Roundtrip(_) => "roundtrip",
        }
    }

    fn args_json(&self) -> serde_json::Value {
        let value = match self {
            Job::Spectrum(a) => serde_json::to_value(a),
            Job::SweepPower(a) => serde_json::to_value(a),
            Job::SweepDetuning(a) => serde_json::to_value(a),
            Job::Map(a) => serde_json::to_value(a),
            Job::NoiseSpectrum(a) => serde_json::to_value(a),
            Job::Fit(a) => serde_json::to_value(a),
            Job::Roundtrip(a) => serde_json::to_value(a),
        };
        value.expect("arguments are plain data")
    }

    pub fn from_manifest(manifest: &RunManifest) -> Result<Self> {
        let args = manifest.args.clone();
        let job = match manifest.subcommand.as_str() {
            "spectrum" => Job::Spectrum(serde_json::from_value(args)?),
            "sweep-power" => Job::SweepPower(serde_json::from_value(args)?),
            "sweep-detuning" => Job::SweepDetuning(serde_json::from_value(args)?),
            "map" => Job::Map(serde_json::from_value(args)?),
            "noise-spectrum" => Job::NoiseSpectrum(serde_json::from_value(args)?),
            "fit" => Job::Fit(serde_json::from_value(args)?),
            "roundtrip" => Job::Roundtrip(serde_json::from_value(args)?),
            other => bail!("manifest names unknown subcommand `{other}`"),
        };
        Ok(job)
    }

    /// Flag checks that need no computation.
    pub fn validate(&self) -> Result<()> {
        match self {
            Job::Spectrum(a) => {
                non_negative("--nd", a.nd)?;
                noise_level(a.noise)?;
                a.grid.validate()
            }
            Job::SweepPower(a) => {
                for &n in &a.nd {
                    non_negative("--nd", n)?;
                }
                noise_level(a.noise)?;
                a.grid.validate()
            }
            Job::SweepDetuning(a) => {
                non_negative("--power-w", a.power_w)?;
                noise_level(a.noise_hz)?;
                a.grid.validate()
            }
            Job::Map(a) => {
                non_negative("--nd", a.nd)?;
                noise_level(a.noise)?;
                if !(a.drive_span_hz.is_finite() && a.drive_span_hz > 0.0) || a.drive_points < 2 {
                    bail!("drive grid needs a positive span and at least 2 points");
                }
                a.grid.validate()
            }
            Job::NoiseSpectrum(a) => {
                non_negative("--nd", a.nd)?;
                noise_level(a.noise)?;
                a.grid.validate()
            }
            Job::Fit(_) => Ok(()),
            Job::Roundtrip(a) => {
                non_negative("--nd", a.nd)?;
                non_negative("--power-w", a.power_w)?;
                noise_level(a.noise)?;
                a.grid.validate()
            }
        }
    }
}

fn noise_model(sigma: Option<f64>, seed: u64) -> Result<Option<NoiseModel>> {
    Ok(match sigma {
        Some(s) if s > 0.0 => Some(NoiseModel::new(s, seed)?),
        _ => None,
    })
}

/// Runs `job`, writes its outputs and manifest into `out`.
pub fn execute(job: &Job, record: &ParamRecord, seed: u64, out: &Path) -> Result<()> {
    let params = record.to_params()?;
    let mut outputs = Outputs::default();
    let verdict = match job {
        Job::Spectrum(a) => spectrum(a, &params, seed, &mut outputs),
        Job::SweepPower(a) => sweep_power(a, &params, seed, &mut outputs),
        Job::SweepDetuning(a) => sweep_detuning(a, &params, seed, &mut outputs),
        Job::Map(a) => map(a, &params, seed, &mut outputs),
        Job::NoiseSpectrum(a) => noise_spectrum(a, &params, seed, &mut outputs),
        Job::Fit(a) => fit(a, &params, &mut outputs),
        Job::Roundtrip(a) => roundtrip(a, &params, seed, &mut outputs),
    }?;
    let manifest = write_run(out, job.name(), record, seed, job.args_json(), outputs)?;
    println!("manifest: {}", manifest.display());
    match verdict {
        Verdict::Pass => Ok(()),
        Verdict::Fail(why) => Err(NumericalFailure(why).into()),
    }
}

/// Outputs are written either way; a failing verdict sets the exit status.
enum Verdict {
    Pass,
    Fail(String),
}

pub fn replay(path: &Path, out: &Path) -> Result<()> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let manifest = RunManifest::parse(&text).with_context(|| format!("in manifest {}", path.display()))?;
    if manifest.version != env!("CARGO_PKG_VERSION") {
        eprintln!(
            "warning: manifest written by version {}, replaying with {}",
            manifest.version,
            env!("CARGO_PKG_VERSION")
        );
    }
    let job = Job::from_manifest(&manifest).context("manifest arguments")?;
    job.validate()?;
    execute(&job, &manifest.params, manifest.seed.unwrap_or(0), out)
}

pub fn figures(params: &DeviceParams, json: bool) -> Result<()> {
    let f = params.figures_of_merit();
    let f_lc = rad_to_hz(lc_resonance(params.inductance(), params.capacitance())?);
    let rows: Vec<(&str, f64, &str)> = vec![
        ("f_cavity", rad_to_hz(params.omega_c()), "Hz"),
        ("f_lc", f_lc, "Hz"),
        ("q_mechanical", f.q_mechanical, ""),
        ("sideband_ratio", f.sideband_ratio, ""),
        ("kappa_over_gamma_m", f.cooling_factor, ""),
        ("n_cavity", f.n_cavity, ""),
        ("n_mech", f.n_mech, ""),
        ("gamma_th", rad_to_hz(f.gamma_th), "Hz"),
        ("storage_time", f.storage_time, "s"),
        ("group_delay", f.group_delay, "s"),
        ("x_zp", f.x_zp, "m"),
        ("g0", rad_to_hz(f.g0), "Hz"),
        ("cavity_pull", rad_to_hz(params.cavity_pull()), "Hz/m"),
    ];
    if json {
        let map: serde_json::Map<String, serde_json::Value> =
            rows.iter().map(|(k, v, _)| (k.to_string(), serde_json::json!(v))).collect();
        println!("{}", serde_json::to_string_pretty(&map)?);
    } else {
        println!("{:<20} {:>16}  unit", "quantity", "value");
        for (name, value, unit) in rows {
            println!("{name:<20} {value:>16.6e}  {unit}");
        }
    }
    Ok(())
}

fn spectrum(a: &SpectrumArgs, params: &DeviceParams, seed: u64, outputs: &mut Outputs) -> Result<Verdict> {
    let (span, points) = a.grid.resolve(2.5e6, 2001);
    let centre = rad_to_hz(params.omega_c());
    let grid = linear_grid(params.omega_c(), hz_to_rad(span), points)?;
    let drive = DriveConfig::red_sideband(params, hz_to_rad(a.delta_hz), Coupling::Photons(a.nd))?;
    let noise = noise_model(a.noise, seed)?;
    let s = probe_sweep(params, &drive, &grid, noise.as_ref())?;
    println!("g/2pi = {:.6e} Hz", rad_to_hz(drive.coupling_rate(params)));
    if let Some(sep) = doublet_separation(s.frequencies(), &s.magnitudes()) {
        println!("two deepest minima {:.6e} Hz apart", rad_to_hz(sep));
    }
    outputs.grid("probe", centre, span, points);
    outputs.file("spectrum.csv", write_spectrum_csv(&SpectrumTable::from_spectrum(&s)));
    Ok(Verdict::Pass)
}

#[derive(Serialize)]
struct PowerRow {
    n_d: f64,
    g_true_hz: f64,
    g_fit_hz: Option<f64>,
    g_sigma_hz: Option<f64>,
    converged: bool,
    splitting_hz: Option<f64>,
    resolved: bool,
}

fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}

fn sweep_power(a: &PowerArgs, params: &DeviceParams, seed: u64, outputs: &mut Outputs) -> Result<Verdict> {
    let list = if a.nd.is_empty() {
        log_spaced(1.0, 5e6, 12)
    } else {
        a.nd.clone()
    };
    let grid = if a.grid.given() {
        let (span, points) = a.grid.resolve(2.5e6, 2001);
        outputs.grid("probe", rad_to_hz(params.omega_c()), span, points);
        linear_grid(params.omega_c(), hz_to_rad(span), points)?
    } else {
        outputs.grid("probe", rad_to_hz(params.omega_c()), 2.5e6, 2001);
        outputs.grid("probe_centre", rad_to_hz(params.omega_c()), 2e3, 401);
        power_sweep_grid(params)
    };
    let noise = noise_model(a.noise, seed)?;
    let sweep = power_sweep(params, &list, &grid, noise.as_ref())?;
    let mut failures = Vec::new();
    let rows: Vec<PowerRow> = sweep
        .points
        .iter()
        .map(|p| {
            let fit = p.fit.as_ref().ok();
            let converged = fit.is_some_and(|f| f.converged);
            if !converged {
                failures.push(p.n_d);
            }
            PowerRow {
                n_d: p.n_d,
                g_true_hz: rad_to_hz(p.g_true),
                g_fit_hz: fit.and_then(|f| f.get("g")).map(rad_to_hz),
                g_sigma_hz: fit.and_then(|f| f.std_error("g")).map(rad_to_hz),
                converged,
                splitting_hz: p.splitting.map(rad_to_hz),
                resolved: p.resolved,
            }
        })
        .collect();
    outputs.file("power_sweep.csv", write_rows(&rows)?);
    if let Some(n) = sweep.crossover() {
        println!("first swept n_d with resolved normal modes: {n:.4e}");
    }
    match &sweep.sqrt_law {
        Ok(f) => {
            let g0 = rad_to_hz(f.get("g0").unwrap_or(f64::NAN));
            println!("g0/2pi = {g0:.6e} Hz (device: {:.6e} Hz)", rad_to_hz(params.g0()));
        }
        Err(e) => return Ok(Verdict::Fail(format!("square-root law fit failed: {e}"))),
    }
    if !failures.is_empty() {
        return Ok(Verdict::Fail(format!("coupling fit did not converge at n_d = {failures:?}")));
    }
    Ok(Verdict::Pass)
}

#[derive(Serialize)]
struct DetuningRow {
    delta_hz: f64,
    n_d: f64,
    g_hz: f64,
    omega_m_eff_hz: f64,
    gamma_m_eff_hz: f64,
}

fn sweep_detuning(a: &DetuningArgs, params: &DeviceParams, seed: u64, outputs: &mut Outputs) -> Result<Verdict> {
    let (span, points) = a.grid.resolve(6e5, 61);
    let deltas = linear_grid(0.0, hz_to_rad(span), points)?;
    let sweep = detuning_sweep(params, a.power_w, &deltas)?;
    let mut points_fit = sweep.backaction_points();
    if let Some(m) = noise_model(a.noise_hz.map(hz_to_rad), seed)? {
        let shifts = inject_real_noise(&points_fit.iter().map(|p| p.omega_m_eff).collect::<Vec<_>>(), &m, 0);
        let damping = inject_real_noise(&points_fit.iter().map(|p| p.gamma_m_eff).collect::<Vec<_>>(), &m, 1);
        for (p, (s, d)) in points_fit.iter_mut().zip(shifts.into_iter().zip(damping)) {
            p.omega_m_eff = s;
            p.gamma_m_eff = d;
        }
    }
    let rows: Vec<DetuningRow> = sweep
        .points
        .iter()
        .zip(&points_fit)
        .map(|(p, q)| DetuningRow {
            delta_hz: rad_to_hz(p.delta),
            n_d: p.n_d,
            g_hz: rad_to_hz(p.g),
            omega_m_eff_hz: rad_to_hz(q.omega_m_eff),
            gamma_m_eff_hz: rad_to_hz(q.gamma_m_eff),
        })
        .collect();
    outputs.grid("delta", 0.0, span, points);
    outputs.file("detuning.csv", write_rows(&rows)?);
    let fit = fit_backaction(&points_fit, params, sweep.photons_at_zero(), BackactionMode::Both)?;
    println!("n_d(delta = 0) = {:.6e}", sweep.photons_at_zero());
    println!("g0/2pi = {:.6e} Hz", rad_to_hz(fit.get("g0").unwrap_or(f64::NAN)));
    println!("|G|/2pi = {:.6e} Hz/m", rad_to_hz(fit.get("cavity_pull").unwrap_or(f64::NAN)));
    outputs.file("detuning_fit.json", fit_report_json(&fit)?);
    Ok(verdict_for(&fit))
}

fn map(a: &MapArgs, params: &DeviceParams, seed: u64, outputs: &mut Outputs) -> Result<Verdict> {
    let (span, points) = a.grid.resolve(2e6, 801);
    let drive_centre = params.omega_c() - params.omega_m();
    let drives = linear_grid(drive_centre, hz_to_rad(a.drive_span_hz), a.drive_points)?;
    let probes = linear_grid(params.omega_c(), hz_to_rad(span), points)?;
    let noise = noise_model(a.noise, seed)?;
    let m = two_tone_map(params, &drives, &probes, Coupling::Photons(a.nd), noise.as_ref())?;
    if let Some(gap) = m.min_mode_separation() {
        let g = params.coupling_for_photons(a.nd)?;
        println!(
            "smallest mode separation {:.6e} Hz (2g/2pi = {:.6e} Hz)",
            rad_to_hz(gap),
            rad_to_hz(2.0 * g)
        );
    }
    outputs.grid("drive", rad_to_hz(drive_centre), a.drive_span_hz, a.drive_points);
    outputs.grid("probe", rad_to_hz(params.omega_c()), span, points);
    outputs.file("map.csv", write_map_csv(&m.to_table()));
    Ok(Verdict::Pass)
}

fn noise_spectrum(a: &NoiseArgs, params: &DeviceParams, seed: u64, outputs: &mut Outputs) -> Result<Verdict> {
    let drive = DriveConfig::red_sideband(params, hz_to_rad(a.delta_hz), Coupling::Photons(a.nd))?;
    let b = backaction(drive.relative_detuning(params), drive.coupling_rate(params), params);
    let (span, points) = a.grid.resolve(10.0 * rad_to_hz(b.gamma_m_eff), 401);
    let offsets = linear_grid(b.omega_m_eff, hz_to_rad(span), points)?;
    let noise = noise_model(a.noise, seed)?;
    let data = mechanical_noise_spectrum(params, &drive, &offsets, 1.0, noise.as_ref())?;
    let power = match data.y() {
        electromech::fit::Ordinate::Real(v) => v.clone(),
        electromech::fit::Ordinate::Complex(v) => v.iter().map(|c| c.re).collect(),
    };
    let table = NoiseTable {
        freq_hz: offsets.iter().map(|&w| rad_to_hz(w)).collect(),
        power,
    };
    println!(
        "Omega_m'/2pi = {:.9e} Hz, Gamma_m'/2pi = {:.6e} Hz",
        rad_to_hz(b.omega_m_eff),
        rad_to_hz(b.gamma_m_eff)
    );
    outputs.grid("offset", rad_to_hz(b.omega_m_eff), span, points);
    outputs.file("noise.csv", write_noise_csv(&table));
    Ok(Verdict::Pass)
}

#[derive(Serialize)]
struct EstimateRow<'a> {
    name: &'a str,
    value: f64,
    sigma: Option<f64>,
    unit: &'static str,
}

#[derive(Serialize)]
struct FitReport<'a> {
    model: &'a str,
    converged: bool,
    iterations: usize,
    residual_norm: f64,
    residual_count: usize,
    estimates: Vec<EstimateRow<'a>>,
}

/// Divisor and unit that turn an angular estimate into the file convention.
fn unit_of(name: &str) -> (f64, &'static str) {
    let tau = std::f64::consts::TAU;
    match name {
        "omega_c" | "kappa" | "kappa_ex" | "kappa_0" | "omega_m" | "gamma_m" | "g" | "g0" => (tau, "Hz"),
        "g_squared" => (tau * tau, "Hz^2"),
        "cavity_pull" => (tau, "Hz/m"),
        "area" => (tau, "power*Hz"),
        "phase" => (1.0, "rad"),
        _ => (1.0, ""),
    }
}

fn fit_report_json(fit: &FitResult) -> Result<String> {
    let estimates = fit
        .names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let (div, unit) = unit_of(name);
            EstimateRow {
                name,
                value: fit.estimates[i] / div,
                sigma: fit.std_errors.as_ref().map(|s| s[i] / div),
                unit,
            }
        })
        .collect();
    let report = FitReport {
        model: &fit.model_id,
        converged: fit.converged,
        iterations: fit.iterations,
        residual_norm: fit.residual_norm,
        residual_count: fit.residual_count,
        estimates,
    };
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    Ok(text)
}

fn verdict_for(fit: &FitResult) -> Verdict {
    if fit.converged {
        Verdict::Pass
    } else {
        Verdict::Fail(format!("{} fit did not converge", fit.model_id))
    }
}

fn print_fit(fit: &FitResult) {
    for (i, name) in fit.names.iter().enumerate() {
        let (div, unit) = unit_of(name);
        let sigma = fit
            .std_errors
            .as_ref()
            .map_or(String::from("-"), |s| format!("{:.3e}", s[i] / div));
        println!("{name:<12} {:>22.12e} +/- {sigma:<10} {unit}", fit.estimates[i] / div);
    }
}

fn fit(a: &FitArgs, params: &DeviceParams, outputs: &mut Outputs) -> Result<Verdict> {
    let text = std::fs::read_to_string(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let input = || format!("in {}", a.input.display());
    let result = match a.model {
        FitModel::Cavity => {
            let spectrum = parse_spectrum_csv(&text).with_context(input)?.to_spectrum().with_context(input)?;
            fit_cavity(&spectrum)?
        }
        FitModel::Coupling => {
            let spectrum = parse_spectrum_csv(&text).with_context(input)?.to_spectrum().with_context(input)?;
            let drive = DriveConfig::red_sideband(params, hz_to_rad(a.delta_hz), Coupling::Rate(0.0))?;
            let options = CouplingFitOptions {
                background: a.background,
                ..CouplingFitOptions::default()
            };
            fit_coupling_with(&spectrum, params, &drive, &options)?
        }
        FitModel::Mechanical => {
            let table = parse_noise_csv(&text).with_context(input)?;
            let x = table.freq_hz.iter().map(|&f| hz_to_rad(f)).collect();
            fit_mechanical(&Dataset::real(x, table.power).with_context(input)?)?
        }
    };
    print_fit(&result);
    outputs.file("fit.json", fit_report_json(&result)?);
    Ok(verdict_for(&result))
}

#[derive(Serialize)]
struct ComparisonRow<'a> {
    name: &'a str,
    unit: &'static str,
    truth: f64,
    estimate: f64,
    sigma: Option<f64>,
    rel_error: f64,
    pass: bool,
}

/// Noiseless runs must match to this relative error.
const EXACT_TOLERANCE: f64 = 1e-6;

fn roundtrip(a: &RoundtripArgs, params: &DeviceParams, seed: u64, outputs: &mut Outputs) -> Result<Verdict> {
    let kappa_hz = rad_to_hz(params.kappa());
    let rt: RoundTrip = match a.model {
        RoundtripModel::Cavity | RoundtripModel::Coupling => {
            let default_span = if a.model == RoundtripModel::Cavity { 6.0 } else { 15.0 } * kappa_hz;
            let (span, points) = a.grid.resolve(default_span, 2001);
            outputs.grid("probe", rad_to_hz(params.omega_c()), span, points);
            let grid = linear_grid(params.omega_c(), hz_to_rad(span), points)?;
            let noise = noise_model(a.noise, seed)?;
            if a.model == RoundtripModel::Cavity {
                cavity_roundtrip(params, &grid, noise.as_ref())?
            } else {
                coupling_roundtrip(params, a.nd, hz_to_rad(a.delta_hz), &grid, noise.as_ref())?
            }
        }
        RoundtripModel::Backaction => {
            let (span, points) = a.grid.resolve(6e5, 61);
            outputs.grid("delta", 0.0, span, points);
            let deltas = linear_grid(0.0, hz_to_rad(span), points)?;
            let noise = noise_model(a.noise.map(hz_to_rad), seed)?;
            backaction_roundtrip(params, a.power_w, &deltas, noise.as_ref())?
        }
    };
    let noisy = a.noise.is_some_and(|s| s > 0.0);
    let rows: Vec<ComparisonRow> = rt
        .comparisons
        .iter()
        .map(|c| {
            let (div, unit) = unit_of(&c.name);
            let pass = if noisy {
                c.within_sigma(a.sigmas)
            } else {
                c.rel_error() <= EXACT_TOLERANCE
            };
            ComparisonRow {
                name: &c.name,
                unit,
                truth: c.truth / div,
                estimate: c.estimate / div,
                sigma: c.sigma.map(|s| s / div),
                rel_error: c.rel_error(),
                pass,
            }
        })
        .collect();
    println!("{:<12} {:>20} {:>20} {:>10} {:>10}  result", "quantity", "truth", "estimate", "rel err", "sigma");
    for r in &rows {
        let sigma = r.sigma.map_or(String::from("-"), |s| format!("{s:.2e}"));
        let verdict = if r.pass { "PASS" } else { "FAIL" };
        println!(
            "{:<12} {:>20.12e} {:>20.12e} {:>10.2e} {:>10}  {verdict} ({})",
            r.name, r.truth, r.estimate, r.rel_error, sigma, r.unit
        );
    }
    let failed: Vec<&str> = rows.iter().filter(|r| !r.pass).map(|r| r.name).collect();
    outputs.file("roundtrip.csv", write_rows(&rows)?);
    if !rt.fit.converged {
        return Ok(Verdict::Fail("fit did not converge".into()));
    }
    if !failed.is_empty() {
        return Ok(Verdict::Fail(format!("estimates outside tolerance: {}", failed.join(", "))));
    }
    Ok(Verdict::Pass)
}
