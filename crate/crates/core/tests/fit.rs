//! Estimators against synthetic data with known truth.

use electromech::constants::hz_to_rad;
use electromech::fit::{
    fit_backaction, fit_cavity, fit_mechanical, least_squares, lorentzian, BackactionMode, Dataset, LmOptions,
    ResidualMode,
};
use electromech::harness::{detuning_sweep, inject_noise, inject_real_noise, mechanical_noise_spectrum, NoiseModel};
use electromech::response::{dressed_spectrum, notch_transmission, transmission_with_g_squared};
use electromech::spectrum::linear_grid;
use electromech::{Coupling, DeviceParams, DriveConfig};
use num_complex::Complex64;

fn membrane() -> DeviceParams {
    DeviceParams::membrane_device()
}

/// Every ±20% corner of the parameter box around `truth`.
fn corners(truth: &[f64]) -> Vec<Vec<f64>> {
    (0..1usize << truth.len())
        .map(|mask| {
            truth
                .iter()
                .enumerate()
                .map(|(i, v)| if mask >> i & 1 == 1 { v * 1.2 } else { v * 0.8 })
                .collect()
        })
        .collect()
}

fn real(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

#[test]
fn cavity_model_recovers_truth_from_perturbed_starts() {
    let p = membrane();
    let k = p.kappa();
    let x: Vec<f64> = linear_grid(0.0, 8.0, 801).unwrap();
    // units of κ, centre offset from ωc
    let truth = [0.3, 1.0, p.kappa_ex() / k];
    let model = |x: f64, q: &[f64]| notch_transmission(x - q[0], q[1], q[2]);
    let y: Vec<Complex64> = x.iter().map(|&v| model(v, &truth)).collect();
    let data = Dataset::complex(x, y).unwrap();
    for init in corners(&truth) {
        let fit = least_squares("cavity", &["c", "k", "kex"], model, &data, &init, ResidualMode::Complex, &LmOptions::default())
            .unwrap();
        assert!(fit.converged, "{init:?}");
        for (e, t) in fit.estimates.iter().zip(&truth) {
            assert!(((e - t) / t).abs() < 1e-6, "{init:?}: {e} vs {t}");
        }
    }
}

#[test]
fn lorentzian_recovers_truth_from_perturbed_starts() {
    let x: Vec<f64> = linear_grid(0.0, 10.0, 401).unwrap();
    let truth = [0.4, 1.0, 2.0, 0.05];
    let model = |x: f64, q: &[f64]| real(lorentzian(x, q[0], q[1], q[2]) + q[3]);
    let y: Vec<f64> = x.iter().map(|&v| model(v, &truth).re).collect();
    let data = Dataset::real(x, y).unwrap();
    for init in corners(&truth) {
        let fit = least_squares("mech", &["c", "w", "a", "b"], model, &data, &init, ResidualMode::Complex, &LmOptions::default())
            .unwrap();
        assert!(fit.converged, "{init:?}");
        for (e, t) in fit.estimates.iter().zip(&truth) {
            assert!(((e - t) / t).abs() < 1e-6, "{init:?}: {e} vs {t}");
        }
    }
}

#[test]
fn coupling_model_recovers_truth_from_perturbed_starts() {
    let p = membrane();
    let k = p.kappa();
    let wd = -p.omega_m();
    let x: Vec<f64> = linear_grid(0.0, 6.0 * k, 1201).unwrap();
    for g_over_k in [0.05, 0.8, 3.0] {
        let u = g_over_k * g_over_k;
        let model = |x: f64, q: &[f64]| transmission_with_g_squared(x, wd, q[0] * k * k, &p);
        let y: Vec<Complex64> = x.iter().map(|&v| model(v, &[u])).collect();
        let data = Dataset::complex(x.clone(), y).unwrap();
        for init in corners(&[u]) {
            let fit = least_squares("coupling", &["u"], model, &data, &init, ResidualMode::Complex, &LmOptions::default())
                .unwrap();
            assert!(fit.converged);
            assert!((fit.estimates[0] / u - 1.0).abs() < 1e-6, "{g_over_k}: {}", fit.estimates[0]);
        }
    }
}

#[test]
fn lorentzian_monte_carlo_coverage() {
    let x: Vec<f64> = linear_grid(0.0, 10.0, 201).unwrap();
    let truth = [0.2, 1.0, 1.0, 0.0];
    let peak = lorentzian(0.2, 0.2, 1.0, 1.0);
    let sigma = 0.01 * peak;
    let model = |x: f64, q: &[f64]| real(lorentzian(x, q[0], q[1], q[2]) + q[3]);
    let clean: Vec<f64> = x.iter().map(|&v| model(v, &truth).re).collect();
    let init = [truth[0] + 0.2, 1.2, 0.8, 0.0];
    let mut covered = 0;
    for seed in 0..100 {
        let noisy = inject_real_noise(&clean, &NoiseModel::new(sigma, seed).unwrap(), 0);
        let data = Dataset::real(x.clone(), noisy).unwrap();
        let fit = least_squares("mech", &["c", "w", "a", "b"], model, &data, &init, ResidualMode::Complex, &LmOptions::default())
            .unwrap();
        let se = fit.std_errors.as_ref().unwrap();
        if (0..4).all(|i| (fit.estimates[i] - truth[i]).abs() <= 3.0 * se[i]) {
            covered += 1;
        }
    }
    assert!(covered >= 95, "{covered}/100 within 3 sigma");
}

#[test]
fn reduced_chi_square_calibrated_for_cavity_fits() {
    let p = membrane();
    let grid = linear_grid(p.omega_c(), 6.0 * p.kappa(), 401).unwrap();
    let clean = dressed_spectrum(&grid, &DriveConfig::undriven(&p), &p).unwrap();
    let sigma = 0.01;
    let mean: f64 = (0..100)
        .map(|seed| {
            let noisy = inject_noise(&clean, &NoiseModel::new(sigma, seed).unwrap()).unwrap();
            let fit = fit_cavity(&noisy).unwrap();
            assert!(fit.converged);
            fit.reduced_chi_square(sigma)
        })
        .sum::<f64>()
        / 100.0;
    assert!((0.8..=1.2).contains(&mean), "{mean}");
}

#[test]
fn intrinsic_damping_resolved_on_three_hertz_grid() {
    let p = membrane();
    let offsets = linear_grid(p.omega_m(), hz_to_rad(300.0), 201).unwrap();
    assert!(offsets[1] - offsets[0] <= hz_to_rad(3.0) * (1.0 + 1e-6));
    let data = mechanical_noise_spectrum(&p, &DriveConfig::undriven(&p), &offsets, 1.0, None).unwrap();
    let fit = fit_mechanical(&data).unwrap();
    let gamma = fit.get("gamma_m").unwrap();
    assert!((gamma / p.gamma_m() - 1.0).abs() < 0.01, "{gamma} vs {}", p.gamma_m());
    assert!((fit.get("omega_m").unwrap() / p.omega_m() - 1.0).abs() < 1e-9);
}

#[test]
fn shift_and_damping_fits_agree_within_errors() {
    let p = membrane();
    let deltas = linear_grid(0.0, hz_to_rad(6e5), 61).unwrap();
    let sweep = detuning_sweep(&p, 1e-11, &deltas).unwrap();
    let n_ref = sweep.photons_at_zero();
    let sigma = 0.05 * (sweep.points[30].gamma_m_eff - p.gamma_m());
    for seed in 0..10 {
        let m = NoiseModel::new(sigma, seed).unwrap();
        let mut points = sweep.backaction_points();
        let shifts = inject_real_noise(&points.iter().map(|q| q.omega_m_eff).collect::<Vec<_>>(), &m, 0);
        let damping = inject_real_noise(&points.iter().map(|q| q.gamma_m_eff).collect::<Vec<_>>(), &m, 1);
        for (q, (s, d)) in points.iter_mut().zip(shifts.into_iter().zip(damping)) {
            q.omega_m_eff = s;
            q.gamma_m_eff = d;
        }
        let shift = fit_backaction(&points, &p, n_ref, BackactionMode::ShiftOnly).unwrap();
        let damp = fit_backaction(&points, &p, n_ref, BackactionMode::DampingOnly).unwrap();
        let (a, b) = (shift.get("g").unwrap(), damp.get("g").unwrap());
        let combined = shift.std_error("g").unwrap().hypot(damp.std_error("g").unwrap());
        assert!((a - b).abs() <= 3.0 * combined, "seed {seed}: {a} vs {b} (sigma {combined})");
    }
}

#[test]
fn backaction_fit_recovers_cavity_pull() {
    let p = membrane();
    let deltas = linear_grid(0.0, hz_to_rad(6e5), 61).unwrap();
    let sweep = detuning_sweep(&p, 1e-11, &deltas).unwrap();
    let fit = fit_backaction(&sweep.backaction_points(), &p, sweep.photons_at_zero(), BackactionMode::Both).unwrap();
    let pull = fit.get("cavity_pull").unwrap();
    // 56 MHz/nm
    let expected = hz_to_rad(56e6) / 1e-9;
    assert!((pull / expected - 1.0).abs() < 0.01, "{pull:e} vs {expected:e}");
}

#[test]
fn photon_and_rate_couplings_agree() {
    let p = membrane();
    let a = DriveConfig::red_sideband(&p, 0.0, Coupling::Photons(1e4)).unwrap();
    let b = DriveConfig::red_sideband(&p, 0.0, Coupling::Rate(p.g0() * 100.0)).unwrap();
    let grid = linear_grid(p.omega_c(), p.kappa(), 11).unwrap();
    let sa = dressed_spectrum(&grid, &a, &p).unwrap();
    let sb = dressed_spectrum(&grid, &b, &p).unwrap();
    for (x, y) in sa.values().iter().zip(sb.values()) {
        assert!((x - y).norm() < 1e-12);
    }
}
