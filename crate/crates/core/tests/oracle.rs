//! Cross-checks between the closed-form transmission and the two independent
//! solvers.

use electromech::features::{local_minima, parabolic_vertex};
use electromech::oracle::{
    desk_scaled, free_evolution, sideband_linear_solve, sideband_linear_solve_with, time_domain_transmission,
    Truncation,
};
use electromech::response::{dressed_transmission, normal_modes};
use electromech::spectrum::linear_grid;
use electromech::{Coupling, DeviceParams, DriveConfig};
use num_complex::Complex64;

fn membrane() -> DeviceParams {
    DeviceParams::membrane_device()
}

#[test]
fn closed_form_matches_harmonic_balance_on_factorial_grid() {
    let p = membrane();
    let k = p.kappa();
    let grid = linear_grid(p.omega_c(), 10.0 * k, 2001).unwrap();
    let mut worst = 0.0f64;
    for delta in [-k, 0.0, k] {
        for g in [0.0, 0.1 * k, k, 3.0 * k] {
            let drive = DriveConfig::red_sideband(&p, delta, Coupling::Rate(g)).unwrap();
            for &wp in &grid {
                let closed = dressed_transmission(wp, &drive, &p);
                let oracle = sideband_linear_solve(wp, &drive, &p).unwrap();
                let scale = oracle.norm();
                let dev = ((closed.re - oracle.re).abs() / scale).max((closed.im - oracle.im).abs() / scale);
                worst = worst.max(dev);
            }
        }
    }
    println!("max relative deviation over 3 x 4 x 2001 points: {worst:.3e}");
    assert!(worst < 1e-6, "{worst:e}");
}

#[test]
fn dropping_the_idler_detunes_the_mechanical_resonance() {
    let p = membrane();
    let k = p.kappa();
    let grid = linear_grid(p.omega_c(), 6.0 * k, 601).unwrap();
    for g_over_k in [0.1, 1.0, 3.0] {
        let drive = DriveConfig::red_sideband(&p, 0.0, Coupling::Rate(g_over_k * k)).unwrap();
        let mut full_dev = 0.0f64;
        let mut trunc_dev = 0.0f64;
        for &wp in &grid {
            let closed = dressed_transmission(wp, &drive, &p);
            let full = sideband_linear_solve(wp, &drive, &p).unwrap();
            let trunc = sideband_linear_solve_with(wp, &drive, &p, Truncation::NoIdler).unwrap();
            full_dev = full_dev.max((full - closed).norm());
            trunc_dev = trunc_dev.max((trunc - closed).norm());
        }
        // the idler pulls the drum by g²/2Ωm; that matters against the width
        // of the narrowest feature, the dressed drum or a hybrid mode
        let g = g_over_k * k;
        let width = (p.gamma_m() + 4.0 * g * g / k).min(k / 2.0);
        let scale = g * g / (p.omega_m() * width);
        println!("g/kappa = {g_over_k}: full {full_dev:.2e}, no idler {trunc_dev:.2e}, scale {scale:.2e}");
        assert!(trunc_dev > 100.0 * full_dev);
        assert!(trunc_dev > 0.2 * scale && trunc_dev < 4.0 * scale, "{trunc_dev:e} vs {scale:e}");
    }
}

#[test]
fn time_domain_agrees_at_transparency_point() {
    let p = desk_scaled(&membrane(), 1e-2);
    // cooperativity 4g²/(κΓm) = 1
    let g = (p.kappa() * p.gamma_m() / 4.0).sqrt();
    let drive = DriveConfig::red_sideband(&p, 0.0, Coupling::Rate(g)).unwrap();
    for offset in [0.0, 0.01, -0.02] {
        let wp = p.omega_c() + offset * p.kappa();
        let td = time_domain_transmission(wp, &drive, &p, 4).unwrap();
        let hb = sideband_linear_solve(wp, &drive, &p).unwrap();
        let rel = (td - hb).norm() / hb.norm();
        assert!(rel < 5e-3, "offset {offset}: {td} vs {hb} ({rel:e})");
    }
}

#[test]
fn time_domain_doublet_matches_normal_mode_splitting() {
    let p = desk_scaled(&membrane(), 1e-2);
    let k = p.kappa();
    let drive = DriveConfig::red_sideband(&p, 0.0, Coupling::Rate(3.0 * k)).unwrap();
    let modes = normal_modes(&drive, &p);
    let mut dips = Vec::new();
    // scan each expected dip in the time domain and refine the minimum
    for sign in [-1.0, 1.0] {
        let centre = p.omega_c() + sign * modes.splitting / 2.0;
        let xs = linear_grid(centre, 0.6 * k, 13).unwrap();
        let ys: Vec<f64> = xs
            .iter()
            .map(|&wp| time_domain_transmission(wp, &drive, &p, 2).unwrap().norm())
            .collect();
        let mins = local_minima(&ys);
        assert_eq!(mins.len(), 1, "{ys:?}");
        dips.push(parabolic_vertex(&xs, &ys, mins[0]).0);
    }
    let measured = dips[1] - dips[0];
    let rel = (measured / modes.splitting - 1.0).abs();
    assert!(rel < 0.03, "measured {measured}, modes {}", modes.splitting);
}

/// Slope of ln(y) against t by least squares.
fn log_slope(t: &[f64], y: &[f64]) -> f64 {
    let n = t.len() as f64;
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mt = t.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = t.iter().zip(&ly).map(|(a, b)| (a - mt) * (b - my)).sum();
    let den: f64 = t.iter().map(|a| (a - mt) * (a - mt)).sum();
    num / den
}

#[test]
fn free_decay_rates() {
    let p = desk_scaled(&membrane(), 1e-2);
    let dt = std::f64::consts::TAU / (2.0 * p.omega_m()) / 50.0;
    let one = Complex64::new(1.0, 0.0);

    // cavity: energy falls as exp(−κt); watch five energy lifetimes
    let steps = (5.0 / p.kappa() / dt) as usize;
    let trace = free_evolution(&p, -p.omega_m(), 0.0, (one, one), dt, steps, 10);
    let t: Vec<f64> = trace.times().collect();
    let e: Vec<f64> = trace.cavity.iter().map(|a| a.norm_sqr()).collect();
    let kappa = -log_slope(&t, &e);
    assert!((kappa / p.kappa() - 1.0).abs() < 0.01, "{kappa} vs {}", p.kappa());

    let steps = (3.0 / p.gamma_m() / dt) as usize;
    let trace = free_evolution(&p, -p.omega_m(), 0.0, (one, one), dt, steps, 100);
    let t: Vec<f64> = trace.times().collect();
    let e: Vec<f64> = trace.mechanical.iter().map(|b| b.norm_sqr()).collect();
    let gamma = -log_slope(&t, &e);
    assert!((gamma / p.gamma_m() - 1.0).abs() < 0.01, "{gamma} vs {}", p.gamma_m());
}
