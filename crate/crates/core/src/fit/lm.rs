//! Damped normal-equations least squares with finite-difference Jacobians.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Stopping rules and numerical knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop when an accepted step lowers the cost by less than this fraction.
    pub ftol: f64,
    /// Converged when the scaled gradient falls below this.
    pub gtol: f64,
    /// Starting damping. Zero makes the first attempt a pure Gauss-Newton step.
    pub initial_damping: f64,
    /// Relative central-difference step per parameter.
    pub fd_step: f64,
    /// Consecutive rejected steps before giving up.
    pub max_rejections: usize,
    /// Residual norm at which the data are reproduced to rounding. The
    /// gradient test divides by max(‖r‖, floor), since a residual made of
    /// rounding error has no meaningful direction.
    pub residual_floor: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            ftol: 1e-10,
            gtol: 1e-8,
            initial_damping: 1e-3,
            fd_step: 1e-6,
            max_rejections: 10,
            residual_floor: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Gradient,
    CostChange,
    MaxIterations,
    Diverged,
    NonFinite,
}

#[derive(Debug, Clone)]
pub struct LmReport {
    pub params: Vec<f64>,
    pub residuals: Vec<f64>,
    /// ‖r‖ at `params`.
    pub residual_norm: f64,
    pub iterations: usize,
    /// Scaled gradient at `params` (see [`scaled_gradient`]).
    pub gradient: f64,
    pub converged: bool,
    pub termination: Termination,
    /// s²·(JᵀJ)⁻¹ with s² = ‖r‖²/(m − n), when JᵀJ is well conditioned.
    pub covariance: Option<DMatrix<f64>>,
    pub condition_number: f64,
}

impl LmReport {
    pub fn std_errors(&self) -> Option<Vec<f64>> {
        self.covariance
            .as_ref()
            .map(|c| (0..c.nrows()).map(|i| c[(i, i)].max(0.0).sqrt()).collect())
    }
}

/// Relative cost increase still treated as no change.
const COST_ROUNDING: f64 = 64.0 * f64::EPSILON;

/// Largest condition number of JᵀJ for which uncertainties are reported.
pub const MAX_CONDITION: f64 = 1e12;

fn cost(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

fn jacobian<F>(f: &F, x: &[f64], m: usize, step: f64) -> Option<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = x.len();
    let mut jac = DMatrix::zeros(m, n);
    let mut probe = x.to_vec();
    for j in 0..n {
        let h = step * x[j].abs().max(1.0);
        probe[j] = x[j] + h;
        let up = f(&probe);
        probe[j] = x[j] - h;
        let down = f(&probe);
        probe[j] = x[j];
        if up.len() != m || down.len() != m {
            return None;
        }
        for i in 0..m {
            jac[(i, j)] = (up[i] - down[i]) / (2.0 * h);
        }
    }
    jac.iter().all(|v| v.is_finite()).then_some(jac)
}

/// max_j |J_jᵀ r| / (‖J_j‖·max(‖r‖, floor)): the cosine between the residual
/// and each Jacobian column. Invariant under scaling of parameters; zero when
/// the residual vanishes.
pub fn scaled_gradient(jac: &DMatrix<f64>, r: &[f64], floor: f64) -> f64 {
    let rn = cost(r).sqrt().max(floor);
    if rn == 0.0 {
        return 0.0;
    }
    let rv = DVector::from_column_slice(r);
    (0..jac.ncols())
        .map(|j| {
            let col = jac.column(j);
            let cn = col.norm();
            if cn == 0.0 {
                0.0
            } else {
                col.dot(&rv).abs() / (cn * rn)
            }
        })
        .fold(0.0, f64::max)
}

fn covariance(jac: &DMatrix<f64>, r: &[f64]) -> (Option<DMatrix<f64>>, f64) {
    let (m, n) = jac.shape();
    let normal = jac.transpose() * jac;
    let sv = normal.clone().singular_values();
    let (max, min) = sv
        .iter()
        .fold((0.0f64, f64::INFINITY), |(hi, lo), &s| (hi.max(s), lo.min(s)));
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if m <= n || !(condition < MAX_CONDITION) {
        return (None, condition);
    }
    let s2 = cost(r) / (m - n) as f64;
    let cov = normal.try_inverse().map(|inv| inv * s2);
    (cov, condition)
}

/// Minimizes ‖r(x)‖² starting from `init`.
///
/// Each iteration solves (JᵀJ + λ·diag(JᵀJ))·δ = −Jᵀr. A step that lowers the
/// cost is accepted and λ shrinks tenfold; otherwise λ grows tenfold and the
/// step is retried. The first step that changes the cost by less than `ftol`
/// is followed by one undamped step; a second such step ends the run. `max_rejections` consecutive rejections end the run as
/// diverged. Never panics on bad residuals; non-finite values end the run.
pub fn minimize<F>(f: F, init: &[f64], options: &LmOptions) -> LmReport
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut x = init.to_vec();
    let mut r = f(&x);
    let m = r.len();
    let n = x.len();
    let mut current = cost(&r);
    let mut lambda = options.initial_damping;
    let mut iterations = 0;
    let mut stalled = false;

    let finish = |x: Vec<f64>, r: Vec<f64>, iterations: usize, termination: Termination| {
        let jac = jacobian(&f, &x, m, options.fd_step);
        let (gradient, (cov, cond)) = match &jac {
            Some(j) => (scaled_gradient(j, &r, options.residual_floor), covariance(j, &r)),
            None => (f64::INFINITY, (None, f64::INFINITY)),
        };
        let converged = termination != Termination::NonFinite && gradient < options.gtol;
        LmReport {
            residual_norm: cost(&r).sqrt(),
            params: x,
            residuals: r,
            iterations,
            gradient,
            converged,
            termination,
            covariance: cov,
            condition_number: cond,
        }
    };

    if !current.is_finite() || n == 0 {
        return finish(x, r, 0, Termination::NonFinite);
    }

    loop {
        let Some(jac) = jacobian(&f, &x, m, options.fd_step) else {
            return finish(x, r, iterations, Termination::NonFinite);
        };
        if scaled_gradient(&jac, &r, options.residual_floor) < options.gtol {
            return finish(x, r, iterations, Termination::Gradient);
        }
        if iterations >= options.max_iterations {
            return finish(x, r, iterations, Termination::MaxIterations);
        }
        let normal = jac.transpose() * &jac;
        let grad = jac.transpose() * DVector::from_column_slice(&r);

        let mut rejections = 0;
        let accepted = loop {
            let mut damped = normal.clone();
            for k in 0..n {
                let d = normal[(k, k)];
                damped[(k, k)] += lambda * if d > 0.0 { d } else { 1.0 };
            }
            let step = damped
                .clone()
                .cholesky()
                .map(|c| c.solve(&(-&grad)))
                .or_else(|| damped.lu().solve(&(-&grad)));
            if let Some(step) = step {
                let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
                let tr = f(&trial);
                let trial_cost = cost(&tr);
                // ties within rounding count as success so a Gauss-Newton
                // step at the minimum can still sharpen the gradient
                if tr.len() == m && trial_cost.is_finite() && trial_cost <= current * (1.0 + COST_ROUNDING) {
                    break Some((trial, tr, trial_cost));
                }
            }
            rejections += 1;
            if rejections >= options.max_rejections {
                break None;
            }
            lambda = if lambda == 0.0 { 1e-3 } else { lambda * 10.0 };
        };

        let Some((trial, tr, trial_cost)) = accepted else {
            return finish(x, r, iterations, Termination::Diverged);
        };
        iterations += 1;
        lambda /= 10.0;
        let change = if current > 0.0 {
            (current - trial_cost) / current
        } else {
            0.0
        };
        x = trial;
        r = tr;
        current = trial_cost;
        if current == 0.0 {
            return finish(x, r, iterations, Termination::CostChange);
        }
        if change < options.ftol {
            // one undamped polishing step before giving up on the gradient test
            if stalled {
                return finish(x, r, iterations, Termination::CostChange);
            }
            stalled = true;
            lambda = 0.0;
        } else {
            stalled = false;
        }
    }
}
