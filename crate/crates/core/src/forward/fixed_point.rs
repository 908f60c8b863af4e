use serde::{Deserialize, Serialize};

use super::{apply_t, Susceptibility};
use crate::discretization::{banded::BandMatrix, sup_norm, GreenSolver};
use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Ball radius parameter: `r = gamma ||u0||`.
    pub gamma: f64,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 1000,
            gamma: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointReport {
    pub converged: bool,
    pub iterations: usize,
    /// `||u - T(u)||_inf` of the returned iterate.
    pub residual: f64,
    /// Largest ratio of consecutive update norms.
    pub contraction_quotient: f64,
    pub ball_radius: f64,
    pub outer_radius: f64,
    pub gamma: f64,
    pub residual_history: Vec<f64>,
}

/// Picard iteration `v_{m+1} = T(v_m)` from `v_0 = u0`.
///
/// Returns the first iterate `v_m` with `||T(v_m) - v_m||_inf <= tol`, so the
/// reported residual is exactly the last update norm.
pub fn fixed_point_solve(
    solver: &GreenSolver,
    zeta: &Susceptibility,
    u0: &[f64],
    opts: &FixedPointOptions,
) -> Result<(Vec<f64>, FixedPointReport)> {
    if !(opts.tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {}", opts.tol)));
    }
    if opts.max_iter == 0 {
        return Err(Error::Domain("max_iter must be positive".into()));
    }
    let u0_norm = sup_norm(u0);
    let blowup = 1e8 * (1.0 + u0_norm);
    let noise_floor = 100.0 * f64::EPSILON * u0_norm.max(1.0);

    let mut v = u0.to_vec();
    let mut history = Vec::new();
    for it in 1..=opts.max_iter {
        let next = apply_t(solver, &v, zeta, u0)?;
        let d = v
            .iter()
            .zip(&next)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        history.push(d);
        if d <= opts.tol {
            let r = opts.gamma * u0_norm;
            let report = FixedPointReport {
                converged: true,
                iterations: it,
                residual: d,
                contraction_quotient: empirical_quotient(&history, noise_floor),
                ball_radius: r,
                outer_radius: u0_norm + r,
                gamma: opts.gamma,
                residual_history: history,
            };
            return Ok((v, report));
        }
        if !d.is_finite() || d > blowup {
            break;
        }
        v = next;
    }
    Err(Error::NonConvergence {
        iterations: history.len(),
        residuals: history,
    })
}

fn empirical_quotient(history: &[f64], floor: f64) -> f64 {
    history
        .windows(2)
        .filter(|w| w[0] > floor && w[1] > floor)
        .map(|w| w[1] / w[0])
        .fold(0.0, f64::max)
}

/// Newton iteration on the discrete integral equation
/// `S (u - u0) + k^2 W (alpha u + beta u^3) = 0`.
///
/// Used to synthesize data for media where the Picard iteration does not
/// contract. Returns the solution and the number of Newton steps.
pub fn newton_solve(
    solver: &GreenSolver,
    zeta: &Susceptibility,
    u0: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, usize)> {
    let grid = solver.grid();
    let n = grid.len();
    check_len(n, u0.len())?;
    check_len(n, zeta.len())?;
    let k2 = solver.k() * solver.k();
    let w = grid.weights();
    let (alpha, beta) = (zeta.alpha(), zeta.beta());
    let bw = solver.operator().bandwidth();

    let mut u = u0.to_vec();
    let mut history = Vec::new();
    for it in 1..=max_iter {
        let diff: Vec<f64> = u.iter().zip(u0).map(|(a, b)| a - b).collect();
        let mut f = solver.apply_weak(&diff);
        for i in 0..n {
            f[i] += k2 * w[i] * (alpha[i] * u[i] + beta[i] * u[i] * u[i] * u[i]);
        }
        let mut jac = BandMatrix::zeros(n, bw);
        for i in 0..n {
            for j in i.saturating_sub(bw)..=(i + bw).min(n - 1) {
                let v = solver.operator().get(i, j);
                if v != 0.0 {
                    jac.add(i, j, v);
                }
            }
            jac.add(i, i, k2 * w[i] * (alpha[i] + 3.0 * beta[i] * u[i] * u[i]));
        }
        let lu = jac.factorize().map_err(|e| Error::Degenerate(format!("Newton Jacobian: {e}")))?;
        for x in f.iter_mut() {
            *x = -*x;
        }
        lu.solve_in_place(&mut f);
        let step = sup_norm(&f);
        for (ui, di) in u.iter_mut().zip(&f) {
            *ui += di;
        }
        history.push(step);
        if !step.is_finite() {
            break;
        }
        if step <= tol * sup_norm(&u).max(1.0) {
            return Ok((u, it));
        }
    }
    Err(Error::NonConvergence {
        iterations: history.len(),
        residuals: history,
    })
}

/// Sufficient conditions for the Picard iteration, with every intermediate
/// quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub mu: f64,
    pub gamma: f64,
    pub alpha_norm: f64,
    pub beta_norm: f64,
    pub u0_norm: f64,
    /// `r = gamma ||u0||`
    pub ball_radius: f64,
    /// `R = ||u0|| + r`
    pub outer_radius: f64,
    /// `mu R (||alpha|| + R^2 ||beta||)`
    pub self_mapping_lhs: f64,
    pub self_mapping: bool,
    /// `q = mu (||alpha|| + 3 R^2 ||beta||)`
    pub lipschitz_bound: f64,
    pub contraction: bool,
    /// `1 / mu`
    pub linear_alpha_bound: f64,
    /// holds when `beta = 0` and `||alpha|| < 1/mu`
    pub beta_zero_criterion: bool,
    /// `4 / (27 mu ||u0||^2)`
    pub cubic_beta_bound: f64,
    /// holds when `alpha = 0` and `||beta|| < 4/(27 mu ||u0||^2)`
    pub alpha_zero_criterion: bool,
    /// `(2 gamma - 1) / (2 mu (1 + gamma))`
    pub general_alpha_bound: f64,
    /// `1 / (2 mu ||u0||^2 (1 + gamma)^3)`
    pub general_beta_bound: f64,
    pub general_criterion: bool,
}

pub fn check_contraction_conditions(
    zeta: &Susceptibility,
    u0_norm: f64,
    mu: f64,
    gamma: f64,
) -> Result<ConditionReport> {
    if !(gamma > 0.5) {
        return Err(Error::Domain(format!("gamma must exceed 1/2, got {gamma}")));
    }
    if !(mu > 0.0) {
        return Err(Error::Domain(format!("mu must be positive, got {mu}")));
    }
    let a = zeta.alpha_norm();
    let b = zeta.beta_norm();
    let r = gamma * u0_norm;
    let big_r = u0_norm + r;
    let self_mapping_lhs = mu * big_r * (a + big_r * big_r * b);
    let q = mu * (a + 3.0 * big_r * big_r * b);
    let linear_alpha_bound = 1.0 / mu;
    let u2 = u0_norm * u0_norm;
    let cubic_beta_bound = 4.0 / (27.0 * mu * u2);
    let general_alpha_bound = (2.0 * gamma - 1.0) / (2.0 * mu * (1.0 + gamma));
    let general_beta_bound = 1.0 / (2.0 * mu * u2 * (1.0 + gamma).powi(3));
    Ok(ConditionReport {
        mu,
        gamma,
        alpha_norm: a,
        beta_norm: b,
        u0_norm,
        ball_radius: r,
        outer_radius: big_r,
        self_mapping_lhs,
        self_mapping: self_mapping_lhs < r,
        lipschitz_bound: q,
        contraction: q < 1.0,
        linear_alpha_bound,
        beta_zero_criterion: b == 0.0 && a < linear_alpha_bound,
        cubic_beta_bound,
        alpha_zero_criterion: a == 0.0 && b < cubic_beta_bound,
        general_alpha_bound,
        general_beta_bound,
        general_criterion: a < general_alpha_bound && b < general_beta_bound,
    })
}
