//! Nonlinear conjugate gradients on the entropic dual, preconditioned by the
//! Sinkhorn direction.
//!
//! Each iteration builds `p_k = -s_k + beta_k p_{k-1}` from the Sinkhorn
//! direction `s` (or the raw gradient for the vanilla variant), resets to
//! `-s_k` whenever `p_k` fails to be a descent direction, and takes the step
//! accepted by the approximate-Wolfe line search.

use std::time::Instant;

use crate::dual::{
    check_marginal_positivity, direction_from_sums, dual_objective_from_sums, gradient_from_sums,
    rho_from_sums,
};
use crate::error::ProjectionError;
use crate::plan::{Marginals, ScaledPlan};

use super::line_search;
use super::{dot_pair, InnerIteration, LineSearchSample, ProjectionResult};

/// Denominators smaller than this force a CG reset instead of a division.
const BETA_DENOM_GUARD: f64 = 1e-300;

/// Preconditioned Polak-Ribiere coefficient
/// `beta = <grad_k - grad_{k-1}, s_k> / (-<grad_{k-1}, p_{k-1}>)`.
///
/// The denominator is positive whenever `p_{k-1}` was a descent direction;
/// under exact line search it equals `<grad_{k-1}, s_{k-1}>`, the standard
/// preconditioned-PR normalization `<g, M g>`. Taking the raw (negative)
/// inner product instead flips the sign of every beta, which breaks
/// conjugacy and degrades the method below plain Sinkhorn scaling.
///
/// The caller defines `beta_1 = 0` (no history) and must reset CG when the
/// denominator vanishes; this returns `None` in that case.
pub fn beta_ppr(
    grad_k: (&[f64], &[f64]),
    grad_km1: (&[f64], &[f64]),
    s_k: (&[f64], &[f64]),
    p_km1: (&[f64], &[f64]),
) -> Option<f64> {
    let denom = -dot_pair(grad_km1.0, grad_km1.1, p_km1.0, p_km1.1);
    if denom.abs() < BETA_DENOM_GUARD {
        return None;
    }
    let du: Vec<f64> = grad_k.0.iter().zip(grad_km1.0).map(|(a, b)| a - b).collect();
    let dv: Vec<f64> = grad_k.1.iter().zip(grad_km1.1).map(|(a, b)| a - b).collect();
    Some(dot_pair(&du, &dv, s_k.0, s_k.1) / denom)
}

/// Plain Polak-Ribiere coefficient
/// `beta = <grad_k - grad_{k-1}, grad_k> / ||grad_{k-1}||^2`.
pub fn beta_pr(grad_k: (&[f64], &[f64]), grad_km1: (&[f64], &[f64])) -> Option<f64> {
    let denom = dot_pair(grad_km1.0, grad_km1.1, grad_km1.0, grad_km1.1);
    if denom.abs() < BETA_DENOM_GUARD {
        return None;
    }
    let du: Vec<f64> = grad_k.0.iter().zip(grad_km1.0).map(|(a, b)| a - b).collect();
    let dv: Vec<f64> = grad_k.1.iter().zip(grad_km1.1).map(|(a, b)| a - b).collect();
    Some(dot_pair(&du, &dv, grad_k.0, grad_k.1) / denom)
}

/// Project `plan` onto `U(r, c)` by conjugate gradients on the dual until
/// `rho <= eps`. `precondition = true` uses the Sinkhorn direction (PNCG),
/// `false` the raw gradient (the vanilla-NCG ablation).
pub fn pncg_project(
    plan: &mut ScaledPlan,
    m: &Marginals,
    eps: f64,
    max_iters: usize,
    precondition: bool,
) -> Result<ProjectionResult, ProjectionError> {
    pncg_project_traced(plan, m, eps, max_iters, precondition, |_, _, _| {})
}

/// [`pncg_project`] with an observer called after every accepted step with
/// `(k, u, v)`.
pub fn pncg_project_traced(
    plan: &mut ScaledPlan,
    m: &Marginals,
    eps: f64,
    max_iters: usize,
    precondition: bool,
    mut observer: impl FnMut(usize, &[f64], &[f64]),
) -> Result<ProjectionResult, ProjectionError> {
    let start = Instant::now();
    let mut sums = plan.marginals()?;
    check_marginal_positivity(&sums)?;
    let mut rho = rho_from_sums(&sums, m);
    let mut trace = vec![InnerIteration {
        k: 0,
        rho,
        dual_objective: dual_objective_from_sums(&sums, plan, m),
        phi_prime_evals: 0,
        elapsed_s: 0.0,
        line_search: None,
    }];

    let mut total_evals = 0usize;
    let mut k = 0usize;
    let mut history: Option<History> = None;

    while rho > eps {
        if k >= max_iters {
            return Ok(ProjectionResult {
                iterations: k,
                converged: false,
                final_rho: rho,
                phi_prime_evals: total_evals,
                trace,
            });
        }
        k += 1;

        let grad = gradient_from_sums(&sums, m);
        let dir = if precondition {
            direction_from_sums(&sums, m)
        } else {
            grad.clone()
        };

        let beta = history.as_ref().and_then(|h| {
            if precondition {
                beta_ppr(
                    (&grad.0, &grad.1),
                    (&h.grad.0, &h.grad.1),
                    (&dir.0, &dir.1),
                    (&h.p.0, &h.p.1),
                )
            } else {
                beta_pr((&grad.0, &grad.1), (&h.grad.0, &h.grad.1))
            }
        });

        let (mut pu, mut pv) = match (beta, history.as_ref()) {
            (Some(b), Some(h)) => (
                dir.0.iter().zip(&h.p.0).map(|(s, p)| -s + b * p).collect::<Vec<f64>>(),
                dir.1.iter().zip(&h.p.1).map(|(s, p)| -s + b * p).collect::<Vec<f64>>(),
            ),
            _ => (
                dir.0.iter().map(|x| -x).collect(),
                dir.1.iter().map(|x| -x).collect(),
            ),
        };
        let mut phi0 = dot_pair(&pu, &pv, &grad.0, &grad.1);
        if phi0 >= 0.0 {
            // reset: -s (or -grad) is always a descent direction while rho > 0
            pu = dir.0.iter().map(|x| -x).collect();
            pv = dir.1.iter().map(|x| -x).collect();
            phi0 = dot_pair(&pu, &pv, &grad.0, &grad.1);
        }

        let out = line_search::search(plan, m, &pu, &pv, phi0)?;
        total_evals += out.evals;
        {
            let (u, v) = plan.potentials_mut();
            u.copy_from_slice(&out.u_new);
            v.copy_from_slice(&out.v_new);
        }
        sums = out.sums;
        check_marginal_positivity(&sums)?;
        rho = rho_from_sums(&sums, m);
        trace.push(InnerIteration {
            k,
            rho,
            dual_objective: dual_objective_from_sums(&sums, plan, m),
            phi_prime_evals: out.evals,
            elapsed_s: start.elapsed().as_secs_f64(),
            line_search: Some(LineSearchSample {
                alpha: out.alpha,
                phi_zero: phi0,
                phi_alpha: out.phi_alpha,
            }),
        });
        observer(k, plan.u(), plan.v());
        history = Some(History {
            grad,
            p: (pu, pv),
            // denominator of the next beta_ppr equals this phi0 by definition
        });
    }

    Ok(ProjectionResult {
        iterations: k,
        converged: true,
        final_rho: rho,
        phi_prime_evals: total_evals,
        trace,
    })
}

struct History {
    grad: (Vec<f64>, Vec<f64>),
    p: (Vec<f64>, Vec<f64>),
}
