//! Sinkhorn projection: alternating exact row/column scaling in log domain.

use std::time::Instant;

use crate::dual::{check_marginal_positivity, dual_objective_from_sums, ln_ratio, rho_from_sums};
use crate::error::ProjectionError;
use crate::plan::{Marginals, ScaledPlan};

use super::{InnerIteration, ProjectionResult};

/// Project `plan` onto `U(r, c)` by alternating scaling until
/// `rho <= eps`, accumulating potentials onto whatever the plan carries
/// (warm start). Odd iterations match row sums exactly, even iterations
/// column sums.
pub fn sinkhorn_project(
    plan: &mut ScaledPlan,
    m: &Marginals,
    eps: f64,
    max_iters: usize,
) -> Result<ProjectionResult, ProjectionError> {
    sinkhorn_project_traced(plan, m, eps, max_iters, |_, _, _| {})
}

/// [`sinkhorn_project`] with an observer called after every half-step with
/// `(k, u, v)`; used by diagnostics that need the full iterate path.
pub fn sinkhorn_project_traced(
    plan: &mut ScaledPlan,
    m: &Marginals,
    eps: f64,
    max_iters: usize,
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

    let mut k = 0usize;
    while rho > eps {
        if k >= max_iters {
            return Ok(ProjectionResult {
                iterations: k,
                converged: false,
                final_rho: rho,
                phi_prime_evals: 0,
                trace,
            });
        }
        k += 1;
        {
            let (u, v) = plan.potentials_mut();
            if k % 2 == 1 {
                for (ui, (&target, &got)) in u.iter_mut().zip(m.r().iter().zip(&sums.row)) {
                    *ui += ln_ratio(target, got);
                }
            } else {
                for (vj, (&target, &got)) in v.iter_mut().zip(m.c().iter().zip(&sums.col)) {
                    *vj += ln_ratio(target, got);
                }
            }
        }
        sums = plan.marginals()?;
        check_marginal_positivity(&sums)?;
        rho = rho_from_sums(&sums, m);
        trace.push(InnerIteration {
            k,
            rho,
            dual_objective: dual_objective_from_sums(&sums, plan, m),
            phi_prime_evals: 0,
            elapsed_s: start.elapsed().as_secs_f64(),
            line_search: None,
        });
        observer(k, plan.u(), plan.v());
    }

    Ok(ProjectionResult {
        iterations: k,
        converged: true,
        final_rho: rho,
        phi_prime_evals: 0,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dual;
    use crate::plan::CostMatrix;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_simplex(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
        let s: f64 = raw.iter().sum();
        raw.into_iter().map(|x| x / s).collect()
    }

    fn instance(n: usize, gamma: f64, seed: u64) -> (ScaledPlan, Marginals, CostMatrix) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = Marginals::new(random_simplex(n, &mut rng), random_simplex(n, &mut rng)).unwrap();
        let cost = CostMatrix::new(
            n,
            (0..n * n).map(|_| rng.random_range(0.0..1.0)).collect(),
        )
        .unwrap();
        let mut plan = ScaledPlan::from_independence(&m);
        plan.gradient_step(gamma, &cost);
        (plan, m, cost)
    }

    #[test]
    fn feasible_input_takes_zero_iterations_and_keeps_potentials() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 5;
        let m = Marginals::new(random_simplex(n, &mut rng), random_simplex(n, &mut rng)).unwrap();
        let mut plan = ScaledPlan::from_independence(&m);
        let before = plan.clone();
        let res = sinkhorn_project(&mut plan, &m, 1e-9, 1000).unwrap();
        assert_eq!(res.iterations, 0);
        assert!(res.converged);
        assert_eq!(plan, before);
    }

    #[test]
    fn odd_step_matches_row_sums_exactly() {
        let (mut plan, m, _) = instance(6, 3.0, 7);
        let sums = plan.marginals().unwrap();
        {
            let (u, _) = plan.potentials_mut();
            for (ui, (&target, &got)) in u.iter_mut().zip(m.r().iter().zip(&sums.row)) {
                *ui += dual::ln_ratio(target, got);
            }
        }
        let after = plan.marginals().unwrap();
        for (got, want) in after.row.iter().zip(m.r()) {
            assert!((got - want).abs() <= 1e-12 * want, "{got} vs {want}");
        }
    }

    #[test]
    fn matches_independent_alternating_scaling_oracle() {
        let n = 4;
        let (mut plan, m, cost) = instance(n, 8.0, 15);
        // oracle: naive linear-domain alternating scaling on a long fixed
        // budget. The solver runs far below the comparison tolerance since
        // its plan error scales like sqrt(rho).
        let mut p: Vec<f64> = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                p[i * n + j] = m.r()[i] * m.c()[j] * (-8.0 * cost.entry(i, j)).exp();
            }
        }
        for _ in 0..512 {
            for i in 0..n {
                let s: f64 = p[i * n..(i + 1) * n].iter().sum();
                let x = m.r()[i] / s;
                for j in 0..n {
                    p[i * n + j] *= x;
                }
            }
            for j in 0..n {
                let s: f64 = (0..n).map(|i| p[i * n + j]).sum();
                let y = m.c()[j] / s;
                for i in 0..n {
                    p[i * n + j] *= y;
                }
            }
        }
        let res = sinkhorn_project(&mut plan, &m, 1e-20, 100_000).unwrap();
        assert!(res.converged);
        let q = plan.materialize().unwrap();
        let l1: f64 = q.iter().zip(&p).map(|(a, b)| (a - b).abs()).sum();
        assert!(l1 <= 1e-8, "L1 distance to scaling oracle: {l1}");
    }

    #[test]
    fn warm_start_resumes_from_given_potentials() {
        let (mut warm, m, _) = instance(8, 4.0, 13);
        sinkhorn_project(&mut warm, &m, 1e-6, 100_000).unwrap();
        let resumed = sinkhorn_project(&mut warm, &m, 1e-10, 100_000).unwrap();
        assert!(resumed.converged);
        assert!(resumed.trace[0].rho <= 1e-6);

        let (mut cold, _, _) = instance(8, 4.0, 13);
        let cold_res = sinkhorn_project(&mut cold, &m, 1e-10, 100_000).unwrap();
        assert!(resumed.iterations < cold_res.iterations);
        // both reach the same projection
        let a = warm.materialize().unwrap();
        let b = cold.materialize().unwrap();
        let l1: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
        assert!(l1 < 1e-4, "warm and cold projections diverged: {l1}");
    }

    #[test]
    fn iteration_cap_flags_non_convergence() {
        let (mut plan, m, _) = instance(8, 16.0, 17);
        let res = sinkhorn_project(&mut plan, &m, 1e-12, 3).unwrap();
        assert!(!res.converged);
        assert_eq!(res.iterations, 3);
        assert!(res.final_rho > 1e-12);
    }
}
