//! Hilbert projective metric and the contraction bound for Sinkhorn
//! iterates inside a fixed-step mirror-descent run.

use crate::error::DomainError;
use crate::plan::{CostMatrix, Marginals, ScaledPlan};
use crate::projections::sinkhorn::sinkhorn_project_traced;

use super::DiagnosticsError;

/// Variation seminorm `max_i x_i - min_i x_i`.
pub fn var_norm(x: &[f64]) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in x {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    hi - lo
}

/// Hilbert projective metric `||log(p / q)||_var` on strictly positive
/// vectors; zero exactly on rays (`p = a q`).
pub fn hilbert_metric(p: &[f64], q: &[f64]) -> Result<f64, DomainError> {
    if p.len() != q.len() {
        return Err(DomainError::DimensionMismatch {
            expected: p.len(),
            got: q.len(),
        });
    }
    let mut logs = Vec::with_capacity(p.len());
    for (i, (&a, &b)) in p.iter().zip(q).enumerate() {
        if a <= 0.0 || !a.is_finite() {
            return Err(DomainError::NonPositiveEntry { index: i, value: a });
        }
        if b <= 0.0 || !b.is_finite() {
            return Err(DomainError::NonPositiveEntry { index: i, value: b });
        }
        logs.push(crate::dual::ln_ratio(a, b));
    }
    Ok(var_norm(&logs))
}

/// Contraction data for one MD step: every recorded Sinkhorn inner iterate
/// `k` with the Hilbert distance to the step's reference projection (lhs)
/// and the theoretical envelope (rhs).
#[derive(Debug, Clone)]
pub struct ContractionCheck {
    pub t: usize,
    /// Contraction ratio bound `tanh(gamma * t * max(C) / 2)`.
    pub kappa: f64,
    /// `D_HP(r(P^{t,0}), r) + D_HP(c(P^{t,0}), c)` at the warm-started entry
    /// point of the step.
    pub initial_gap: f64,
    /// `(k, lhs, rhs)` rows: `lhs = ||u* - u_k||_var + ||v* - v_k||_var`,
    /// `rhs = kappa^k / (1 - kappa^2) * initial_gap`.
    pub rows: Vec<(usize, f64, f64)>,
}

/// Run `steps` fixed-size MD steps with Sinkhorn projections at `eps_ref`
/// (the reference tolerance, effectively exact) and record, for every inner
/// iterate of every step, both sides of the Hilbert-metric contraction
/// envelope.
///
/// The Hilbert distance between iterate and reference plan is evaluated
/// through the potential differences: both are diagonal scalings of the same
/// base matrix, so it equals `||u*-u_k||_var + ||v*-v_k||_var`.
pub fn contraction_check(
    cost: &CostMatrix,
    m: &Marginals,
    gamma: f64,
    steps: usize,
    eps_ref: f64,
    max_iters: usize,
) -> Result<Vec<ContractionCheck>, DiagnosticsError> {
    let cmax = cost.max_entry();
    let mut plan = ScaledPlan::from_independence(m);
    let mut out = Vec::with_capacity(steps);
    for t in 1..=steps {
        plan.gradient_step(gamma, cost);

        let entry_sums = plan.marginals()?;
        crate::dual::check_marginal_positivity(&entry_sums)?;
        let initial_gap =
            hilbert_metric(&entry_sums.row, m.r())? + hilbert_metric(&entry_sums.col, m.c())?;

        let mut iterates: Vec<(usize, Vec<f64>, Vec<f64>)> = Vec::new();
        let result = sinkhorn_project_traced(&mut plan, m, eps_ref, max_iters, |k, u, v| {
            iterates.push((k, u.to_vec(), v.to_vec()));
        })?;
        debug_assert!(result.converged);

        let u_star = plan.u().to_vec();
        let v_star = plan.v().to_vec();
        let kappa = (gamma * t as f64 * cmax / 2.0).tanh();
        let envelope = initial_gap / (1.0 - kappa * kappa);
        let rows = iterates
            .into_iter()
            .map(|(k, u, v)| {
                let du: Vec<f64> = u_star.iter().zip(&u).map(|(a, b)| a - b).collect();
                let dv: Vec<f64> = v_star.iter().zip(&v).map(|(a, b)| a - b).collect();
                let lhs = var_norm(&du) + var_norm(&dv);
                let rhs = kappa.powi(k as i32) * envelope;
                (k, lhs, rhs)
            })
            .collect();
        out.push(ContractionCheck {
            t,
            kappa,
            initial_gap,
            rows,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_simplex(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
        let s: f64 = raw.iter().sum();
        raw.into_iter().map(|x| x / s).collect()
    }

    #[test]
    fn hilbert_metric_values() {
        let p = [0.4, 0.6];
        assert_eq!(hilbert_metric(&p, &p).unwrap(), 0.0);
        // projective invariance
        let q: Vec<f64> = p.iter().map(|x| 3.25 * x).collect();
        assert!(hilbert_metric(&p, &q).unwrap().abs() <= 1e-14);
        // p = (1, e^2), q = (1, 1) -> 2
        let e2 = std::f64::consts::E * std::f64::consts::E;
        let d = hilbert_metric(&[1.0, e2], &[1.0, 1.0]).unwrap();
        assert!((d - 2.0).abs() <= 1e-14);
        assert!(hilbert_metric(&[1.0, 0.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn hilbert_metric_triangle_inequality_on_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let n = 6;
            let a: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..10.0)).collect();
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..10.0)).collect();
            let c: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..10.0)).collect();
            let ab = hilbert_metric(&a, &b).unwrap();
            let bc = hilbert_metric(&b, &c).unwrap();
            let ac = hilbert_metric(&a, &c).unwrap();
            assert!(ac <= ab + bc + 1e-12);
        }
    }

    #[test]
    fn contraction_envelope_holds_on_a_small_instance() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 8;
        let m = crate::Marginals::new(random_simplex(n, &mut rng), random_simplex(n, &mut rng))
            .unwrap();
        let cost = crate::CostMatrix::new(
            n,
            (0..n * n).map(|_| rng.random_range(0.0..1.0)).collect(),
        )
        .unwrap();
        let checks = contraction_check(&cost, &m, 4.0, 2, 1e-13, 200_000).unwrap();
        assert_eq!(checks.len(), 2);
        for check in &checks {
            assert!(check.kappa < 1.0);
            assert!(!check.rows.is_empty());
            for &(k, lhs, rhs) in &check.rows {
                assert!(
                    lhs <= rhs + 1e-12,
                    "t={}, k={k}: lhs {lhs} > rhs {rhs}",
                    check.t
                );
            }
            // convergence: the tail of the recorded iterates approaches zero
            let last = check.rows.last().unwrap();
            assert!(last.1 <= 1e-5, "final Hilbert gap {}", last.1);
        }
        // kappa grows toward one with t
        assert!(checks[1].kappa > checks[0].kappa);
    }
}
