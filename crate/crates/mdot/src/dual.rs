//! The entropic dual objective, its gradient, the Sinkhorn direction, and the
//! generalized-KL infeasibility measure shared by every projection engine.
//!
//! With the plan kept in log domain, the dual of one Bregman projection is
//!
//! ```text
//! g(u, v) = sum_ij exp(log_base_ij + u_i + v_j) - <u, r> - <v, c> - 1
//! ```
//!
//! whose gradient is `(r(P) - r, c(P) - c)` and whose minimizer scales the
//! base matrix onto `U(r, c)`.

use crate::error::{DomainError, Instability};
use crate::plan::{Marginals, PlanMarginals, ScaledPlan};

/// `ln(a / b)` computed through `ln_1p` when the ratio is near one, so nearly
/// converged marginals do not lose the difference to cancellation.
pub(crate) fn ln_ratio(a: f64, b: f64) -> f64 {
    let ratio = a / b;
    if ratio > 0.5 && ratio < 2.0 {
        ((a - b) / b).ln_1p()
    } else {
        a.ln() - b.ln()
    }
}

/// Generalized KL divergence `sum_i x_i - y_i + y_i * ln(y_i / x_i)`.
///
/// Non-negative for strictly positive arguments, zero iff `x == y`.
pub fn gen_kl(x: &[f64], y: &[f64]) -> Result<f64, DomainError> {
    if x.len() != y.len() {
        return Err(DomainError::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    for (i, (&xi, &yi)) in x.iter().zip(y).enumerate() {
        if xi <= 0.0 || !xi.is_finite() {
            return Err(DomainError::NonPositiveEntry { index: i, value: xi });
        }
        if yi <= 0.0 || !yi.is_finite() {
            return Err(DomainError::NonPositiveEntry { index: i, value: yi });
        }
    }
    Ok(gen_kl_unchecked(x, y))
}

pub(crate) fn gen_kl_unchecked(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(&xi, &yi)| xi - yi + yi * ln_ratio(yi, xi))
        .sum()
}

/// Infeasibility `rho = genKL(r(P), r) + genKL(c(P), c)` of a dense positive
/// matrix with respect to target marginals.
pub fn infeasibility_of_matrix(p: &[f64], m: &Marginals) -> Result<f64, DomainError> {
    let n = m.n();
    if p.len() != n * n {
        return Err(DomainError::DimensionMismatch {
            expected: n * n,
            got: p.len(),
        });
    }
    let mut row = vec![0.0; n];
    let mut col = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            let x = p[i * n + j];
            row[i] += x;
            col[j] += x;
        }
    }
    Ok(gen_kl(&row, m.r())? + gen_kl(&col, m.c())?)
}

/// Infeasibility of a log-domain plan.
pub fn infeasibility(plan: &ScaledPlan, m: &Marginals) -> Result<f64, Instability> {
    let sums = plan.marginals()?;
    check_marginal_positivity(&sums)?;
    Ok(rho_from_sums(&sums, m))
}

/// `rho` from already-computed plan marginals (positivity checked by caller).
pub(crate) fn rho_from_sums(sums: &PlanMarginals, m: &Marginals) -> f64 {
    gen_kl_unchecked(&sums.row, m.r()) + gen_kl_unchecked(&sums.col, m.c())
}

/// Reject plans whose row or column sums have underflowed to zero; every log
/// or ratio downstream would otherwise go infinite.
pub(crate) fn check_marginal_positivity(sums: &PlanMarginals) -> Result<(), Instability> {
    use crate::error::MarginalAxis;
    if let Some(i) = sums.row.iter().position(|&x| x <= 0.0) {
        return Err(Instability::MarginalUnderflow {
            axis: MarginalAxis::Row,
            index: i,
        });
    }
    if let Some(j) = sums.col.iter().position(|&x| x <= 0.0) {
        return Err(Instability::MarginalUnderflow {
            axis: MarginalAxis::Col,
            index: j,
        });
    }
    Ok(())
}

/// Dual objective `g(u, v) = sum_ij P_ij - <u, r> - <v, c> - 1`.
pub fn dual_objective(plan: &ScaledPlan, m: &Marginals) -> Result<f64, Instability> {
    let sums = plan.marginals()?;
    Ok(dual_objective_from_sums(&sums, plan, m))
}

pub(crate) fn dual_objective_from_sums(
    sums: &PlanMarginals,
    plan: &ScaledPlan,
    m: &Marginals,
) -> f64 {
    let ur: f64 = plan.u().iter().zip(m.r()).map(|(a, b)| a * b).sum();
    let vc: f64 = plan.v().iter().zip(m.c()).map(|(a, b)| a * b).sum();
    sums.total - ur - vc - 1.0
}

/// Gradient of the dual objective: `(r(P) - r, c(P) - c)`.
pub fn dual_gradient(plan: &ScaledPlan, m: &Marginals) -> Result<(Vec<f64>, Vec<f64>), Instability> {
    let sums = plan.marginals()?;
    Ok(gradient_from_sums(&sums, m))
}

pub(crate) fn gradient_from_sums(sums: &PlanMarginals, m: &Marginals) -> (Vec<f64>, Vec<f64>) {
    let gu = sums.row.iter().zip(m.r()).map(|(a, b)| a - b).collect();
    let gv = sums.col.iter().zip(m.c()).map(|(a, b)| a - b).collect();
    (gu, gv)
}

/// The Sinkhorn direction `s = (ln r(P) - ln r, ln c(P) - ln c)`.
///
/// `-s` is always a descent direction for the dual objective:
/// `<s, grad g>` equals the symmetrized divergence sum
/// `genKL(r(P), r) + genKL(r, r(P)) + genKL(c(P), c) + genKL(c, c(P)) >= 0`.
pub fn sinkhorn_direction(
    plan: &ScaledPlan,
    m: &Marginals,
) -> Result<(Vec<f64>, Vec<f64>), Instability> {
    let sums = plan.marginals()?;
    check_marginal_positivity(&sums)?;
    Ok(direction_from_sums(&sums, m))
}

pub(crate) fn direction_from_sums(sums: &PlanMarginals, m: &Marginals) -> (Vec<f64>, Vec<f64>) {
    let su = sums
        .row
        .iter()
        .zip(m.r())
        .map(|(&a, &b)| ln_ratio(a, b))
        .collect();
    let sv = sums
        .col
        .iter()
        .zip(m.c())
        .map(|(&a, &b)| ln_ratio(a, b))
        .collect();
    (su, sv)
}

/// Shannon entropy in nats, with the convention `0 * ln 0 = 0`.
pub fn entropy(x: &[f64]) -> f64 {
    -x.iter()
        .map(|&p| if p > 0.0 { p * p.ln() } else { 0.0 })
        .sum::<f64>()
}

/// `H_min = min(H(r), H(c))` in nats.
pub fn h_min(m: &Marginals) -> f64 {
    entropy(m.r()).min(entropy(m.c()))
}
