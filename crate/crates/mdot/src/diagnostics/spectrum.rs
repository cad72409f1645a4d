//! Dual Hessian assembly and pseudo-condition numbers.
//!
//! The Hessian of the dual objective has the block form
//! `[[diag(r(P)), P], [P^T, diag(c(P))]]`; it is PSD with a structural zero
//! eigenvalue along `(1, -1)`, so conditioning is measured by the
//! pseudo-condition number `lambda_{2n} / lambda_2`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::dual::ln_ratio;
use crate::error::Instability;
use crate::plan::{Marginals, PlanMarginals, ScaledPlan};

use super::DiagnosticsError;

/// Assemble the dense `2n x 2n` dual Hessian at the plan's current
/// potentials. Diagnostic use only: O(n^2) storage, dense eigensolves
/// downstream.
pub fn dual_hessian(plan: &ScaledPlan) -> Result<DMatrix<f64>, Instability> {
    let n = plan.n();
    let p = plan.materialize()?;
    let sums = plan.marginals()?;
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        h[(i, i)] = sums.row[i];
        h[(n + i, n + i)] = sums.col[i];
        for j in 0..n {
            h[(i, n + j)] = p[i * n + j];
            h[(n + j, i)] = p[i * n + j];
        }
    }
    Ok(h)
}

/// Diagonal of the Sinkhorn preconditioner `M = diag(s / grad g)` at the
/// given plan marginals.
///
/// Componentwise `s_i / g_i = ln(a/b) / (a - b) = 1 / L(a, b)` with `L` the
/// logarithmic mean, which stays positive and finite as `a -> b`; the
/// near-equal case uses that limit directly.
pub fn sinkhorn_preconditioner(sums: &PlanMarginals, m: &Marginals) -> Vec<f64> {
    let ratio = |a: f64, b: f64| -> f64 {
        if (a - b).abs() <= 1e-12 * a.max(b) {
            2.0 / (a + b)
        } else {
            ln_ratio(a, b) / (a - b)
        }
    };
    sums.row
        .iter()
        .zip(m.r())
        .map(|(&a, &b)| ratio(a, b))
        .chain(sums.col.iter().zip(m.c()).map(|(&a, &b)| ratio(a, b)))
        .collect()
}

/// Eigenvalues of a symmetric matrix, ascending.
fn eigenvalues_ascending(h: &DMatrix<f64>) -> Vec<f64> {
    let eig = SymmetricEigen::new(h.clone());
    let mut vals: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
    vals.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    vals
}

/// `lambda_{2n} / lambda_2` of `H`, or of `M^{1/2} H M^{1/2}` when a
/// positive diagonal preconditioner is given (similar to `M H`, hence the
/// same spectrum, but symmetric).
pub fn pseudo_condition_number(
    h: &DMatrix<f64>,
    precond: Option<&[f64]>,
) -> Result<f64, DiagnosticsError> {
    let m = match precond {
        None => h.clone(),
        Some(d) => {
            debug_assert_eq!(d.len(), h.nrows());
            debug_assert!(d.iter().all(|&x| x > 0.0));
            let sqrt: Vec<f64> = d.iter().map(|x| x.sqrt()).collect();
            let mut s = h.clone();
            for i in 0..h.nrows() {
                for j in 0..h.ncols() {
                    s[(i, j)] *= sqrt[i] * sqrt[j];
                }
            }
            s
        }
    };
    let vals = eigenvalues_ascending(&m);
    let lambda2 = vals[1];
    if lambda2 < 1e-14 {
        return Err(DiagnosticsError::DegenerateSpectrum { lambda2 });
    }
    Ok(vals[vals.len() - 1] / lambda2)
}
