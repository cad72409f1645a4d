//! Exact linear assignment by shortest augmenting paths with dual
//! potentials (the O(n^3) Hungarian method), used as the exact-OT oracle for
//! uniform marginals: the vertices of the assignment polytope are
//! permutation matrices, so `(1/n) * assignment cost` is the exact
//! transport cost.

use crate::plan::CostMatrix;

/// Minimum-cost perfect assignment on a dense `n x n` cost matrix
/// (row-major). Returns the total cost and, for each row, its assigned
/// column.
pub fn min_assignment(costs: &[f64], n: usize) -> (f64, Vec<usize>) {
    debug_assert_eq!(costs.len(), n * n);
    if n == 0 {
        return (0.0, Vec::new());
    }
    // 1-indexed potentials; column 0 is the virtual root of each
    // augmenting-path search.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut matched_row = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0usize;
        let mut min_slack = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let reduced = costs[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if reduced < min_slack[j] {
                    min_slack[j] = reduced;
                    way[j] = j0;
                }
                if min_slack[j] < delta {
                    delta = min_slack[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_slack[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![0usize; n];
    let mut total = 0.0;
    for j in 1..=n {
        if matched_row[j] > 0 {
            assignment[matched_row[j] - 1] = j - 1;
            total += costs[(matched_row[j] - 1) * n + (j - 1)];
        }
    }
    (total, assignment)
}

/// Exact OT cost for uniform marginals `(1/n, ..., 1/n)`:
/// `(1/n) * min-assignment cost`.
pub fn exact_assignment_ot(cost: &CostMatrix) -> f64 {
    let (total, _) = min_assignment(cost.entries(), cost.n());
    total / cost.n() as f64
}
