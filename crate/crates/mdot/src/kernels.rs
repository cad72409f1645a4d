//! Dense log-domain kernels: fused exponentiation + reduction over
//! `P_ij = exp(log_base_ij + u_i + v_j)`.
//!
//! Every reduction is computed from fixed-size row-chunk partials (row-major
//! within a chunk) combined in chunk order. With the `parallel` feature the
//! chunks are mapped with rayon and then folded in the same order, so results
//! are bit-identical to the sequential path for any thread count.

use crate::error::Instability;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Natural-log exponent above which a materialization aborts with
/// [`Instability::ExponentOverflow`] instead of producing huge or infinite
/// entries.
pub const MAX_EXPONENT: f64 = 700.0;

/// Rows per reduction chunk. Fixed (not thread-count dependent) so the
/// combination order, and therefore every bit of the result, is stable.
const ROW_CHUNK: usize = 16;

/// Row sums, column sums and total mass of a materialized plan.
#[derive(Debug, Clone)]
pub struct PlanSums {
    pub row: Vec<f64>,
    pub col: Vec<f64>,
    pub total: f64,
    /// Largest exponent seen; at most [`MAX_EXPONENT`] on the `Ok` path.
    pub max_exponent: f64,
}

struct MarginalChunk {
    row: Vec<f64>,
    col: Vec<f64>,
    total: f64,
    max_exponent: f64,
}

fn marginal_chunk(n: usize, rows: &[f64], row0: usize, u: &[f64], v: &[f64]) -> MarginalChunk {
    let nrows = rows.len() / n;
    let mut out = MarginalChunk {
        row: Vec::with_capacity(nrows),
        col: vec![0.0; n],
        total: 0.0,
        max_exponent: f64::NEG_INFINITY,
    };
    for (k, lb_row) in rows.chunks_exact(n).enumerate() {
        let ui = u[row0 + k];
        let mut row_sum = 0.0;
        for (j, &lb) in lb_row.iter().enumerate() {
            let e = lb + ui + v[j];
            if e > out.max_exponent {
                out.max_exponent = e;
            }
            let p = e.exp();
            row_sum += p;
            out.col[j] += p;
        }
        out.row.push(row_sum);
        out.total += row_sum;
    }
    out
}

fn combine_marginals(n: usize, chunks: Vec<MarginalChunk>) -> Result<PlanSums, Instability> {
    let mut sums = PlanSums {
        row: Vec::with_capacity(n),
        col: vec![0.0; n],
        total: 0.0,
        max_exponent: f64::NEG_INFINITY,
    };
    for c in chunks {
        sums.row.extend_from_slice(&c.row);
        for (acc, x) in sums.col.iter_mut().zip(&c.col) {
            *acc += x;
        }
        sums.total += c.total;
        if c.max_exponent > sums.max_exponent {
            sums.max_exponent = c.max_exponent;
        }
    }
    if sums.max_exponent > MAX_EXPONENT {
        return Err(Instability::ExponentOverflow {
            max_exponent: sums.max_exponent,
            limit: MAX_EXPONENT,
        });
    }
    Ok(sums)
}

/// Row/column/total sums of `exp(log_base_ij + u_i + v_j)`.
pub fn plan_marginals(
    n: usize,
    log_base: &[f64],
    u: &[f64],
    v: &[f64],
) -> Result<PlanSums, Instability> {
    #[cfg(feature = "parallel")]
    {
        let chunks: Vec<MarginalChunk> = log_base
            .par_chunks(ROW_CHUNK * n)
            .enumerate()
            .map(|(ci, rows)| marginal_chunk(n, rows, ci * ROW_CHUNK, u, v))
            .collect();
        combine_marginals(n, chunks)
    }
    #[cfg(not(feature = "parallel"))]
    {
        plan_marginals_seq(n, log_base, u, v)
    }
}

/// Sequential reference path for [`plan_marginals`]; bit-identical to the
/// parallel path by construction.
pub fn plan_marginals_seq(
    n: usize,
    log_base: &[f64],
    u: &[f64],
    v: &[f64],
) -> Result<PlanSums, Instability> {
    let chunks: Vec<MarginalChunk> = log_base
        .chunks(ROW_CHUNK * n)
        .enumerate()
        .map(|(ci, rows)| marginal_chunk(n, rows, ci * ROW_CHUNK, u, v))
        .collect();
    combine_marginals(n, chunks)
}

fn weighted_chunk(
    n: usize,
    rows: &[f64],
    w_rows: &[f64],
    row0: usize,
    u: &[f64],
    v: &[f64],
) -> (f64, f64) {
    let mut total = 0.0;
    let mut max_exponent = f64::NEG_INFINITY;
    for (k, (lb_row, w_row)) in rows.chunks_exact(n).zip(w_rows.chunks_exact(n)).enumerate() {
        let ui = u[row0 + k];
        let mut row_acc = 0.0;
        for j in 0..n {
            let e = lb_row[j] + ui + v[j];
            if e > max_exponent {
                max_exponent = e;
            }
            row_acc += w_row[j] * e.exp();
        }
        total += row_acc;
    }
    (total, max_exponent)
}

fn combine_weighted(parts: Vec<(f64, f64)>) -> Result<f64, Instability> {
    let mut total = 0.0;
    let mut max_exponent = f64::NEG_INFINITY;
    for (t, m) in parts {
        total += t;
        if m > max_exponent {
            max_exponent = m;
        }
    }
    if max_exponent > MAX_EXPONENT {
        return Err(Instability::ExponentOverflow {
            max_exponent,
            limit: MAX_EXPONENT,
        });
    }
    Ok(total)
}

/// `sum_ij w_ij * exp(log_base_ij + u_i + v_j)`, e.g. the transport objective
/// `<P, C>` with `w = C`.
pub fn weighted_plan_sum(
    n: usize,
    log_base: &[f64],
    u: &[f64],
    v: &[f64],
    w: &[f64],
) -> Result<f64, Instability> {
    #[cfg(feature = "parallel")]
    {
        let parts: Vec<(f64, f64)> = log_base
            .par_chunks(ROW_CHUNK * n)
            .zip(w.par_chunks(ROW_CHUNK * n))
            .enumerate()
            .map(|(ci, (rows, w_rows))| weighted_chunk(n, rows, w_rows, ci * ROW_CHUNK, u, v))
            .collect();
        combine_weighted(parts)
    }
    #[cfg(not(feature = "parallel"))]
    {
        weighted_plan_sum_seq(n, log_base, u, v, w)
    }
}

/// Sequential reference path for [`weighted_plan_sum`].
pub fn weighted_plan_sum_seq(
    n: usize,
    log_base: &[f64],
    u: &[f64],
    v: &[f64],
    w: &[f64],
) -> Result<f64, Instability> {
    let parts: Vec<(f64, f64)> = log_base
        .chunks(ROW_CHUNK * n)
        .zip(w.chunks(ROW_CHUNK * n))
        .enumerate()
        .map(|(ci, (rows, w_rows))| weighted_chunk(n, rows, w_rows, ci * ROW_CHUNK, u, v))
        .collect();
    combine_weighted(parts)
}

/// Materialize the full matrix `P_ij = exp(log_base_ij + u_i + v_j)`.
pub fn materialize(
    n: usize,
    log_base: &[f64],
    u: &[f64],
    v: &[f64],
) -> Result<Vec<f64>, Instability> {
    let mut out = vec![0.0; log_base.len()];
    let fill = |ci: usize, rows: &[f64], dst: &mut [f64]| -> f64 {
        let row0 = ci * ROW_CHUNK;
        let mut max_exponent = f64::NEG_INFINITY;
        for (k, (lb_row, out_row)) in rows.chunks_exact(n).zip(dst.chunks_exact_mut(n)).enumerate()
        {
            let ui = u[row0 + k];
            for j in 0..n {
                let e = lb_row[j] + ui + v[j];
                if e > max_exponent {
                    max_exponent = e;
                }
                out_row[j] = e.exp();
            }
        }
        max_exponent
    };
    #[cfg(feature = "parallel")]
    let max_exponent = log_base
        .par_chunks(ROW_CHUNK * n)
        .zip(out.par_chunks_mut(ROW_CHUNK * n))
        .enumerate()
        .map(|(ci, (rows, dst))| fill(ci, rows, dst))
        .reduce(|| f64::NEG_INFINITY, f64::max);
    #[cfg(not(feature = "parallel"))]
    let max_exponent = log_base
        .chunks(ROW_CHUNK * n)
        .zip(out.chunks_mut(ROW_CHUNK * n))
        .enumerate()
        .map(|(ci, (rows, dst))| fill(ci, rows, dst))
        .fold(f64::NEG_INFINITY, f64::max);
    if max_exponent > MAX_EXPONENT {
        return Err(Instability::ExponentOverflow {
            max_exponent,
            limit: MAX_EXPONENT,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_state(n: usize, seed: u64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lb: Vec<f64> = (0..n * n).map(|_| rng.random_range(-3.0..0.0)).collect();
        let u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        (lb, u, v)
    }

    #[test]
    fn marginals_match_naive_sums() {
        let n = 37; // not a multiple of the chunk size
        let (lb, u, v) = random_state(n, 7);
        let sums = plan_marginals(n, &lb, &u, &v).unwrap();
        for i in 0..n {
            let naive: f64 = (0..n).map(|j| (lb[i * n + j] + u[i] + v[j]).exp()).sum();
            assert!((sums.row[i] - naive).abs() <= 1e-15 * naive.max(1.0));
        }
        let naive_total: f64 = sums.row.iter().sum();
        assert!((sums.total - naive_total).abs() <= 1e-12 * naive_total.abs().max(1.0));
    }

    #[test]
    fn parallel_and_sequential_paths_are_bit_identical() {
        let n = 53;
        let (lb, u, v) = random_state(n, 11);
        let a = plan_marginals(n, &lb, &u, &v).unwrap();
        let b = plan_marginals_seq(n, &lb, &u, &v).unwrap();
        assert_eq!(a.total.to_bits(), b.total.to_bits());
        for (x, y) in a.row.iter().zip(&b.row) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        for (x, y) in a.col.iter().zip(&b.col) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        let w: Vec<f64> = (0..n * n).map(|k| (k % 17) as f64 / 17.0).collect();
        let s = weighted_plan_sum(n, &lb, &u, &v, &w).unwrap();
        let s2 = weighted_plan_sum_seq(n, &lb, &u, &v, &w).unwrap();
        assert_eq!(s.to_bits(), s2.to_bits());
    }

    #[test]
    fn exponent_guard_reports_overflow() {
        let n = 4;
        let lb = vec![0.0; n * n];
        let u = vec![400.0; n];
        let v = vec![400.0; n];
        match plan_marginals(n, &lb, &u, &v) {
            Err(Instability::ExponentOverflow { max_exponent, .. }) => {
                assert!(max_exponent > MAX_EXPONENT)
            }
            other => panic!("expected overflow, got {other:?}"),
        }
        assert!(materialize(n, &lb, &u, &v).is_err());
    }

    #[test]
    fn infinite_potential_is_caught_by_the_guard() {
        let n = 3;
        let lb = vec![-1.0; n * n];
        let mut u = vec![0.0; n];
        u[1] = f64::INFINITY;
        let v = vec![0.0; n];
        assert!(plan_marginals(n, &lb, &u, &v).is_err());
    }

    #[test]
    fn weighted_sum_matches_materialized_dot() {
        let n = 19;
        let (lb, u, v) = random_state(n, 3);
        let w: Vec<f64> = (0..n * n).map(|k| ((k * 31 + 7) % 53) as f64 / 53.0).collect();
        let p = materialize(n, &lb, &u, &v).unwrap();
        let direct: f64 = p.iter().zip(&w).map(|(a, b)| a * b).sum();
        let fused = weighted_plan_sum(n, &lb, &u, &v, &w).unwrap();
        assert!((fused - direct).abs() <= 1e-12 * direct.abs().max(1.0));
    }
}
