//! Exact projection of an almost-feasible positive matrix onto `U(r, c)`:
//! two clipped diagonal scalings followed by a rank-1 correction.

use crate::plan::Marginals;

/// Threshold below which the rank-1 correction is skipped entirely (the
/// residuals are then zero to machine precision anyway).
const RESIDUAL_SKIP: f64 = 1e-15;

/// Round `f` (strictly positive, row-major `n x n`) onto the transportation
/// polytope: scale rows down to at most `r`, columns down to at most `c`,
/// then add back the remaining deficit as `err_r err_c^T / ||err_r||_1`.
///
/// The output has row sums `r` and column sums `c` up to machine precision
/// and stays non-negative.
pub fn round_to_polytope(f: &[f64], m: &Marginals) -> Vec<f64> {
    let n = m.n();
    debug_assert_eq!(f.len(), n * n);
    let mut g = f.to_vec();

    let mut row = vec![0.0; n];
    for i in 0..n {
        row[i] = g[i * n..(i + 1) * n].iter().sum();
    }
    for i in 0..n {
        let x = (m.r()[i] / row[i]).min(1.0);
        if x < 1.0 {
            for e in &mut g[i * n..(i + 1) * n] {
                *e *= x;
            }
        }
    }

    let mut col = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            col[j] += g[i * n + j];
        }
    }
    let y: Vec<f64> = col
        .iter()
        .zip(m.c())
        .map(|(&s, &target)| (target / s).min(1.0))
        .collect();
    for i in 0..n {
        for j in 0..n {
            g[i * n + j] *= y[j];
        }
    }

    let mut err_r = m.r().to_vec();
    let mut err_c = m.c().to_vec();
    for i in 0..n {
        for j in 0..n {
            let e = g[i * n + j];
            err_r[i] -= e;
            err_c[j] -= e;
        }
    }
    let norm: f64 = err_r.iter().map(|x| x.abs()).sum();
    if norm < RESIDUAL_SKIP {
        return g;
    }
    for i in 0..n {
        let scale = err_r[i] / norm;
        for j in 0..n {
            g[i * n + j] += scale * err_c[j];
        }
    }
    g
}
