//! Synthetic instance generation: unit-sphere point clouds for costs,
//! entropy-targeted Dirichlet draws for marginals.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::dual::entropy;
use crate::plan::{CostMatrix, Marginals};

use super::{substream, DatagenError, Instance, InstanceMeta};

/// Entries below this are floored (add the floor to every entry, then
/// renormalize), keeping marginals strictly positive.
const ENTRY_FLOOR: f64 = 1e-8;

/// Dirichlet concentration search: bisection on log-concentration over this
/// interval, drawing a batch per round.
const LOG_CONC_LO: f64 = -10.0;
const LOG_CONC_HI: f64 = 10.0;
const BISECTION_ROUNDS: usize = 64;
const BATCH: usize = 256;

/// Parameters for one synthetic instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub n: usize,
    /// Ambient dimension of the sampled points.
    pub dim: usize,
    /// Target marginal entropy as a fraction of `ln n`, in (0, 1).
    pub target_entropy_fraction: f64,
    /// Half-width of the accepted entropy window, in nats.
    pub entropy_tolerance: f64,
    pub seed: u64,
}

/// A marginal draw that hit its entropy window, with the concentration the
/// search settled on.
#[derive(Debug, Clone)]
pub struct MarginalSample {
    pub probs: Vec<f64>,
    pub concentration: f64,
    pub entropy: f64,
}

/// `count` points sampled uniformly on the unit sphere in `R^dim`
/// (normalized standard Gaussians), row-major `count x dim`.
pub fn sample_sphere_points(count: usize, dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut pts = vec![0.0; count * dim];
    for p in pts.chunks_exact_mut(dim) {
        loop {
            let mut norm_sq = 0.0f64;
            for x in p.iter_mut() {
                *x = StandardNormal.sample(rng);
                norm_sq += *x * *x;
            }
            if norm_sq > 1e-24 {
                let inv = norm_sq.sqrt().recip();
                for x in p.iter_mut() {
                    *x *= inv;
                }
                break;
            }
        }
    }
    pts
}

/// Euclidean distances between the first `n` and last `n` of `2n` points,
/// row-major `n x n`.
pub fn cross_distances(points: &[f64], n: usize, dim: usize) -> Vec<f64> {
    debug_assert_eq!(points.len(), 2 * n * dim);
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        let a = &points[i * dim..(i + 1) * dim];
        for j in 0..n {
            let b = &points[(n + j) * dim..(n + j + 1) * dim];
            let mut s = 0.0;
            for k in 0..dim {
                let diff = a[k] - b[k];
                s += diff * diff;
            }
            d[i * n + j] = s.sqrt();
        }
    }
    d
}

/// Shift-and-scale distances onto `[0, 1]`: subtract the minimum, divide by
/// the new maximum. Min becomes exactly 0 and max exactly 1.
pub fn cost_from_distances(mut d: Vec<f64>, n: usize) -> Result<CostMatrix, DatagenError> {
    let min = d.iter().cloned().fold(f64::INFINITY, f64::min);
    for x in &mut d {
        *x -= min;
    }
    let max = d.iter().cloned().fold(0.0f64, f64::max);
    if max <= 0.0 {
        return Err(DatagenError::DegenerateDistances);
    }
    for x in &mut d {
        *x /= max;
        // guard round-off pushing an entry epsilon above one
        *x = x.min(1.0);
    }
    Ok(CostMatrix::new(n, d)?)
}

/// The `2n` unit-sphere points a cost matrix for `seed` is built from.
pub fn cost_point_cloud(n: usize, dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(substream(seed, 0));
    sample_sphere_points(2 * n, dim, &mut rng)
}

/// Sample a cost matrix per the synthetic protocol.
pub fn sample_cost_matrix(n: usize, dim: usize, seed: u64) -> Result<CostMatrix, DatagenError> {
    let pts = cost_point_cloud(n, dim, seed);
    cost_from_distances(cross_distances(&pts, n, dim), n)
}

fn floored(mut probs: Vec<f64>) -> Vec<f64> {
    if probs.iter().any(|&x| x < ENTRY_FLOOR) {
        let n = probs.len() as f64;
        let denom = 1.0 + n * ENTRY_FLOOR;
        for x in &mut probs {
            *x = (*x + ENTRY_FLOOR) / denom;
        }
    }
    probs
}

/// Draw simplex vectors from symmetric Dirichlet distributions, bisecting on
/// log-concentration until one lands within `tolerance` nats of
/// `target_entropy` (measured after flooring and renormalization).
pub fn sample_entropy_marginal(
    n: usize,
    target_entropy: f64,
    tolerance: f64,
    seed: u64,
) -> Result<MarginalSample, DatagenError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lo = LOG_CONC_LO;
    let mut hi = LOG_CONC_HI;
    let mut best_gap = f64::INFINITY;
    let mut best_entropy = f64::NAN;

    for _ in 0..BISECTION_ROUNDS {
        let mid = 0.5 * (lo + hi);
        let alpha = mid.exp();
        let gamma = Gamma::new(alpha, 1.0).expect("positive shape");
        let mut mean_entropy = 0.0;
        let mut measured = 0usize;
        for _ in 0..BATCH {
            let mut raw: Vec<f64> = (0..n).map(|_| gamma.sample(&mut rng)).collect();
            let sum: f64 = raw.iter().sum();
            if !(sum > 0.0) {
                // all coordinates underflowed (possible at tiny alpha)
                continue;
            }
            for x in &mut raw {
                *x /= sum;
            }
            let probs = floored(raw);
            let h = entropy(&probs);
            mean_entropy += h;
            measured += 1;
            let gap = (h - target_entropy).abs();
            if gap <= tolerance {
                return Ok(MarginalSample {
                    probs,
                    concentration: alpha,
                    entropy: h,
                });
            }
            if gap < best_gap {
                best_gap = gap;
                best_entropy = h;
            }
        }
        if measured == 0 {
            // whole batch degenerate: concentration far too small
            lo = mid;
            continue;
        }
        if mean_entropy / (measured as f64) < target_entropy {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    Err(DatagenError::EntropyTargetUnreachable {
        target: target_entropy,
        best: best_entropy,
        tolerance,
    })
}

/// Generate a full synthetic instance: cost from stream 0, `r` from stream
/// 1, `c` from stream 2, all derived from `spec.seed`.
pub fn synthetic_instance(spec: &SyntheticSpec) -> Result<Instance, DatagenError> {
    let target = spec.target_entropy_fraction * (spec.n as f64).ln();
    let cost = sample_cost_matrix(spec.n, spec.dim, spec.seed)?;
    let r = sample_entropy_marginal(
        spec.n,
        target,
        spec.entropy_tolerance,
        substream(spec.seed, 1),
    )?;
    let c = sample_entropy_marginal(
        spec.n,
        target,
        spec.entropy_tolerance,
        substream(spec.seed, 2),
    )?;
    let marginals = Marginals::new(r.probs, c.probs)?;
    Ok(Instance {
        cost,
        marginals,
        meta: InstanceMeta {
            n: spec.n as u64,
            dim: spec.dim as u64,
            seed: spec.seed,
            target_entropy_r: target,
            target_entropy_c: target,
            achieved_entropy_r: r.entropy,
            achieved_entropy_c: c.entropy,
        },
    })
}
