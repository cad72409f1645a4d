//! Domain types: target marginals, cost matrix, and the log-domain plan.

use crate::error::{DomainError, Instability};
use crate::kernels;

pub use crate::kernels::PlanSums as PlanMarginals;

/// Tolerance for "sums to one" checks on probability vectors.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Strictly positive target marginals `(r, c)`, each on the simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginals {
    r: Vec<f64>,
    c: Vec<f64>,
}

impl Marginals {
    pub fn new(r: Vec<f64>, c: Vec<f64>) -> Result<Self, DomainError> {
        if r.len() != c.len() {
            return Err(DomainError::DimensionMismatch {
                expected: r.len(),
                got: c.len(),
            });
        }
        for vec in [&r, &c] {
            for (i, &x) in vec.iter().enumerate() {
                if !x.is_finite() {
                    return Err(DomainError::NonFiniteEntry { index: i, value: x });
                }
                if x <= 0.0 {
                    return Err(DomainError::NonPositiveEntry { index: i, value: x });
                }
            }
            let sum: f64 = vec.iter().sum();
            if (sum - 1.0).abs() > SIMPLEX_TOL {
                return Err(DomainError::NotNormalized {
                    sum,
                    tol: SIMPLEX_TOL,
                });
            }
        }
        Ok(Self { r, c })
    }

    pub fn uniform(n: usize) -> Self {
        let w = 1.0 / n as f64;
        Self {
            r: vec![w; n],
            c: vec![w; n],
        }
    }

    pub fn n(&self) -> usize {
        self.r.len()
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }
}

/// Dense `n x n` cost matrix with entries in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl CostMatrix {
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self, DomainError> {
        if entries.len() != n * n {
            return Err(DomainError::DimensionMismatch {
                expected: n * n,
                got: entries.len(),
            });
        }
        for (i, &x) in entries.iter().enumerate() {
            if !x.is_finite() {
                return Err(DomainError::NonFiniteEntry { index: i, value: x });
            }
            if !(0.0..=1.0).contains(&x) {
                return Err(DomainError::CostOutOfRange { index: i, value: x });
            }
        }
        Ok(Self { n, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    /// Largest entry (the sup norm, since entries are non-negative).
    pub fn max_entry(&self) -> f64 {
        self.entries.iter().cloned().fold(0.0, f64::max)
    }
}

/// Log-domain representation of a positive matrix: a base log-matrix plus
/// dual potentials, materializing `P_ij = exp(log_base_ij + u_i + v_j)`.
///
/// `P` is invariant under the shift `(u + d*1, v - d*1)`; nothing in this
/// crate depends on the absolute level of the potentials.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledPlan {
    n: usize,
    log_base: Vec<f64>,
    u: Vec<f64>,
    v: Vec<f64>,
}

impl ScaledPlan {
    /// Plan with arbitrary finite log-base and potentials.
    pub fn new(n: usize, log_base: Vec<f64>, u: Vec<f64>, v: Vec<f64>) -> Result<Self, DomainError> {
        if log_base.len() != n * n {
            return Err(DomainError::DimensionMismatch {
                expected: n * n,
                got: log_base.len(),
            });
        }
        if u.len() != n || v.len() != n {
            return Err(DomainError::DimensionMismatch {
                expected: n,
                got: u.len().max(v.len()),
            });
        }
        for slice in [&log_base, &u, &v] {
            if let Some((i, &x)) = slice.iter().enumerate().find(|(_, x)| !x.is_finite()) {
                return Err(DomainError::NonFiniteEntry { index: i, value: x });
            }
        }
        Ok(Self { n, log_base, u, v })
    }

    /// The independence coupling `P0 = r c^T` with zero potentials.
    pub fn from_independence(m: &Marginals) -> Self {
        let n = m.n();
        let log_r: Vec<f64> = m.r().iter().map(|x| x.ln()).collect();
        let log_c: Vec<f64> = m.c().iter().map(|x| x.ln()).collect();
        let mut log_base = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                log_base[i * n + j] = log_r[i] + log_c[j];
            }
        }
        Self {
            n,
            log_base,
            u: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    /// The all-ones base `P0 = 1_{n x n}` (classic Sinkhorn initialization).
    pub fn all_ones(n: usize) -> Self {
        Self {
            n,
            log_base: vec![0.0; n * n],
            u: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn log_base(&self) -> &[f64] {
        &self.log_base
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn set_potentials(&mut self, u: Vec<f64>, v: Vec<f64>) -> Result<(), DomainError> {
        if u.len() != self.n || v.len() != self.n {
            return Err(DomainError::DimensionMismatch {
                expected: self.n,
                got: u.len().max(v.len()),
            });
        }
        for slice in [&u, &v] {
            if let Some((i, &x)) = slice.iter().enumerate().find(|(_, x)| !x.is_finite()) {
                return Err(DomainError::NonFiniteEntry { index: i, value: x });
            }
        }
        self.u = u;
        self.v = v;
        Ok(())
    }

    pub(crate) fn potentials_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.u, &mut self.v)
    }

    /// Log-domain gradient step: `log_base -= gamma * C`.
    pub fn gradient_step(&mut self, gamma: f64, cost: &CostMatrix) {
        debug_assert_eq!(cost.n(), self.n);
        for (lb, c) in self.log_base.iter_mut().zip(cost.entries()) {
            *lb -= gamma * c;
        }
    }

    /// Row/column/total sums of the materialized plan.
    pub fn marginals(&self) -> Result<PlanMarginals, Instability> {
        kernels::plan_marginals(self.n, &self.log_base, &self.u, &self.v)
    }

    /// The materialized matrix `P`.
    pub fn materialize(&self) -> Result<Vec<f64>, Instability> {
        kernels::materialize(self.n, &self.log_base, &self.u, &self.v)
    }

    /// `sum_ij w_ij P_ij` without materializing `P`.
    pub fn weighted_sum(&self, w: &[f64]) -> Result<f64, Instability> {
        kernels::weighted_plan_sum(self.n, &self.log_base, &self.u, &self.v, w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_marginals(n: usize, rng: &mut ChaCha8Rng) -> Marginals {
        let draw = |rng: &mut ChaCha8Rng| {
            let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / s).collect::<Vec<_>>()
        };
        Marginals::new(draw(rng), draw(rng)).unwrap()
    }

    #[test]
    fn identity_potentials_materialize_the_base() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 5;
        let log_base: Vec<f64> = (0..n * n).map(|_| rng.random_range(-2.0..0.0)).collect();
        let plan = ScaledPlan::new(n, log_base.clone(), vec![0.0; n], vec![0.0; n]).unwrap();
        let p = plan.materialize().unwrap();
        for (got, lb) in p.iter().zip(&log_base) {
            assert_eq!(*got, lb.exp());
        }
    }

    #[test]
    fn shift_by_constant_leaves_plan_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 6;
        let log_base: Vec<f64> = (0..n * n).map(|_| rng.random_range(-3.0..0.0)).collect();
        let u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let plan = ScaledPlan::new(n, log_base.clone(), u.clone(), v.clone()).unwrap();
        let delta = 3.7;
        let shifted = ScaledPlan::new(
            n,
            log_base,
            u.iter().map(|x| x + delta).collect(),
            v.iter().map(|x| x - delta).collect(),
        )
        .unwrap();
        let p = plan.materialize().unwrap();
        let q = shifted.materialize().unwrap();
        for (a, b) in p.iter().zip(&q) {
            assert!((a - b).abs() <= 1e-12 * a.max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn rank_one_base_matches_direct_elementwise_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 4;
        let m = random_marginals(n, &mut rng);
        let gamma = 2.5;
        let cost = CostMatrix::new(
            n,
            (0..n * n).map(|_| rng.random_range(0.0..1.0)).collect(),
        )
        .unwrap();
        let mut plan = ScaledPlan::from_independence(&m);
        plan.gradient_step(gamma, &cost);
        let p = plan.materialize().unwrap();
        for i in 0..n {
            for j in 0..n {
                let direct = m.r()[i] * m.c()[j] * (-gamma * cost.entry(i, j)).exp();
                let got = p[i * n + j];
                assert!(
                    (got - direct).abs() <= 1e-14 * direct.max(1e-300),
                    "({i},{j}): {got} vs {direct}"
                );
            }
        }
    }

    #[test]
    fn constructors_reject_bad_input() {
        assert!(Marginals::new(vec![0.5, 0.5], vec![0.6, 0.5]).is_err());
        assert!(Marginals::new(vec![1.0, 0.0], vec![0.5, 0.5]).is_err());
        assert!(CostMatrix::new(2, vec![0.0, 0.5, 1.0, 1.5]).is_err());
        assert!(ScaledPlan::new(2, vec![0.0; 4], vec![f64::NAN, 0.0], vec![0.0; 2]).is_err());
    }

    proptest! {
        #[test]
        fn shift_invariance_holds_for_bounded_deltas(delta in -10.0f64..10.0, seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 4;
            let log_base: Vec<f64> = (0..n * n).map(|_| rng.random_range(-4.0..0.0)).collect();
            let u: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let base = ScaledPlan::new(n, log_base.clone(), u.clone(), v.clone()).unwrap();
            let shifted = ScaledPlan::new(
                n,
                log_base,
                u.iter().map(|x| x + delta).collect(),
                v.iter().map(|x| x - delta).collect(),
            ).unwrap();
            let p = base.materialize().unwrap();
            let q = shifted.materialize().unwrap();
            for (a, b) in p.iter().zip(&q) {
                prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
            }
        }
    }
}
