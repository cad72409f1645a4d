//! The mirror-descent outer loop: log-domain gradient steps
//! `log_base -= gamma_t * C` alternating with warm-started Bregman
//! projections, followed by a single rounding onto `U(r, c)`.
//!
//! Potentials are initialized to zero once and never re-zeroed between
//! steps; the previous step's near-optimal duals are the next step's warm
//! start.

use serde::{Deserialize, Serialize};

use crate::dual;
use crate::error::{DomainError, SolveError};
use crate::plan::{CostMatrix, Marginals, ScaledPlan};
use crate::projections::{
    pncg_project, sinkhorn_project, InnerIteration, ProjectionResult, ProjectorKind,
};
use crate::rounding::round_to_polytope;

/// Safety cap on projection iterations; generous because unpreconditioned
/// NCG on low-entropy marginals can be extremely slow.
pub const DEFAULT_MAX_PROJ_ITERS: usize = 100_000;

/// Epsilon floor when the formula degenerates (`H_min = 0` means the only
/// feasible plan is the independence coupling and any positive tolerance
/// works).
pub const EPSILON_FLOOR: f64 = 1e-14;

/// Constant step schedule `gamma_t = gamma_bar / T` with
/// `T = max(1, floor(gamma_bar / 256))`: the largest fixed step below the
/// 64-bit stability boundary.
pub fn step_schedule(gamma_bar: f64) -> Vec<f64> {
    let t = ((gamma_bar / 256.0).floor() as usize).max(1);
    vec![gamma_bar / t as f64; t]
}

/// Default projection tolerance `min(1e-5, 1e-5 * (H_min / gamma_bar)^2)`.
///
/// Returns the raw formula value; [`MdConfig::auto`] floors it at
/// [`EPSILON_FLOOR`].
pub fn default_epsilon(h_min: f64, gamma_bar: f64) -> f64 {
    let ratio = h_min / gamma_bar;
    1e-5_f64.min(1e-5 * ratio * ratio)
}

/// Base matrix the solve starts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialPlan {
    /// `P0 = r c^T`, the strictly feasible independence coupling.
    Independence,
    /// `P0 = 1_{n x n}`, recovering classic entropic projection when `T = 1`.
    AllOnes,
}

/// Outer-loop parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdConfig {
    /// Total inverse-regularization budget; the schedule must sum to it.
    pub gamma_bar: f64,
    pub schedule: Vec<f64>,
    /// Projection stopping tolerance on `rho`, shared by all steps.
    pub epsilon: f64,
    pub projector: ProjectorKind,
    pub max_proj_iters: usize,
    pub initial_plan: InitialPlan,
}

impl MdConfig {
    /// Uniform schedule with an explicit step count.
    pub fn uniform(gamma_bar: f64, steps: usize, epsilon: f64, projector: ProjectorKind) -> Self {
        let t = steps.max(1);
        Self {
            gamma_bar,
            schedule: vec![gamma_bar / t as f64; t],
            epsilon,
            projector,
            max_proj_iters: DEFAULT_MAX_PROJ_ITERS,
            initial_plan: InitialPlan::Independence,
        }
    }

    /// Paper-default schedule and tolerance for a problem with the given
    /// `H_min`.
    pub fn auto(gamma_bar: f64, h_min: f64, projector: ProjectorKind) -> Self {
        Self {
            gamma_bar,
            schedule: step_schedule(gamma_bar),
            epsilon: default_epsilon(h_min, gamma_bar).max(EPSILON_FLOOR),
            projector,
            max_proj_iters: DEFAULT_MAX_PROJ_ITERS,
            initial_plan: InitialPlan::Independence,
        }
    }

    pub fn steps(&self) -> usize {
        self.schedule.len()
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        if !(self.gamma_bar > 0.0) {
            return Err(SolveError::Config(format!(
                "gamma_bar must be positive, got {}",
                self.gamma_bar
            )));
        }
        if self.schedule.is_empty() {
            return Err(SolveError::Config("schedule is empty".into()));
        }
        if self.schedule.iter().any(|&g| !(g > 0.0)) {
            return Err(SolveError::Config("schedule entries must be positive".into()));
        }
        let sum: f64 = self.schedule.iter().sum();
        let tol = 1e-12 * self.gamma_bar.max(1.0);
        if (sum - self.gamma_bar).abs() > tol {
            return Err(SolveError::Config(format!(
                "schedule sums to {sum}, expected gamma_bar = {}",
                self.gamma_bar
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(SolveError::Config(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.max_proj_iters == 0 {
            return Err(SolveError::Config("max_proj_iters must be positive".into()));
        }
        Ok(())
    }
}

/// One row of the per-iteration trace: outer step, inner step, infeasibility,
/// dual objective, line-search evaluation count, elapsed seconds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub t: usize,
    pub k: usize,
    pub rho: f64,
    pub dual_objective: f64,
    pub phi_prime_evals: usize,
    pub elapsed_s: f64,
}

/// Per-iteration records plus aggregate counts.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SolveTrace {
    pub rows: Vec<TraceRow>,
    pub total_dual_updates: usize,
    pub total_phi_prime_evals: usize,
    pub total_elapsed_s: f64,
}

/// Summary of one MD step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepSummary {
    pub t: usize,
    pub gamma_t: f64,
    /// Infeasibility at entry, i.e. right after the gradient step, with
    /// warm-started potentials.
    pub initial_rho: f64,
    pub final_rho: f64,
    pub iterations: usize,
    pub phi_prime_evals: usize,
    pub elapsed_s: f64,
}

/// Outcome of a full solve.
#[derive(Debug, Clone)]
pub struct SolveReport {
    /// Final log-domain plan (unrounded).
    pub plan: ScaledPlan,
    /// Final plan rounded exactly onto `U(r, c)`.
    pub rounded: Vec<f64>,
    /// `<rounded, C>`.
    pub objective: f64,
    pub steps: Vec<StepSummary>,
    pub trace: SolveTrace,
    pub config: MdConfig,
}

/// Run the solve, calling `on_step(t, plan)` after each projection.
pub fn solve_with(
    cost: &CostMatrix,
    m: &Marginals,
    config: &MdConfig,
    mut on_step: impl FnMut(usize, &ScaledPlan),
) -> Result<SolveReport, SolveError> {
    config.validate()?;
    if cost.n() != m.n() {
        return Err(SolveError::Domain(DomainError::DimensionMismatch {
            expected: m.n(),
            got: cost.n(),
        }));
    }

    let mut plan = match config.initial_plan {
        InitialPlan::Independence => ScaledPlan::from_independence(m),
        InitialPlan::AllOnes => ScaledPlan::all_ones(m.n()),
    };
    let mut trace = SolveTrace::default();
    let mut steps = Vec::with_capacity(config.steps());

    for (idx, &gamma_t) in config.schedule.iter().enumerate() {
        let t = idx + 1;
        plan.gradient_step(gamma_t, cost);
        let result = run_projection(&mut plan, m, config)
            .map_err(|e| SolveError::from_projection(e, t, gamma_t))?;
        if !result.converged {
            return Err(SolveError::NonConvergence {
                step: t,
                rho: result.final_rho,
                iterations: result.iterations,
                epsilon: config.epsilon,
            });
        }
        absorb(&mut trace, &mut steps, t, gamma_t, &result);
        on_step(t, &plan);
    }

    let last_gamma = *config.schedule.last().expect("validated non-empty");
    let p = plan
        .materialize()
        .map_err(|e| SolveError::Instability {
            step: config.steps(),
            gamma_t: last_gamma,
            source: e,
        })?;
    let rounded = round_to_polytope(&p, m);
    let objective: f64 = rounded.iter().zip(cost.entries()).map(|(a, b)| a * b).sum();

    Ok(SolveReport {
        plan,
        rounded,
        objective,
        steps,
        trace,
        config: config.clone(),
    })
}

/// Run the solve without step callbacks.
pub fn solve(
    cost: &CostMatrix,
    m: &Marginals,
    config: &MdConfig,
) -> Result<SolveReport, SolveError> {
    solve_with(cost, m, config, |_, _| {})
}

fn run_projection(
    plan: &mut ScaledPlan,
    m: &Marginals,
    config: &MdConfig,
) -> Result<ProjectionResult, crate::error::ProjectionError> {
    match config.projector {
        ProjectorKind::Sinkhorn => sinkhorn_project(plan, m, config.epsilon, config.max_proj_iters),
        ProjectorKind::Pncg => pncg_project(plan, m, config.epsilon, config.max_proj_iters, true),
        ProjectorKind::Ncg => pncg_project(plan, m, config.epsilon, config.max_proj_iters, false),
    }
}

fn absorb(
    trace: &mut SolveTrace,
    steps: &mut Vec<StepSummary>,
    t: usize,
    gamma_t: f64,
    result: &ProjectionResult,
) {
    let initial_rho = result.trace.first().map(|r| r.rho).unwrap_or(f64::NAN);
    let elapsed = result.trace.last().map(|r| r.elapsed_s).unwrap_or(0.0);
    steps.push(StepSummary {
        t,
        gamma_t,
        initial_rho,
        final_rho: result.final_rho,
        iterations: result.iterations,
        phi_prime_evals: result.phi_prime_evals,
        elapsed_s: elapsed,
    });
    for row in &result.trace {
        push_row(trace, t, row);
    }
    trace.total_dual_updates += result.iterations;
    trace.total_phi_prime_evals += result.phi_prime_evals;
    trace.total_elapsed_s += elapsed;
}

fn push_row(trace: &mut SolveTrace, t: usize, row: &InnerIteration) {
    trace.rows.push(TraceRow {
        t,
        k: row.k,
        rho: row.rho,
        dual_objective: row.dual_objective,
        phi_prime_evals: row.phi_prime_evals,
        elapsed_s: row.elapsed_s,
    });
}

/// Both sides of the one-step improvement identity for consecutive feasible
/// iterates: `lhs = <prev - next, C>` and
/// `rhs = (genKL(prev, next) + genKL(next, prev)) / gamma_t`.
pub fn improvement_identity(
    prev: &[f64],
    next: &[f64],
    cost: &CostMatrix,
    gamma_t: f64,
) -> Result<(f64, f64), DomainError> {
    let lhs: f64 = prev
        .iter()
        .zip(next)
        .zip(cost.entries())
        .map(|((a, b), c)| (a - b) * c)
        .sum();
    let rhs = (dual::gen_kl(prev, next)? + dual::gen_kl(next, prev)?) / gamma_t;
    Ok((lhs, rhs))
}
