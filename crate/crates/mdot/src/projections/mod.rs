//! Bregman projection engines: Sinkhorn scaling and (preconditioned)
//! nonlinear conjugate gradients, plus the hybrid secant/bisection line
//! search they share.
//!
//! Both engines mutate a [`crate::ScaledPlan`] in place, accumulating dual
//! potentials onto whatever the plan already carries — warm starts are the
//! default, not a mode.

pub mod line_search;
pub mod pncg;
pub mod sinkhorn;

pub use line_search::{approximate_wolfe, phi_prime, LineSearchState, WOLFE_C1, WOLFE_C2};
pub use pncg::{beta_ppr, pncg_project, pncg_project_traced};
pub use sinkhorn::{sinkhorn_project, sinkhorn_project_traced};

use serde::{Deserialize, Serialize};

/// Which projection engine a solve uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjectorKind {
    Sinkhorn,
    /// Vanilla nonlinear CG on the dual gradient (the ablation variant).
    Ncg,
    /// NCG on the Sinkhorn direction (diagonally preconditioned gradient).
    Pncg,
}

impl std::fmt::Display for ProjectorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ProjectorKind::Sinkhorn => write!(f, "sinkhorn"),
            ProjectorKind::Ncg => write!(f, "ncg"),
            ProjectorKind::Pncg => write!(f, "pncg"),
        }
    }
}

impl std::str::FromStr for ProjectorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sinkhorn" => Ok(ProjectorKind::Sinkhorn),
            "ncg" => Ok(ProjectorKind::Ncg),
            "pncg" => Ok(ProjectorKind::Pncg),
            other => Err(format!("unknown projector '{other}' (expected sinkhorn|ncg|pncg)")),
        }
    }
}

/// Accepted step of a line search, kept for post-hoc verification of the
/// approximate Wolfe conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineSearchSample {
    pub alpha: f64,
    pub phi_zero: f64,
    pub phi_alpha: f64,
}

/// One recorded inner iteration of a projection. `k = 0` is the state at
/// entry (warm-started infeasibility, no update yet).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InnerIteration {
    pub k: usize,
    pub rho: f64,
    pub dual_objective: f64,
    pub phi_prime_evals: usize,
    pub elapsed_s: f64,
    pub line_search: Option<LineSearchSample>,
}

/// Outcome of one projection call. The updated potentials live in the plan
/// that was passed in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectionResult {
    /// Number of dual-update iterations performed (Sinkhorn half-steps or CG
    /// steps).
    pub iterations: usize,
    /// False when the iteration cap was hit before `rho <= eps`.
    pub converged: bool,
    pub final_rho: f64,
    /// Total directional-derivative evaluations across all line searches.
    pub phi_prime_evals: usize,
    pub trace: Vec<InnerIteration>,
}

pub(crate) fn dot_pair(au: &[f64], av: &[f64], bu: &[f64], bv: &[f64]) -> f64 {
    let a: f64 = au.iter().zip(bu).map(|(x, y)| x * y).sum();
    let b: f64 = av.iter().zip(bv).map(|(x, y)| x * y).sum();
    a + b
}
