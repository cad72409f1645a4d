//! Discrete optimal transport to arbitrary accuracy via mirror descent with
//! warm-started Bregman projections.
//!
//! The outer loop ([`solver::solve`]) takes log-domain gradient steps
//! `log P <- log P - gamma_t * C` and re-projects onto the transportation
//! polytope `U(r, c)`, carrying the dual potentials `(u, v)` across steps so
//! each projection starts warm. Two projection engines are provided:
//! classic Sinkhorn scaling ([`projections::sinkhorn_project`]) and a
//! preconditioned nonlinear conjugate-gradients method
//! ([`projections::pncg_project`]) that minimizes the entropic dual with the
//! Sinkhorn direction as a diagonally preconditioned gradient.
//!
//! All plan state lives in log domain (`log_base + u_i + v_j`), so growing the
//! inverse regularization `gamma` is a pure log-domain add and instability is
//! a detectable condition (exponent guard) rather than silent NaN.
//!
//! Supporting modules: [`rounding`] (exact projection of a near-feasible plan
//! onto `U(r, c)`), [`datagen`] (seeded synthetic instances and MNIST
//! ingestion), and [`diagnostics`] (exact assignment oracle, dual Hessian
//! spectra, Hilbert projective metric).

pub mod datagen;
pub mod diagnostics;
pub mod dual;
pub mod error;
pub mod kernels;
pub mod plan;
pub mod projections;
pub mod rounding;
pub mod solver;

pub use error::{DomainError, Instability, ProjectionError, SolveError};
pub use plan::{CostMatrix, Marginals, PlanMarginals, ScaledPlan, SIMPLEX_TOL};
pub use projections::{ProjectionResult, ProjectorKind};
pub use solver::{MdConfig, SolveReport, SolveTrace};
