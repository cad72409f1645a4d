//! Independent oracles and analysis tools: exact assignment OT, dual Hessian
//! spectra with pseudo-condition numbers, and the Hilbert projective metric
//! with its Sinkhorn contraction bound.

mod assignment;
mod hilbert;
mod spectrum;

pub use assignment::{exact_assignment_ot, min_assignment};
pub use hilbert::{contraction_check, hilbert_metric, var_norm, ContractionCheck};
pub use spectrum::{dual_hessian, pseudo_condition_number, sinkhorn_preconditioner};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("spectrum degenerate: second-smallest eigenvalue {lambda2:.3e} below 1e-14")]
    DegenerateSpectrum { lambda2: f64 },
    #[error(transparent)]
    Domain(#[from] crate::error::DomainError),
    #[error(transparent)]
    Instability(#[from] crate::error::Instability),
    #[error(transparent)]
    Projection(#[from] crate::error::ProjectionError),
}
