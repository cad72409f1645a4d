//! Deterministic benchmark instance generation and ingestion.
//!
//! Synthetic instances: costs from pairwise distances of points sampled
//! uniformly on the unit sphere, marginals from Dirichlet draws tuned to a
//! target Shannon entropy. MNIST: IDX image files turned into distributions
//! over the 28x28 pixel grid with an L1 ground cost.
//!
//! Everything is seeded; identical seeds give bit-identical outputs.

mod idx;
mod mnist;
mod synthetic;

pub use idx::{parse_idx, parse_idx_bytes, IdxImages};
pub use mnist::{mnist_cost_matrix, mnist_to_distribution, MNIST_PIXELS, MNIST_SIDE};
pub use synthetic::{
    cost_from_distances, cost_point_cloud, cross_distances, sample_cost_matrix,
    sample_entropy_marginal, sample_sphere_points, synthetic_instance, MarginalSample,
    SyntheticSpec,
};

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use thiserror::Error;

use crate::error::DomainError;
use crate::plan::{CostMatrix, Marginals};

#[derive(Debug, Error)]
pub enum DatagenError {
    #[error(
        "entropy target {target:.6} nats not reached within budget (best achieved {best:.6}, tolerance {tolerance})"
    )]
    EntropyTargetUnreachable {
        target: f64,
        best: f64,
        tolerance: f64,
    },
    #[error("degenerate distance matrix: all pairwise distances equal")]
    DegenerateDistances,
    #[error("bad IDX magic: expected 0x00000803, got {got:#010x}")]
    BadMagic { got: u32 },
    #[error("IDX dimensions {rows}x{cols} unsupported (expected 28x28)")]
    WrongDimensions { rows: u32, cols: u32 },
    #[error("file truncated: expected {expected} bytes of pixel data, got {got}")]
    Truncated { expected: usize, got: usize },
    #[error("bad instance file magic")]
    BadInstanceMagic,
    #[error("unsupported instance file version {0}")]
    BadInstanceVersion(u32),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A complete OT benchmark instance.
#[derive(Debug, Clone)]
pub struct Instance {
    pub cost: CostMatrix,
    pub marginals: Marginals,
    pub meta: InstanceMeta,
}

/// Provenance recorded with every generated instance.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct InstanceMeta {
    pub n: u64,
    pub dim: u64,
    pub seed: u64,
    /// Entropy targets in nats (NaN when not applicable, e.g. MNIST-derived).
    pub target_entropy_r: f64,
    pub target_entropy_c: f64,
    pub achieved_entropy_r: f64,
    pub achieved_entropy_c: f64,
}

const INSTANCE_MAGIC: &[u8; 8] = b"MDOTINST";
const INSTANCE_VERSION: u32 = 1;

/// Serialize an instance: 8-byte magic, little-endian u32 version, header
/// (n, m, seed as u64; four f64 entropy fields), then `r`, `c` and row-major
/// `C` as little-endian f64.
pub fn write_instance(path: &Path, inst: &Instance) -> Result<(), DatagenError> {
    let mut w = io::BufWriter::new(fs::File::create(path)?);
    w.write_all(INSTANCE_MAGIC)?;
    w.write_u32::<LittleEndian>(INSTANCE_VERSION)?;
    w.write_u64::<LittleEndian>(inst.meta.n)?;
    w.write_u64::<LittleEndian>(inst.meta.dim)?;
    w.write_u64::<LittleEndian>(inst.meta.seed)?;
    w.write_f64::<LittleEndian>(inst.meta.target_entropy_r)?;
    w.write_f64::<LittleEndian>(inst.meta.target_entropy_c)?;
    w.write_f64::<LittleEndian>(inst.meta.achieved_entropy_r)?;
    w.write_f64::<LittleEndian>(inst.meta.achieved_entropy_c)?;
    for &x in inst.marginals.r() {
        w.write_f64::<LittleEndian>(x)?;
    }
    for &x in inst.marginals.c() {
        w.write_f64::<LittleEndian>(x)?;
    }
    for &x in inst.cost.entries() {
        w.write_f64::<LittleEndian>(x)?;
    }
    w.flush()?;
    Ok(())
}

/// Read an instance written by [`write_instance`], re-validating all
/// invariants on the way in.
pub fn read_instance(path: &Path) -> Result<Instance, DatagenError> {
    let mut r = io::BufReader::new(fs::File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != INSTANCE_MAGIC {
        return Err(DatagenError::BadInstanceMagic);
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != INSTANCE_VERSION {
        return Err(DatagenError::BadInstanceVersion(version));
    }
    let n = r.read_u64::<LittleEndian>()?;
    let dim = r.read_u64::<LittleEndian>()?;
    let seed = r.read_u64::<LittleEndian>()?;
    let target_entropy_r = r.read_f64::<LittleEndian>()?;
    let target_entropy_c = r.read_f64::<LittleEndian>()?;
    let achieved_entropy_r = r.read_f64::<LittleEndian>()?;
    let achieved_entropy_c = r.read_f64::<LittleEndian>()?;
    let n_us = n as usize;
    let mut read_vec = |len: usize| -> Result<Vec<f64>, DatagenError> {
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            out.push(r.read_f64::<LittleEndian>()?);
        }
        Ok(out)
    };
    let rv = read_vec(n_us)?;
    let cv = read_vec(n_us)?;
    let entries = read_vec(n_us * n_us)?;
    Ok(Instance {
        cost: CostMatrix::new(n_us, entries)?,
        marginals: Marginals::new(rv, cv)?,
        meta: InstanceMeta {
            n,
            dim,
            seed,
            target_entropy_r,
            target_entropy_c,
            achieved_entropy_r,
            achieved_entropy_c,
        },
    })
}

/// Deterministic child seed for a named generation stream.
pub(crate) fn substream(seed: u64, idx: u64) -> u64 {
    seed ^ 0x9E37_79B9_7F4A_7C15u64.wrapping_mul(idx + 1)
}
