//! Sparse row-action solvers for large consistent linear systems `Ax = f`.
//!
//! The crate bundles a family of block Kaczmarz solvers together with the
//! preprocessing machinery they need:
//!
//! - [`sparse`] — CSR storage, Matrix Market I/O, permutations, and the dense
//!   minimum-norm least-squares kernel behind every block projection.
//! - [`reorder`] — Reverse Cuthill-McKee reordering that squeezes the nonzero
//!   pattern towards the diagonal before blocking.
//! - [`partition`] — row partitions (uniform, random, k-means), block
//!   centroids, the centroid cosine table, and the orthogonal block
//!   classification used by the preprocessed orthogonal solver.
//! - [`solvers`] — the row Kaczmarz kernel and the GRBK / RBK(k) / GREBK(k) /
//!   aRBK / POBK solvers with convergence traces.
//! - [`bench`] — experiment harness: right-hand-side generation, repeated
//!   solver runs over matrix grids, CSV/JSON emission, and a fetch helper for
//!   the SuiteSparse collection.

pub mod bench;
pub mod partition;
pub mod reorder;
pub mod solvers;
pub mod sparse;

pub use sparse::{Permutation, PermuteSide, SparseMatrix};

/// Errors shared across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix must be square, got {nrows}x{ncols}")]
    NotSquare { nrows: usize, ncols: usize },

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid block partition: {0}")]
    InvalidPartition(String),

    #[error("row {0} has no nonzero entries")]
    ZeroRow(usize),

    #[error("centroid of block {0} is the zero vector; cosine undefined")]
    ZeroCentroid(usize),

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("reference solution has zero norm")]
    ZeroReference,

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("fetch failed for {name}: {msg}")]
    Fetch { name: String, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
