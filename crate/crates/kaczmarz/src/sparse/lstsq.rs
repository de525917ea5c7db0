//! Minimum-norm least squares via dense singular value decomposition.
//!
//! Row blocks are densified (restricted to their nonzero columns, which
//! leaves singular values untouched) and factored once; singular values
//! below `REL_RANK_TOL` times the largest are treated as zero, so
//! rank-deficient blocks are the normal, silently handled case.

use nalgebra::{DMatrix, DVector};

use super::SparseMatrix;
use crate::{Error, Result};

/// Relative cutoff for treating a singular value as zero.
pub const REL_RANK_TOL: f64 = 1e-12;

/// Distinct nonzero columns of `b` (ascending) and the densified restriction.
fn compress_columns(b: &SparseMatrix) -> (Vec<usize>, DMatrix<f64>) {
    let mut cols: Vec<usize> = b.iter().map(|(_, j, _)| j).collect();
    cols.sort_unstable();
    cols.dedup();
    let mut dense = DMatrix::zeros(b.nrows(), cols.len());
    for (i, j, v) in b.iter() {
        let jc = cols.binary_search(&j).expect("column collected above");
        dense[(i, jc)] = v;
    }
    (cols, dense)
}

/// Minimum-norm least-squares solution `z = B^+ r`.
///
/// Among all minimizers of `||Bz - r||_2`, returns the one of smallest
/// `||z||_2`. `r` must have one entry per row of `B`.
pub fn min_norm_lstsq(b: &SparseMatrix, r: &[f64]) -> Result<Vec<f64>> {
    if r.len() != b.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "least squares: rhs length {} vs {} rows",
            r.len(),
            b.nrows()
        )));
    }
    let mut z = vec![0.0; b.ncols()];
    if b.nnz() == 0 {
        return Ok(z);
    }
    let (cols, dense) = compress_columns(b);
    let svd = dense.svd(true, true);
    let u = svd.u.as_ref().expect("svd with u requested");
    let vt = svd.v_t.as_ref().expect("svd with v_t requested");
    let sigma = &svd.singular_values;
    let sigma_max = sigma.iter().cloned().fold(0.0, f64::max);
    let cutoff = REL_RANK_TOL * sigma_max;

    let ur = u.transpose() * DVector::from_column_slice(r);
    let mut scaled = ur;
    for (i, s) in sigma.iter().enumerate() {
        scaled[i] = if *s > cutoff { scaled[i] / s } else { 0.0 };
    }
    let zc = vt.transpose() * scaled;
    for (jc, &j) in cols.iter().enumerate() {
        z[j] = zc[jc];
    }
    Ok(z)
}

/// A cached spectral factorization of one row block.
///
/// Holds the block itself plus the left singular vectors and singular values
/// of its densified restriction. The pseudoinverse is applied as
/// `B^+ r = B^T U diag(1/sigma^2) U^T r`, which needs only `U` and the
/// block's sparse rows, so repeated projections cost
/// `O(rank * nrows + nnz)` each.
#[derive(Debug, Clone)]
pub struct BlockFactor {
    block: SparseMatrix,
    u: DMatrix<f64>,
    sigma: Vec<f64>,
}

impl BlockFactor {
    pub fn new(block: SparseMatrix) -> Self {
        if block.nnz() == 0 {
            return Self {
                block,
                u: DMatrix::zeros(0, 0),
                sigma: Vec::new(),
            };
        }
        let (_, dense) = compress_columns(&block);
        let svd = dense.svd(true, false);
        let u_full = svd.u.expect("svd with u requested");
        let sigma_full = svd.singular_values;
        let sigma_max = sigma_full.iter().cloned().fold(0.0, f64::max);
        let cutoff = REL_RANK_TOL * sigma_max;
        let keep: Vec<usize> = (0..sigma_full.len())
            .filter(|&i| sigma_full[i] > cutoff)
            .collect();
        let u = u_full.select_columns(keep.iter());
        let sigma = keep.iter().map(|&i| sigma_full[i]).collect();
        Self { block, u, sigma }
    }

    pub fn block(&self) -> &SparseMatrix {
        &self.block
    }

    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// Largest singular value; zero for an all-zero block.
    pub fn sigma_max(&self) -> f64 {
        self.sigma.iter().cloned().fold(0.0, f64::max)
    }

    /// Smallest nonzero singular value; zero for an all-zero block.
    pub fn sigma_min_nonzero(&self) -> f64 {
        self.sigma.iter().cloned().fold(f64::INFINITY, f64::min).min(self.sigma_max())
    }

    /// `B^+ r` using the cached factorization.
    pub fn apply_pinv(&self, r: &[f64]) -> Result<Vec<f64>> {
        if r.len() != self.block.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "pseudoinverse apply: rhs length {} vs {} rows",
                r.len(),
                self.block.nrows()
            )));
        }
        let mut z = vec![0.0; self.block.ncols()];
        self.accumulate_pinv(r, &mut z);
        Ok(z)
    }

    fn accumulate_pinv(&self, r: &[f64], acc: &mut [f64]) {
        if self.rank() == 0 {
            return;
        }
        let mut w = self.u.transpose() * DVector::from_column_slice(r);
        for (i, s) in self.sigma.iter().enumerate() {
            w[i] /= s * s;
        }
        let w = &self.u * w;
        for i in 0..self.block.nrows() {
            self.block.scatter_row(i, w[i], acc);
        }
    }

    /// One Kaczmarz block projection: `x += B^+ (f_block - B x)`.
    pub fn project(&self, f_block: &[f64], x: &mut [f64]) -> Result<()> {
        if x.len() != self.block.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "projection: solution length {} vs {} columns",
                x.len(),
                self.block.ncols()
            )));
        }
        let mut resid = self.block.spmv(x)?;
        for (ri, fi) in resid.iter_mut().zip(f_block) {
            *ri = fi - *ri;
        }
        self.accumulate_pinv(&resid, x);
        Ok(())
    }
}
