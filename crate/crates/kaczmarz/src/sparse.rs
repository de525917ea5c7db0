//! Compressed sparse row storage, permutations, and the dense minimum-norm
//! least-squares kernel used for block projections.

use crate::{Error, Result};

mod lstsq;
pub mod matrix_market;

pub use lstsq::{min_norm_lstsq, BlockFactor};

/// A real matrix in compressed sparse row form.
///
/// Column indices are strictly increasing within each row and explicitly
/// stored zeros are dropped on construction, so `nnz` counts true nonzeros.
/// The struct is immutable after construction; every operation returns a
/// fresh matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

/// Which side of the matrix a permutation acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PermuteSide {
    Rows,
    Cols,
    Both,
}

impl SparseMatrix {
    /// Builds a matrix from coordinate triplets. Duplicate coordinates are
    /// summed; entries that are exactly zero after summation are dropped.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut entries: Vec<(usize, usize, f64)> = Vec::new();
        for (i, j, v) in triplets {
            if i >= nrows || j >= ncols {
                return Err(Error::DimensionMismatch(format!(
                    "triplet ({i}, {j}) outside {nrows}x{ncols}"
                )));
            }
            entries.push((i, j, v));
        }
        entries.sort_unstable_by_key(|&(i, j, _)| (i, j));

        let mut row_offsets = vec![0usize; nrows + 1];
        let mut col_indices = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        let mut iter = entries.into_iter().peekable();
        while let Some((i, j, mut v)) = iter.next() {
            while let Some(&(ni, nj, nv)) = iter.peek() {
                if ni == i && nj == j {
                    v += nv;
                    iter.next();
                } else {
                    break;
                }
            }
            if v != 0.0 {
                row_offsets[i + 1] += 1;
                col_indices.push(j);
                values.push(v);
            }
        }
        for i in 0..nrows {
            row_offsets[i + 1] += row_offsets[i];
        }
        Ok(Self {
            nrows,
            ncols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Builds a matrix from dense row data, dropping zeros.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        let mut triplets = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != ncols {
                return Err(Error::DimensionMismatch(
                    "ragged dense rows".to_string(),
                ));
            }
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(nrows, ncols, triplets)
    }

    /// The n-by-n identity.
    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// The stored entries of row `i` as parallel (columns, values) slices.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let lo = self.row_offsets[i];
        let hi = self.row_offsets[i + 1];
        (&self.col_indices[lo..hi], &self.values[lo..hi])
    }

    /// Iterates over all stored entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    /// Sparse matrix-vector product `A x`. Accumulation within each row runs
    /// in ascending column order, so results are reproducible bit-for-bit.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.ncols {
            return Err(Error::DimensionMismatch(format!(
                "spmv: vector length {} vs {} columns",
                x.len(),
                self.ncols
            )));
        }
        let mut y = vec![0.0; self.nrows];
        for i in 0..self.nrows {
            y[i] = self.row_dot(i, x);
        }
        Ok(y)
    }

    /// Dot product of row `i` with `x`.
    pub fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let (cols, vals) = self.row(i);
        cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum()
    }

    /// Squared Euclidean norm of each row.
    pub fn row_sq_norms(&self) -> Vec<f64> {
        (0..self.nrows)
            .map(|i| self.row(i).1.iter().map(|v| v * v).sum())
            .collect()
    }

    /// Adds `coeff` times row `i` into `acc` (dense accumulator).
    pub fn scatter_row(&self, i: usize, coeff: f64, acc: &mut [f64]) {
        let (cols, vals) = self.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            acc[j] += coeff * v;
        }
    }

    /// Extracts the contiguous row submatrix `rows`, keeping the column count.
    pub fn row_block(&self, rows: std::ops::Range<usize>) -> Result<Self> {
        if rows.is_empty() || rows.end > self.nrows {
            return Err(Error::DimensionMismatch(format!(
                "row block {rows:?} invalid for {} rows",
                self.nrows
            )));
        }
        let lo = self.row_offsets[rows.start];
        let hi = self.row_offsets[rows.end];
        let row_offsets = self.row_offsets[rows.start..=rows.end]
            .iter()
            .map(|o| o - lo)
            .collect();
        Ok(Self {
            nrows: rows.len(),
            ncols: self.ncols,
            row_offsets,
            col_indices: self.col_indices[lo..hi].to_vec(),
            values: self.values[lo..hi].to_vec(),
        })
    }

    /// Gathers an arbitrary list of rows into a new matrix, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::DimensionMismatch(
                "empty row selection".to_string(),
            ));
        }
        let mut row_offsets = Vec::with_capacity(rows.len() + 1);
        row_offsets.push(0usize);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        for &r in rows {
            if r >= self.nrows {
                return Err(Error::DimensionMismatch(format!(
                    "row {r} out of range for {} rows",
                    self.nrows
                )));
            }
            let (cols, vals) = self.row(r);
            col_indices.extend_from_slice(cols);
            values.extend_from_slice(vals);
            row_offsets.push(col_indices.len());
        }
        Ok(Self {
            nrows: rows.len(),
            ncols: self.ncols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// The transpose as a new CSR matrix.
    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.ncols + 1];
        for &j in &self.col_indices {
            counts[j + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let mut col_indices = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        let mut next = counts.clone();
        for (i, j, v) in self.iter() {
            let pos = next[j];
            col_indices[pos] = i;
            values[pos] = v;
            next[j] += 1;
        }
        Self {
            nrows: self.ncols,
            ncols: self.nrows,
            row_offsets: counts,
            col_indices,
            values,
        }
    }

    /// Applies a permutation to rows, columns, or both sides.
    ///
    /// With `forward[i]` the new position of old index `i`, row application
    /// moves row `i` to row `forward[i]` (the product `PA`), column
    /// application sends entry `(i, j)` to `(i, forward[j])`, and `Both`
    /// yields `P A P^T`. Column order within each row is restored.
    pub fn apply_permutation(&self, p: &Permutation, side: PermuteSide) -> Result<Self> {
        let permute_rows = matches!(side, PermuteSide::Rows | PermuteSide::Both);
        let permute_cols = matches!(side, PermuteSide::Cols | PermuteSide::Both);
        if permute_rows && p.len() != self.nrows {
            return Err(Error::DimensionMismatch(format!(
                "permutation length {} vs {} rows",
                p.len(),
                self.nrows
            )));
        }
        if permute_cols && p.len() != self.ncols {
            return Err(Error::DimensionMismatch(format!(
                "permutation length {} vs {} columns",
                p.len(),
                self.ncols
            )));
        }
        let triplets = self.iter().map(|(i, j, v)| {
            (
                if permute_rows { p.forward[i] } else { i },
                if permute_cols { p.forward[j] } else { j },
                v,
            )
        });
        Self::from_triplets(self.nrows, self.ncols, triplets.collect::<Vec<_>>())
    }

    /// Densifies into a row-major `nalgebra` matrix.
    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.iter() {
            m[(i, j)] = v;
        }
        m
    }
}

/// A bijection on `{0..n-1}`.
///
/// `forward[i]` is the new position of old index `i`;
/// `inverse[forward[i]] == i` always holds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    forward: Vec<usize>,
    inverse: Vec<usize>,
}

impl Permutation {
    /// Validates that `forward` is a bijection and derives its inverse.
    pub fn from_forward(forward: Vec<usize>) -> Result<Self> {
        let n = forward.len();
        let mut inverse = vec![usize::MAX; n];
        for (i, &f) in forward.iter().enumerate() {
            if f >= n {
                return Err(Error::InvalidPermutation(format!(
                    "image {f} out of range for length {n}"
                )));
            }
            if inverse[f] != usize::MAX {
                return Err(Error::InvalidPermutation(format!(
                    "image {f} repeated"
                )));
            }
            inverse[f] = i;
        }
        Ok(Self { forward, inverse })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            forward: (0..n).collect(),
            inverse: (0..n).collect(),
        }
    }

    /// A uniformly random permutation drawn from `rng`.
    pub fn random<R: rand::Rng>(n: usize, rng: &mut R) -> Self {
        use rand::seq::SliceRandom;
        let mut forward: Vec<usize> = (0..n).collect();
        forward.shuffle(rng);
        Self::from_forward(forward).expect("shuffle of 0..n is a bijection")
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn forward(&self) -> &[usize] {
        &self.forward
    }

    pub fn inverse(&self) -> &[usize] {
        &self.inverse
    }

    /// The inverse permutation as its own object.
    pub fn inverted(&self) -> Self {
        Self {
            forward: self.inverse.clone(),
            inverse: self.forward.clone(),
        }
    }

    /// Applies the permutation to a vector: `out[forward[i]] = v[i]` (`Pv`).
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.len() {
            return Err(Error::DimensionMismatch(format!(
                "permutation length {} vs vector length {}",
                self.len(),
                v.len()
            )));
        }
        let mut out = vec![0.0; v.len()];
        for (i, &x) in v.iter().enumerate() {
            out[self.forward[i]] = x;
        }
        Ok(out)
    }

    /// Applies the inverse permutation: `out[i] = v[forward[i]]` (`P^T v`).
    pub fn apply_inverse(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.len() {
            return Err(Error::DimensionMismatch(format!(
                "permutation length {} vs vector length {}",
                self.len(),
                v.len()
            )));
        }
        Ok(self.forward.iter().map(|&f| v[f]).collect())
    }
}
