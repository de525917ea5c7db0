//! Row partitions, block centroids, and the orthogonality bookkeeping the
//! block solvers select from.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::sparse::SparseMatrix;
use crate::{Error, Result};

/// Entries of the cosine table strictly below this count as zero when the
/// orthogonality proportion and non-orthogonality severity are computed.
pub const ZERO_EPS: f64 = 1e-12;

/// Splits `0..m` into `k` consecutive ranges: the first `k - 1` take
/// `floor(m / k)` rows each and the last takes the remainder.
pub fn uniform_partition(m: usize, k: usize) -> Result<Vec<std::ops::Range<usize>>> {
    if k == 0 || k > m {
        return Err(Error::InvalidPartition(format!(
            "cannot split {m} rows into {k} blocks"
        )));
    }
    let base = m / k;
    let mut blocks = Vec::with_capacity(k);
    for i in 0..k - 1 {
        blocks.push(i * base..(i + 1) * base);
    }
    blocks.push((k - 1) * base..m);
    Ok(blocks)
}

/// Random partition: a seeded uniform shuffle of the row indices chopped into
/// the same sizes as [`uniform_partition`]. Each block is sorted ascending.
pub fn random_partition<R: Rng>(m: usize, k: usize, rng: &mut R) -> Result<Vec<Vec<usize>>> {
    use rand::seq::SliceRandom;
    let ranges = uniform_partition(m, k)?;
    let mut indices: Vec<usize> = (0..m).collect();
    indices.shuffle(rng);
    Ok(ranges
        .into_iter()
        .map(|r| {
            let mut block = indices[r].to_vec();
            block.sort_unstable();
            block
        })
        .collect())
}

/// A validated row partition of a system together with per-block centroids.
///
/// The centroid of block `i` is the arithmetic mean of its rows, stored
/// sparsely as row `i` of a `k x m` matrix; `centroid_rhs` holds the matching
/// means of the right-hand side.
#[derive(Debug, Clone)]
pub struct BlockPartition {
    blocks: Vec<Vec<usize>>,
    centroids: SparseMatrix,
    centroid_rhs: Vec<f64>,
    centroid_sq_norms: Vec<f64>,
    row_sq_norms: Vec<f64>,
}

impl BlockPartition {
    pub fn k(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn centroids(&self) -> &SparseMatrix {
        &self.centroids
    }

    pub fn centroid_rhs(&self) -> &[f64] {
        &self.centroid_rhs
    }

    pub fn centroid_sq_norms(&self) -> &[f64] {
        &self.centroid_sq_norms
    }

    pub fn row_sq_norms(&self) -> &[f64] {
        &self.row_sq_norms
    }
}

fn validate_blocks(m: usize, blocks: &[Vec<usize>]) -> Result<()> {
    if blocks.is_empty() {
        return Err(Error::InvalidPartition("no blocks".to_string()));
    }
    let mut seen = vec![false; m];
    let mut covered = 0usize;
    for (b, block) in blocks.iter().enumerate() {
        if block.is_empty() {
            return Err(Error::InvalidPartition(format!("block {b} is empty")));
        }
        for &r in block {
            if r >= m {
                return Err(Error::InvalidPartition(format!(
                    "block {b} references row {r} outside 0..{m}"
                )));
            }
            if seen[r] {
                return Err(Error::InvalidPartition(format!(
                    "row {r} assigned to more than one block"
                )));
            }
            seen[r] = true;
            covered += 1;
        }
    }
    if covered != m {
        return Err(Error::InvalidPartition(format!(
            "blocks cover {covered} of {m} rows"
        )));
    }
    Ok(())
}

/// Computes block centroids over a partition of the rows of `a` and `f`.
pub fn compute_centroids(
    a: &SparseMatrix,
    f: &[f64],
    blocks: &[Vec<usize>],
) -> Result<BlockPartition> {
    if f.len() != a.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "rhs length {} vs {} rows",
            f.len(),
            a.nrows()
        )));
    }
    validate_blocks(a.nrows(), blocks)?;

    let m = a.ncols();
    let k = blocks.len();
    let mut triplets = Vec::new();
    let mut centroid_rhs = Vec::with_capacity(k);
    let mut acc = vec![0.0f64; m];
    for (b, block) in blocks.iter().enumerate() {
        acc.iter_mut().for_each(|x| *x = 0.0);
        let mut rhs_sum = 0.0;
        for &r in block {
            a.scatter_row(r, 1.0, &mut acc);
            rhs_sum += f[r];
        }
        let count = block.len() as f64;
        for (j, &v) in acc.iter().enumerate() {
            if v != 0.0 {
                triplets.push((b, j, v / count));
            }
        }
        centroid_rhs.push(rhs_sum / count);
    }
    let centroids = SparseMatrix::from_triplets(k, m, triplets)?;
    let centroid_sq_norms = centroids.row_sq_norms();
    Ok(BlockPartition {
        blocks: blocks.to_vec(),
        centroids,
        centroid_rhs,
        centroid_sq_norms,
        row_sq_norms: a.row_sq_norms(),
    })
}

/// Symmetric table of absolute cosines between block centroids, diagonal
/// fixed at one.
#[derive(Debug, Clone)]
pub struct CosineTable {
    k: usize,
    data: Vec<f64>,
}

impl CosineTable {
    pub fn from_values(k: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != k * k {
            return Err(Error::DimensionMismatch(format!(
                "cosine table data length {} vs k^2 = {}",
                data.len(),
                k * k
            )));
        }
        Ok(Self { k, data })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.k + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }
}

fn sparse_dot(a: &SparseMatrix, i: usize, j: usize) -> f64 {
    let (ci, vi) = a.row(i);
    let (cj, vj) = a.row(j);
    let mut s = 0.0;
    let (mut p, mut q) = (0, 0);
    while p < ci.len() && q < cj.len() {
        match ci[p].cmp(&cj[q]) {
            std::cmp::Ordering::Less => p += 1,
            std::cmp::Ordering::Greater => q += 1,
            std::cmp::Ordering::Equal => {
                s += vi[p] * vj[q];
                p += 1;
                q += 1;
            }
        }
    }
    s
}

/// Builds the `k x k` cosine table from block centroids. Each unordered pair
/// is computed once; the diagonal is set to one.
pub fn cosine_table(partition: &BlockPartition) -> Result<CosineTable> {
    let k = partition.k();
    for (b, &sq) in partition.centroid_sq_norms().iter().enumerate() {
        if sq == 0.0 {
            return Err(Error::ZeroCentroid(b));
        }
    }
    let norms: Vec<f64> = partition
        .centroid_sq_norms()
        .iter()
        .map(|s| s.sqrt())
        .collect();
    let mut data = vec![0.0; k * k];
    for i in 0..k {
        data[i * k + i] = 1.0;
        for j in i + 1..k {
            let dot = sparse_dot(partition.centroids(), i, j);
            let c = dot.abs() / (norms[i] * norms[j]);
            data[i * k + j] = c;
            data[j * k + i] = c;
        }
    }
    CosineTable::from_values(k, data)
}

/// The paired near-orthogonal blocks and the leftover blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrthoClassification {
    /// Pairs `(i, j)` with `i < j` whose centroid cosine falls below the
    /// threshold, in scan order.
    pub oclass: Vec<(usize, usize)>,
    /// Blocks that never paired, ascending.
    pub nclass: Vec<usize>,
}

/// Greedy pairing scan: each block takes the first later unpaired block it is
/// orthogonal to; no block lands in two classes.
pub fn classify_orthogonal(table: &CosineTable, thr: f64) -> Result<OrthoClassification> {
    if !(0.0 < thr && thr < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "orthogonality threshold must lie in (0, 1), got {thr}"
        )));
    }
    let k = table.k();
    let mut used = vec![false; k];
    let mut oclass = Vec::new();
    for i in 0..k {
        if used[i] {
            continue;
        }
        if let Some(j) = (i + 1..k).find(|&j| !used[j] && table.get(i, j) < thr) {
            used[i] = true;
            used[j] = true;
            oclass.push((i, j));
        }
    }
    let nclass = (0..k).filter(|&i| !used[i]).collect();
    Ok(OrthoClassification { oclass, nclass })
}

/// Orthogonality proportion `zn` and non-orthogonality severity `nn` of a
/// cosine table, both over all `k * k` entries (diagonal included).
///
/// `zn` is the fraction of entries below [`ZERO_EPS`]; `nn` weights the mean
/// of the remaining entries by their count.
pub fn zn_nn_metrics(table: &CosineTable) -> (f64, f64) {
    let num = (table.k() * table.k()) as f64;
    let mut n1 = 0usize;
    let mut nonzero_sum = 0.0;
    for &c in table.values() {
        if c < ZERO_EPS {
            n1 += 1;
        } else {
            nonzero_sum += c;
        }
    }
    let n2 = table.k() * table.k() - n1;
    let zn = n1 as f64 / num;
    let nn = if n2 == 0 {
        0.0
    } else {
        let nm = nonzero_sum / n2 as f64;
        n2 as f64 * nm / num
    };
    (zn, nn)
}

/// Standardized distances from `x0` to each row hyperplane:
/// `d_i = |f_i - A_(i) x0| / ||A_(i)||_2`.
pub fn standardized_distances(a: &SparseMatrix, f: &[f64], x0: &[f64]) -> Result<Vec<f64>> {
    if f.len() != a.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "rhs length {} vs {} rows",
            f.len(),
            a.nrows()
        )));
    }
    let sq_norms = a.row_sq_norms();
    let ax = a.spmv(x0)?;
    sq_norms
        .iter()
        .enumerate()
        .map(|(i, &sq)| {
            if sq == 0.0 {
                Err(Error::ZeroRow(i))
            } else {
                Ok((f[i] - ax[i]).abs() / sq.sqrt())
            }
        })
        .collect()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd's algorithm with k-means++ seeding, Euclidean metric, and a fixed
/// iteration cap of 300 rounds. Empty clusters are refilled with the point
/// farthest from its assigned center. Fully determined by `seed`.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::InvalidPartition(format!(
            "cannot cluster {n} points into {k} groups"
        )));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch(
            "points of unequal dimension".to_string(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // k-means++ seeding over point indices
    let mut center_idx: Vec<usize> = Vec::with_capacity(k);
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    center_idx.push(first);
    chosen[first] = true;
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| sq_dist(p, &points[first]))
        .collect();
    while center_idx.len() < k {
        let total: f64 = d2
            .iter()
            .enumerate()
            .filter(|(i, _)| !chosen[*i])
            .map(|(_, d)| *d)
            .sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, &d) in d2.iter().enumerate() {
                if chosen[i] {
                    continue;
                }
                target -= d;
                if target <= 0.0 {
                    pick = Some(i);
                    break;
                }
            }
            pick.unwrap_or_else(|| (0..n).rev().find(|&i| !chosen[i]).expect("k <= n"))
        } else {
            // all remaining points coincide with a center; take the first free
            (0..n).find(|&i| !chosen[i]).expect("k <= n")
        };
        center_idx.push(next);
        chosen[next] = true;
        for (i, p) in points.iter().enumerate() {
            let d = sq_dist(p, &points[next]);
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    let mut centers: Vec<Vec<f64>> = center_idx.iter().map(|&i| points[i].clone()).collect();

    let mut assignment = vec![usize::MAX; n];
    for _round in 0..300 {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (c, center) in centers.iter().enumerate() {
                let d = sq_dist(p, center);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            if assignment[i] != best {
                assignment[i] = best;
                changed = true;
            }
        }

        // refill empty clusters with the point farthest from its center
        let mut counts = vec![0usize; k];
        for &a in &assignment {
            counts[a] += 1;
        }
        for c in 0..k {
            while counts[c] == 0 {
                let (far, _) = assignment
                    .iter()
                    .enumerate()
                    .filter(|(_, &a)| counts[a] > 1)
                    .map(|(i, &a)| (i, sq_dist(&points[i], &centers[a])))
                    .fold((usize::MAX, -1.0), |best, (i, d)| {
                        if d > best.1 {
                            (i, d)
                        } else {
                            best
                        }
                    });
                counts[assignment[far]] -= 1;
                assignment[far] = c;
                counts[c] += 1;
                changed = true;
            }
        }

        if !changed {
            break;
        }
        for center in &mut centers {
            center.iter_mut().for_each(|x| *x = 0.0);
        }
        for (i, p) in points.iter().enumerate() {
            let c = assignment[i];
            for (acc, &x) in centers[c].iter_mut().zip(p) {
                *acc += x;
            }
        }
        for (c, center) in centers.iter_mut().enumerate() {
            let inv = 1.0 / counts[c] as f64;
            center.iter_mut().for_each(|x| *x *= inv);
        }
    }

    let mut clusters = vec![Vec::new(); k];
    for (i, &a) in assignment.iter().enumerate() {
        clusters[a].push(i);
    }
    Ok(clusters)
}
