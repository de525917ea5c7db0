//! Preprocessed orthogonal block Kaczmarz.
//!
//! The system is reordered by reverse Cuthill-McKee so the pattern hugs the
//! diagonal, chopped into `k` uniform row blocks, and the blocks are paired
//! off by centroid orthogonality. One outer iteration is a full deterministic
//! sweep: both halves of every orthogonal pair, then every leftover block.
//! Block factorizations are computed once and reused across sweeps, and the
//! returned solution is mapped back to the original row order.

use std::time::Instant;

use super::{RunTracker, SolveReport, SolverConfig, Termination};
use crate::partition::{
    classify_orthogonal, compute_centroids, cosine_table, uniform_partition, BlockPartition,
    CosineTable, OrthoClassification,
};
use crate::reorder::preprocess_system;
use crate::sparse::{BlockFactor, Permutation, SparseMatrix};
use crate::{Error, Result};

/// Everything the orthogonal block solver precomputes before iterating.
#[derive(Debug, Clone)]
pub struct PobkPlan {
    pub permutation: Permutation,
    pub reordered: SparseMatrix,
    pub rhs: Vec<f64>,
    pub partition: BlockPartition,
    pub table: CosineTable,
    pub classes: OrthoClassification,
    factors: Vec<BlockFactor>,
    block_rhs: Vec<Vec<f64>>,
}

impl PobkPlan {
    pub fn build(a: &SparseMatrix, f: &[f64], cfg: &SolverConfig) -> Result<Self> {
        cfg.validate()?;
        if !a.is_square() {
            return Err(Error::NotSquare {
                nrows: a.nrows(),
                ncols: a.ncols(),
            });
        }
        let (reordered, rhs, permutation) = preprocess_system(a, f)?;
        let k = cfg.effective_k(a.nrows());
        let ranges = uniform_partition(a.nrows(), k)?;
        let blocks: Vec<Vec<usize>> = ranges.iter().cloned().map(|r| r.collect()).collect();
        let partition = compute_centroids(&reordered, &rhs, &blocks)?;
        let table = cosine_table(&partition)?;
        let classes = classify_orthogonal(&table, cfg.thr)?;

        let factors = ranges
            .iter()
            .map(|r| Ok(BlockFactor::new(reordered.row_block(r.clone())?)))
            .collect::<Result<Vec<_>>>()?;
        let block_rhs = ranges.iter().map(|r| rhs[r.clone()].to_vec()).collect();
        Ok(Self {
            permutation,
            reordered,
            rhs,
            partition,
            table,
            classes,
            factors,
            block_rhs,
        })
    }

    /// Block projections per outer sweep.
    pub fn projections_per_sweep(&self) -> usize {
        2 * self.classes.oclass.len() + self.classes.nclass.len()
    }
}

/// Solves `Ax = f` with the preprocessed orthogonal block iteration.
///
/// The trace is recorded in the reordered frame, where it equals the error in
/// the original frame because permutations preserve the norm.
pub fn pobk_solve(
    a: &SparseMatrix,
    f: &[f64],
    x_star: &[f64],
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    if f.len() != a.nrows() || x_star.len() != a.ncols() {
        return Err(Error::DimensionMismatch(
            "pobk: system dimensions".to_string(),
        ));
    }
    let started = Instant::now();
    let plan = PobkPlan::build(a, f, cfg)?;

    let star_permuted = plan.permutation.apply(x_star)?;
    let mut x = vec![0.0; a.ncols()];
    let mut tracker = RunTracker::start(&x, &star_permuted, cfg.tol)?;
    if tracker.already_converged() {
        let solution = plan.permutation.apply_inverse(&x)?;
        return Ok(tracker.finish(
            solution,
            0,
            started.elapsed().as_secs_f64(),
            Termination::Converged,
        ));
    }

    let mut projections = 0;
    let mut termination = Termination::IterationCap;
    for _ in 0..cfg.max_iters {
        for &(first, second) in &plan.classes.oclass {
            plan.factors[first].project(&plan.block_rhs[first], &mut x)?;
            plan.factors[second].project(&plan.block_rhs[second], &mut x)?;
            projections += 2;
        }
        for &tau in &plan.classes.nclass {
            plan.factors[tau].project(&plan.block_rhs[tau], &mut x)?;
            projections += 1;
        }
        if let Some(t) = tracker.record(&x)? {
            termination = t;
            break;
        }
    }
    let solution = plan.permutation.apply_inverse(&x)?;
    Ok(tracker.finish(
        solution,
        projections,
        started.elapsed().as_secs_f64(),
        termination,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Random orthogonal matrix from the QR factors of a seeded dense matrix.
    fn random_orthogonal(n: usize, seed: u64) -> SparseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dense = nalgebra::DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let q = dense.qr().q();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| q[(i, j)]).collect())
            .collect();
        SparseMatrix::from_dense(&rows).unwrap()
    }

    #[test]
    fn orthonormal_rows_converge_in_one_sweep() {
        let a = random_orthogonal(8, 4);
        let x_star: Vec<f64> = (0..8).map(|i| 1.0 + i as f64).collect();
        let f = a.spmv(&x_star).unwrap();
        let cfg = SolverConfig { k: 2, ..Default::default() };

        let plan = PobkPlan::build(&a, &f, &cfg).unwrap();
        // the two blocks of an orthogonal matrix are orthogonal to each other
        assert_eq!(plan.classes.oclass, vec![(0, 1)]);
        assert!(plan.classes.nclass.is_empty());

        let report = pobk_solve(&a, &f, &x_star, &cfg).unwrap();
        assert!(report.converged());
        assert_eq!(report.iterations, 1);
        assert_eq!(report.projections, 2);
        assert!(report.final_rse() < 1e-12);
    }

    #[test]
    fn banded_system_matches_dense_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n = 50;
        let mut triplets = Vec::new();
        for i in 0..n {
            triplets.push((i, i, 6.0 + rng.random_range(0.0..1.0)));
            for off in 1..=2usize {
                if i + off < n {
                    let v = rng.random_range(-1.0..1.0);
                    triplets.push((i, i + off, v));
                    triplets.push((i + off, i, rng.random_range(-1.0..1.0)));
                }
            }
        }
        let a = SparseMatrix::from_triplets(n, n, triplets).unwrap();
        let x_star: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).cos()).collect();
        let f = a.spmv(&x_star).unwrap();
        let cfg = SolverConfig { k: 5, ..Default::default() };
        let report = pobk_solve(&a, &f, &x_star, &cfg).unwrap();
        assert!(report.converged(), "{:?}", report.termination);
        assert!(report.final_rse() <= 1e-6);

        let dense_solution = a
            .to_dense()
            .lu()
            .solve(&nalgebra::DVector::from_column_slice(&f))
            .expect("nonsingular test matrix");
        let rel: f64 = report
            .solution
            .iter()
            .zip(dense_solution.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
            / dense_solution.norm();
        assert!(rel < 1e-5, "relative gap to dense solve {rel}");
    }

    #[test]
    fn report_counts_are_consistent() {
        let a = random_orthogonal(12, 9);
        let x_star = vec![1.0; 12];
        let f = a.spmv(&x_star).unwrap();
        let cfg = SolverConfig { k: 3, ..Default::default() };
        let plan = PobkPlan::build(&a, &f, &cfg).unwrap();
        let report = pobk_solve(&a, &f, &x_star, &cfg).unwrap();
        assert_eq!(report.rse_trace.len(), report.iterations + 1);
        assert_eq!(
            report.projections,
            report.iterations * plan.projections_per_sweep()
        );
    }

    #[test]
    fn rejects_non_square() {
        let a = SparseMatrix::from_triplets(2, 3, vec![(0, 0, 1.0), (1, 1, 1.0)]).unwrap();
        let cfg = SolverConfig::default();
        assert!(matches!(
            PobkPlan::build(&a, &[1.0, 1.0], &cfg),
            Err(Error::NotSquare { .. })
        ));
    }
}
