//! Randomized row Kaczmarz.
//!
//! Rows are sampled with probability proportional to their squared norm. One
//! outer iteration is an epoch of `m` row projections, so the trace stays
//! comparable with the block solvers' per-sweep accounting.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{RunTracker, SolveReport, SolverConfig, Termination};
use crate::sparse::SparseMatrix;
use crate::{Error, Result};

fn sample_by_weight<R: rand::Rng>(weights: &[f64], total: f64, rng: &mut R) -> usize {
    let mut target = rng.random::<f64>() * total;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        last = i;
        target -= w;
        if target <= 0.0 {
            return i;
        }
    }
    last
}

pub fn rk_solve(
    a: &SparseMatrix,
    f: &[f64],
    x_star: &[f64],
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    cfg.validate()?;
    if f.len() != a.nrows() || x_star.len() != a.ncols() {
        return Err(Error::DimensionMismatch(
            "rk: system dimensions".to_string(),
        ));
    }
    let started = Instant::now();
    let sq_norms = a.row_sq_norms();
    let total: f64 = sq_norms.iter().sum();

    let mut x = vec![0.0; a.ncols()];
    let mut tracker = RunTracker::start(&x, x_star, cfg.tol)?;
    if tracker.already_converged() {
        return Ok(tracker.finish(x, 0, started.elapsed().as_secs_f64(), Termination::Converged));
    }
    if total == 0.0 {
        return Ok(tracker.finish(x, 0, started.elapsed().as_secs_f64(), Termination::Stagnation));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut projections = 0;
    let mut termination = Termination::IterationCap;
    'outer: for _ in 0..cfg.max_iters {
        for _ in 0..a.nrows() {
            let i = sample_by_weight(&sq_norms, total, &mut rng);
            let resid = f[i] - a.row_dot(i, &x);
            a.scatter_row(i, resid / sq_norms[i], &mut x);
            projections += 1;
        }
        if let Some(t) = tracker.record(&x)? {
            termination = t;
            break 'outer;
        }
    }
    Ok(tracker.finish(x, projections, started.elapsed().as_secs_f64(), termination))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_overdetermined_consistent_system() {
        let a = SparseMatrix::from_dense(&[
            vec![2.0, 0.0],
            vec![0.0, 3.0],
            vec![1.0, 1.0],
        ])
        .unwrap();
        let x_star = vec![2.0, -1.0];
        let f = a.spmv(&x_star).unwrap();
        let cfg = SolverConfig::default();
        let report = rk_solve(&a, &f, &x_star, &cfg).unwrap();
        assert!(report.converged());
        assert!(report.final_rse() < 1e-6);
        assert_eq!(report.projections, report.iterations * 3);
    }

    #[test]
    fn zero_matrix_stagnates_immediately() {
        let a = SparseMatrix::from_triplets(2, 2, vec![]).unwrap();
        let report = rk_solve(&a, &[0.0, 0.0], &[1.0, 1.0], &SolverConfig::default()).unwrap();
        assert_eq!(report.termination, Termination::Stagnation);
        assert_eq!(report.iterations, 0);
    }
}
