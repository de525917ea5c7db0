//! The shared greedy block iteration behind GRBK, RBK(k), and GREBK(k).
//!
//! The three solvers differ only in how the row partition is built (random
//! shuffle, k-means over the augmented rows, k-means over standardized
//! distances); the iteration body is identical: score blocks by centroid
//! residuals, keep those above the relaxed greedy threshold, sample one
//! proportionally to its squared score, and project onto the full block.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{sample_by_squared_weight, RunTracker, SolveReport, SolverConfig, Termination};
use crate::partition::{
    compute_centroids, kmeans, random_partition, standardized_distances, BlockPartition,
};
use crate::sparse::{BlockFactor, SparseMatrix};
use crate::{Error, Result};

/// One iteration's greedy selection state.
#[derive(Debug, Clone)]
pub struct GreedyState {
    /// The relaxed greedy threshold for this iteration.
    pub epsilon: f64,
    /// Indices of blocks whose centroid residual passes the threshold.
    pub candidates: Vec<usize>,
    /// Centroid residuals, zeroed outside the candidate set.
    pub weights: Vec<f64>,
}

/// Evaluates the greedy selection rule at the current iterate.
///
/// Returns `None` when the centroid residual vanishes entirely, in which case
/// the selection rule has no information left to act on.
pub fn greedy_state(
    partition: &BlockPartition,
    x: &[f64],
    theta: f64,
) -> Result<Option<GreedyState>> {
    let centroid_resid: Vec<f64> = partition
        .centroids()
        .spmv(x)?
        .iter()
        .zip(partition.centroid_rhs())
        .map(|(ax, f)| f - ax)
        .collect();
    let resid_sq: f64 = centroid_resid.iter().map(|r| r * r).sum();
    if resid_sq == 0.0 {
        return Ok(None);
    }
    let sq_norms = partition.centroid_sq_norms();
    let frobenius_sq: f64 = sq_norms.iter().sum();
    let max_ratio = centroid_resid
        .iter()
        .zip(sq_norms)
        .filter(|(_, &sq)| sq > 0.0)
        .map(|(r, &sq)| r * r / sq)
        .fold(0.0f64, f64::max);
    let epsilon = theta / resid_sq * max_ratio + (1.0 - theta) / frobenius_sq;

    let mut candidates = Vec::new();
    let mut weights = vec![0.0; partition.k()];
    for (tau, (&r, &sq)) in centroid_resid.iter().zip(sq_norms).enumerate() {
        if sq > 0.0 && r * r >= epsilon * resid_sq * sq {
            candidates.push(tau);
            weights[tau] = r;
        }
    }
    Ok(Some(GreedyState {
        epsilon,
        candidates,
        weights,
    }))
}

/// Runs the greedy block iteration over a prebuilt partition.
pub fn greedy_block_solve(
    a: &SparseMatrix,
    f: &[f64],
    x_star: &[f64],
    partition: &BlockPartition,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    cfg.validate()?;
    if f.len() != a.nrows() || x_star.len() != a.ncols() {
        return Err(Error::DimensionMismatch(
            "greedy solve: system dimensions".to_string(),
        ));
    }
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let factors: Vec<BlockFactor> = partition
        .blocks()
        .iter()
        .map(|rows| Ok(BlockFactor::new(a.select_rows(rows)?)))
        .collect::<Result<_>>()?;
    let block_rhs: Vec<Vec<f64>> = partition
        .blocks()
        .iter()
        .map(|rows| rows.iter().map(|&r| f[r]).collect())
        .collect();

    let mut x = vec![0.0; a.ncols()];
    let mut tracker = RunTracker::start(&x, x_star, cfg.tol)?;
    if tracker.already_converged() {
        return Ok(tracker.finish(x, 0, started.elapsed().as_secs_f64(), Termination::Converged));
    }

    let mut projections = 0;
    let mut termination = Termination::IterationCap;
    for _ in 0..cfg.max_iters {
        let state = match greedy_state(partition, &x, cfg.theta)? {
            Some(state) => state,
            None => {
                termination = Termination::Stagnation;
                break;
            }
        };
        let tau = match sample_by_squared_weight(&state.weights, &mut rng) {
            Some(tau) => tau,
            None => {
                termination = Termination::Stagnation;
                break;
            }
        };
        factors[tau].project(&block_rhs[tau], &mut x)?;
        projections += 1;
        if let Some(t) = tracker.record(&x)? {
            termination = t;
            break;
        }
    }
    Ok(tracker.finish(x, projections, started.elapsed().as_secs_f64(), termination))
}

/// GRBK: greedy iteration over a seeded random row partition.
pub fn grbk_solve(
    a: &SparseMatrix,
    f: &[f64],
    x_star: &[f64],
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    cfg.validate()?;
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let blocks = random_partition(a.nrows(), cfg.effective_k(a.nrows()), &mut rng)?;
    let partition = compute_centroids(a, f, &blocks)?;
    let mut report = greedy_block_solve(a, f, x_star, &partition, cfg)?;
    report.wall_time = started.elapsed().as_secs_f64();
    Ok(report)
}

/// RBK(k): greedy iteration over a k-means clustering of the rows of `A`
/// augmented with `f`.
pub fn rbkk_solve(
    a: &SparseMatrix,
    f: &[f64],
    x_star: &[f64],
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    cfg.validate()?;
    if f.len() != a.nrows() {
        return Err(Error::DimensionMismatch(
            "rbkk: rhs length vs rows".to_string(),
        ));
    }
    let started = Instant::now();
    let points: Vec<Vec<f64>> = (0..a.nrows())
        .map(|i| {
            let mut row = vec![0.0; a.ncols() + 1];
            a.scatter_row(i, 1.0, &mut row[..a.ncols()]);
            row[a.ncols()] = f[i];
            row
        })
        .collect();
    let blocks = kmeans(&points, cfg.effective_k(a.nrows()), cfg.seed)?;
    let partition = compute_centroids(a, f, &blocks)?;
    let mut report = greedy_block_solve(a, f, x_star, &partition, cfg)?;
    report.wall_time = started.elapsed().as_secs_f64();
    Ok(report)
}

/// GREBK(k): greedy iteration over a k-means clustering of the standardized
/// distances from the zero start to each row hyperplane.
pub fn grebkk_solve(
    a: &SparseMatrix,
    f: &[f64],
    x_star: &[f64],
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    cfg.validate()?;
    let started = Instant::now();
    let x0 = vec![0.0; a.ncols()];
    let distances = standardized_distances(a, f, &x0)?;
    let points: Vec<Vec<f64>> = distances.into_iter().map(|d| vec![d]).collect();
    let blocks = kmeans(&points, cfg.effective_k(a.nrows()), cfg.seed)?;
    let partition = compute_centroids(a, f, &blocks)?;
    let mut report = greedy_block_solve(a, f, x_star, &partition, cfg)?;
    report.wall_time = started.elapsed().as_secs_f64();
    Ok(report)
}
