//! Averaged randomized block Kaczmarz.
//!
//! Each outer iteration samples an independent row subset inside every group,
//! takes one relaxed projection per group from the same base point, and
//! combines the results as a weighted average.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{RunTracker, SolveReport, SolverConfig, Termination};
use crate::partition::random_partition;
use crate::sparse::{min_norm_lstsq, SparseMatrix};
use crate::{Error, Result};

/// Averaged block Kaczmarz over an explicit grouping of the rows.
///
/// Per outer iteration and group `j`: sample `min(sample_size, |group|)` rows
/// without replacement, compute `x^j = x + alpha * B^+ (f_S - B x)` on the
/// sampled subsystem, then average `x <- sum_j w_j x^j`.
pub fn arbk_solve(
    a: &SparseMatrix,
    f: &[f64],
    x_star: &[f64],
    groups: &[Vec<usize>],
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    cfg.validate()?;
    if f.len() != a.nrows() || x_star.len() != a.ncols() {
        return Err(Error::DimensionMismatch(
            "arbk: system dimensions".to_string(),
        ));
    }
    if groups.is_empty() || groups.iter().any(|g| g.is_empty()) {
        return Err(Error::InvalidPartition(
            "arbk groups must be nonempty".to_string(),
        ));
    }
    let weights = match &cfg.weights {
        Some(w) => {
            if w.len() != groups.len() {
                return Err(Error::InvalidConfig(format!(
                    "{} weights for {} groups",
                    w.len(),
                    groups.len()
                )));
            }
            w.clone()
        }
        None => vec![1.0 / groups.len() as f64; groups.len()],
    };

    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut x = vec![0.0; a.ncols()];
    let mut tracker = RunTracker::start(&x, x_star, cfg.tol)?;
    if tracker.already_converged() {
        return Ok(tracker.finish(x, 0, started.elapsed().as_secs_f64(), Termination::Converged));
    }

    let mut projections = 0;
    let mut termination = Termination::IterationCap;
    for _ in 0..cfg.max_iters {
        let mut averaged = vec![0.0; a.ncols()];
        for (group, &w) in groups.iter().zip(&weights) {
            let take = cfg
                .sample_size
                .unwrap_or_else(|| (group.len() / 2).max(1))
                .clamp(1, group.len());
            let mut picked: Vec<usize> =
                rand::seq::index::sample(&mut rng, group.len(), take)
                    .into_iter()
                    .map(|i| group[i])
                    .collect();
            picked.sort_unstable();

            let block = a.select_rows(&picked)?;
            let mut resid = block.spmv(&x)?;
            for (r, &row) in resid.iter_mut().zip(&picked) {
                *r = f[row] - *r;
            }
            let delta = min_norm_lstsq(&block, &resid)?;
            projections += 1;
            for ((acc, &xi), d) in averaged.iter_mut().zip(&x).zip(&delta) {
                *acc += w * (xi + cfg.alpha * d);
            }
        }
        x = averaged;
        if let Some(t) = tracker.record(&x)? {
            termination = t;
            break;
        }
    }
    Ok(tracker.finish(x, projections, started.elapsed().as_secs_f64(), termination))
}

/// aRBK over a seeded random uniform grouping with `cfg.k` groups.
pub fn arbk_solve_random_partition(
    a: &SparseMatrix,
    f: &[f64],
    x_star: &[f64],
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    cfg.validate()?;
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let groups = random_partition(a.nrows(), cfg.effective_k(a.nrows()), &mut rng)?;
    let mut report = arbk_solve(a, f, x_star, &groups, cfg)?;
    report.wall_time = started.elapsed().as_secs_f64();
    Ok(report)
}
