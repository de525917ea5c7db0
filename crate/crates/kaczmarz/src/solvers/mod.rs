//! Iterative solvers: the row Kaczmarz kernel, the greedy block family
//! (GRBK, RBK(k), GREBK(k)), averaged block Kaczmarz (aRBK), and the
//! preprocessed orthogonal block solver (POBK).
//!
//! All solvers start from `x0 = 0`, stop when the relative solution error
//! drops below `tol` or the outer-iteration cap is hit, and record one RSE
//! sample per outer iteration. Every random choice is drawn from a ChaCha8
//! generator seeded from the configuration, so traces replay exactly.

mod arbk;
mod greedy;
mod pobk;
mod rk;

pub use arbk::{arbk_solve, arbk_solve_random_partition};
pub use greedy::{grbk_solve, grebkk_solve, greedy_block_solve, greedy_state, rbkk_solve, GreedyState};
pub use pobk::{pobk_solve, PobkPlan};
pub use rk::rk_solve;

use crate::sparse::{min_norm_lstsq, SparseMatrix};
use crate::{Error, Result};

/// Relative improvement below which an outer iteration counts as stalled.
pub const STAGNATION_REL_IMPROVEMENT: f64 = 1e-14;
/// Consecutive stalled outer iterations before a run terminates as stagnated.
pub const STAGNATION_WINDOW: usize = 50;

/// Shared solver knobs. Fields irrelevant to a given solver are ignored by it.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// RSE threshold; the run converges once the error drops below it.
    pub tol: f64,
    /// Outer-iteration cap.
    pub max_iters: usize,
    /// Greedy relaxation parameter, strictly between 0 and 1.
    pub theta: f64,
    /// Block count; clamped to the row count of the system being solved.
    pub k: usize,
    /// Centroid-cosine threshold below which two blocks count as orthogonal.
    pub thr: f64,
    /// Averaged-solver step size in (0, 2].
    pub alpha: f64,
    /// Averaging weights, one per group; uniform when absent.
    pub weights: Option<Vec<f64>>,
    /// Rows sampled per group and outer iteration; half the group when absent.
    pub sample_size: Option<usize>,
    /// Seed for every random choice a solver makes.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iters: 500_000,
            theta: 0.5,
            k: 20,
            thr: 0.05,
            alpha: 1.0,
            weights: None,
            sample_size: None,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        if !(0.0 < self.theta && self.theta < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "theta must lie in (0, 1), got {}",
                self.theta
            )));
        }
        if !(0.0 < self.alpha && self.alpha <= 2.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha must lie in (0, 2], got {}",
                self.alpha
            )));
        }
        if self.k == 0 {
            return Err(Error::InvalidConfig("block count must be positive".into()));
        }
        if let Some(w) = &self.weights {
            if w.iter().any(|&x| x < 0.0) {
                return Err(Error::InvalidConfig("weights must be nonnegative".into()));
            }
            let sum: f64 = w.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidConfig(format!(
                    "weights must sum to 1, got {sum}"
                )));
            }
        }
        Ok(())
    }

    /// Block count actually usable on an `m`-row system.
    pub fn effective_k(&self, m: usize) -> usize {
        self.k.clamp(1, m.max(1))
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    IterationCap,
    Stagnation,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Termination::Converged => "converged",
            Termination::IterationCap => "iteration_cap",
            Termination::Stagnation => "stagnation",
        };
        f.write_str(s)
    }
}

/// Outcome of a solver run.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: Vec<f64>,
    /// Outer iterations completed.
    pub iterations: usize,
    /// Individual block (or row) projections applied.
    pub projections: usize,
    /// RSE after every outer iteration, including the initial point, so the
    /// length is `iterations + 1`.
    pub rse_trace: Vec<f64>,
    /// Seconds spent in the solve, preprocessing and partitioning included.
    pub wall_time: f64,
    pub termination: Termination,
}

impl SolveReport {
    pub fn final_rse(&self) -> f64 {
        *self.rse_trace.last().expect("trace holds the initial point")
    }

    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }
}

/// Relative solution error `||x - x*||_2 / ||x*||_2`.
pub fn rse(x: &[f64], x_star: &[f64]) -> Result<f64> {
    if x.len() != x_star.len() {
        return Err(Error::DimensionMismatch(format!(
            "rse: lengths {} vs {}",
            x.len(),
            x_star.len()
        )));
    }
    let star: f64 = x_star.iter().map(|v| v * v).sum::<f64>().sqrt();
    if star == 0.0 {
        return Err(Error::ZeroReference);
    }
    let diff: f64 = x
        .iter()
        .zip(x_star)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(diff / star)
}

/// Projects `x` onto the hyperplane of row `i`:
/// `x' = x + (f_i - A_(i) x) / ||A_(i)||^2 * A_(i)^T`.
pub fn row_project(a: &SparseMatrix, f: &[f64], x: &[f64], i: usize) -> Result<Vec<f64>> {
    if x.len() != a.ncols() || f.len() != a.nrows() {
        return Err(Error::DimensionMismatch(
            "row projection: system dimensions".to_string(),
        ));
    }
    let (_, vals) = a.row(i);
    let sq: f64 = vals.iter().map(|v| v * v).sum();
    if sq == 0.0 {
        return Err(Error::ZeroRow(i));
    }
    let mut out = x.to_vec();
    let resid = f[i] - a.row_dot(i, x);
    a.scatter_row(i, resid / sq, &mut out);
    Ok(out)
}

/// One block Kaczmarz step `x' = x + B^+ (f_block - B x)` through the
/// one-shot minimum-norm kernel.
pub fn block_project(block: &SparseMatrix, f_block: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != block.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "block projection: solution length {} vs {} columns",
            x.len(),
            block.ncols()
        )));
    }
    let mut resid = block.spmv(x)?;
    if resid.len() != f_block.len() {
        return Err(Error::DimensionMismatch(
            "block projection: rhs length".to_string(),
        ));
    }
    for (r, fi) in resid.iter_mut().zip(f_block) {
        *r = fi - *r;
    }
    let delta = min_norm_lstsq(block, &resid)?;
    Ok(x.iter().zip(&delta).map(|(a, d)| a + d).collect())
}

/// Worst-case contraction factor of one full sweep over `k` blocks:
/// `max_tau (1 - sigma_min^2 / sigma_max^2)^k` with `sigma_min` the smallest
/// nonzero singular value of a block.
pub fn block_spectral_bound(blocks: &[SparseMatrix], k: usize) -> Result<f64> {
    if blocks.is_empty() {
        return Err(Error::InvalidPartition("no blocks".to_string()));
    }
    let mut worst: f64 = 0.0;
    for (idx, b) in blocks.iter().enumerate() {
        let factor = crate::sparse::BlockFactor::new(b.clone());
        let smax = factor.sigma_max();
        if smax == 0.0 {
            return Err(Error::InvalidPartition(format!(
                "block {idx} is identically zero"
            )));
        }
        let smin = factor.sigma_min_nonzero();
        worst = worst.max(1.0 - (smin * smin) / (smax * smax));
    }
    Ok(worst.powi(k as i32))
}

/// Stopping control shared by all solvers: tolerance test, stagnation guard,
/// and the per-outer-iteration RSE trace.
struct RunTracker<'a> {
    tol: f64,
    x_star: &'a [f64],
    trace: Vec<f64>,
    best: f64,
    stalled: usize,
}

impl<'a> RunTracker<'a> {
    fn start(x0: &[f64], x_star: &'a [f64], tol: f64) -> Result<Self> {
        let initial = rse(x0, x_star)?;
        Ok(Self {
            tol,
            x_star,
            trace: vec![initial],
            best: initial,
            stalled: 0,
        })
    }

    fn already_converged(&self) -> bool {
        self.trace[0] < self.tol
    }

    /// Records the RSE after one outer iteration and decides termination.
    fn record(&mut self, x: &[f64]) -> Result<Option<Termination>> {
        let value = rse(x, self.x_star)?;
        self.trace.push(value);
        if value < self.tol {
            return Ok(Some(Termination::Converged));
        }
        if value > self.best * (1.0 - STAGNATION_REL_IMPROVEMENT) {
            self.stalled += 1;
        } else {
            self.stalled = 0;
        }
        self.best = self.best.min(value);
        if self.stalled >= STAGNATION_WINDOW {
            return Ok(Some(Termination::Stagnation));
        }
        Ok(None)
    }

    fn finish(
        self,
        solution: Vec<f64>,
        projections: usize,
        wall_time: f64,
        termination: Termination,
    ) -> SolveReport {
        SolveReport {
            iterations: self.trace.len() - 1,
            solution,
            projections,
            rse_trace: self.trace,
            wall_time,
            termination,
        }
    }
}

/// Draws an index with probability proportional to `weights[i]^2`.
fn sample_by_squared_weight<R: rand::Rng>(weights: &[f64], rng: &mut R) -> Option<usize> {
    let total: f64 = weights.iter().map(|w| w * w).sum();
    if total <= 0.0 {
        return None;
    }
    let mut target = rng.random::<f64>() * total;
    let mut last = None;
    for (i, w) in weights.iter().enumerate() {
        let p = w * w;
        if p == 0.0 {
            continue;
        }
        last = Some(i);
        target -= p;
        if target <= 0.0 {
            return Some(i);
        }
    }
    last
}
