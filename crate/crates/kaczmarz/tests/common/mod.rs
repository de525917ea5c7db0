//! Shared helpers for the integration suites: fixture resolution and seeded
//! test-instance generators.

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use kaczmarz::bench::fetch;
use kaczmarz::sparse::matrix_market::load_matrix_market;
use kaczmarz::sparse::{Permutation, PermuteSide, SparseMatrix};

/// Directory holding cached collection matrices. Override with
/// `KACZMARZ_DATA_DIR`; defaults to `data/suitesparse` at the workspace root.
pub fn data_dir() -> PathBuf {
    if let Ok(dir) = std::env::var("KACZMARZ_DATA_DIR") {
        return PathBuf::from(dir);
    }
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/suitesparse")
}

/// Loads a collection matrix, fetching it into the cache on first use.
/// Panics with instructions when the matrix is unavailable, which fails the
/// calling criterion instead of silently skipping it.
pub fn require_matrix(name: &str) -> SparseMatrix {
    let dir = data_dir();
    match fetch::fetch_matrix(name, &dir) {
        Ok(path) => load_matrix_market(&path)
            .unwrap_or_else(|e| panic!("fixture {} unreadable: {e}", path.display())),
        Err(e) => panic!(
            "matrix {name} unavailable: {e}\n\
             place {name}.mtx under {} (or set KACZMARZ_DATA_DIR), e.g. via\n\
             `cargo run -p kaczmarz-cli -- fetch --matrix {name}` on a machine \
             with access to the collection",
            dir.display()
        ),
    }
}

/// Strictly diagonally dominant banded matrix with seeded noise, optionally
/// relabeled by a random symmetric permutation.
pub fn random_banded_system(
    m: usize,
    half_bandwidth: usize,
    scrambled: bool,
    seed: u64,
) -> (SparseMatrix, Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut triplets = Vec::new();
    for i in 0..m {
        triplets.push((i, i, 6.0 + rng.random_range(0.0..2.0)));
        for off in 1..=half_bandwidth {
            if i + off < m {
                triplets.push((i, i + off, rng.random_range(-1.0..1.0)));
                triplets.push((i + off, i, rng.random_range(-1.0..1.0)));
            }
        }
    }
    let mut a = SparseMatrix::from_triplets(m, m, triplets).unwrap();
    if scrambled {
        let p = Permutation::random(m, &mut rng);
        a = a.apply_permutation(&p, PermuteSide::Both).unwrap();
    }
    let x_star: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
    let f = a.spmv(&x_star).unwrap();
    (a, f, x_star)
}

/// Dense LU solve used as the independent reference for iterative solutions.
pub fn dense_solve(a: &SparseMatrix, f: &[f64]) -> Vec<f64> {
    a.to_dense()
        .lu()
        .solve(&nalgebra::DVector::from_column_slice(f))
        .expect("test systems are nonsingular")
        .as_slice()
        .to_vec()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    d / norm(b).max(f64::MIN_POSITIVE)
}
