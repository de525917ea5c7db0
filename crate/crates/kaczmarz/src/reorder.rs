//! Reverse Cuthill-McKee reordering and bandwidth diagnostics.
//!
//! The permutation produced here relabels rows and columns so the nonzero
//! pattern hugs the diagonal, which is what makes uniform row blocks of the
//! reordered matrix nearly orthogonal to each other. Asymmetric inputs are
//! symmetrized by pattern union before the graph traversal. All tie-breaking
//! is by ascending original index, so the ordering is identical across runs
//! and platforms.

use crate::sparse::{Permutation, PermuteSide, SparseMatrix};
use crate::{Error, Result};

/// Symmetric adjacency structure over the pattern of `A + A^T`, self-loops
/// dropped.
#[derive(Debug, Clone)]
pub struct AdjacencyGraph {
    adj: Vec<Vec<usize>>,
}

impl AdjacencyGraph {
    pub fn from_pattern(a: &SparseMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::NotSquare {
                nrows: a.nrows(),
                ncols: a.ncols(),
            });
        }
        let n = a.nrows();
        let mut adj = vec![Vec::new(); n];
        for (i, j, _) in a.iter() {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self { adj })
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    /// Breadth-first level structure rooted at `root`, restricted to the
    /// root's connected component. Returns the member list in visit order,
    /// the members of the deepest level, and the level count.
    fn bfs_levels(&self, root: usize) -> (Vec<usize>, Vec<usize>, usize) {
        let mut seen = vec![false; self.len()];
        let mut order = vec![root];
        seen[root] = true;
        let mut level_start = 0;
        let mut last_level_start = 0;
        let mut depth = 0;
        while level_start < order.len() {
            depth += 1;
            last_level_start = level_start;
            let level_end = order.len();
            for idx in level_start..level_end {
                let v = order[idx];
                for &w in self.neighbors(v) {
                    if !seen[w] {
                        seen[w] = true;
                        order.push(w);
                    }
                }
            }
            level_start = level_end;
        }
        let last_level = order[last_level_start..].to_vec();
        (order, last_level, depth)
    }
}

/// Maximum distance of a stored nonzero from the main diagonal; zero for
/// diagonal or empty matrices.
pub fn bandwidth(a: &SparseMatrix) -> Result<usize> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            nrows: a.nrows(),
            ncols: a.ncols(),
        });
    }
    Ok(a.iter().map(|(i, j, _)| i.abs_diff(j)).max().unwrap_or(0))
}

const PERIPHERAL_SWEEPS: usize = 10;

/// Pseudo-peripheral node of the component containing `members`, found by
/// repeated breadth-first sweeps from the farthest minimum-degree node.
fn pseudo_peripheral(graph: &AdjacencyGraph, members: &[usize]) -> usize {
    let min_degree_in = |nodes: &[usize]| -> usize {
        *nodes
            .iter()
            .min_by_key(|&&v| (graph.degree(v), v))
            .expect("nonempty node set")
    };
    let mut root = min_degree_in(members);
    let (_, mut last_level, mut best_depth) = graph.bfs_levels(root);
    for _ in 0..PERIPHERAL_SWEEPS {
        let candidate = min_degree_in(&last_level);
        let (_, level, depth) = graph.bfs_levels(candidate);
        if depth > best_depth {
            root = candidate;
            best_depth = depth;
            last_level = level;
        } else {
            break;
        }
    }
    root
}

/// Reverse Cuthill-McKee ordering of a square matrix.
///
/// Builds the symmetrized adjacency graph, orders each connected component by
/// a Cuthill-McKee breadth-first sweep from a pseudo-peripheral start node
/// (neighbors visited in ascending-degree order, ties by ascending index),
/// concatenates components by their smallest original index, and reverses the
/// whole sequence.
pub fn rcm_order(a: &SparseMatrix) -> Result<Permutation> {
    let graph = AdjacencyGraph::from_pattern(a)?;
    let n = graph.len();
    let mut visited = vec![false; n];
    let mut order: Vec<usize> = Vec::with_capacity(n);

    for seed in 0..n {
        if visited[seed] {
            continue;
        }
        let (members, _, _) = graph.bfs_levels(seed);
        let root = pseudo_peripheral(&graph, &members);

        let begin = order.len();
        order.push(root);
        visited[root] = true;
        let mut cursor = begin;
        while cursor < order.len() {
            let v = order[cursor];
            cursor += 1;
            let mut next: Vec<usize> = graph
                .neighbors(v)
                .iter()
                .copied()
                .filter(|&w| !visited[w])
                .collect();
            next.sort_unstable_by_key(|&w| (graph.degree(w), w));
            for w in next {
                visited[w] = true;
                order.push(w);
            }
        }
    }

    order.reverse();
    let mut forward = vec![0usize; n];
    for (new_pos, &old) in order.iter().enumerate() {
        forward[old] = new_pos;
    }
    Permutation::from_forward(forward)
}

/// Reorders the whole system: returns `(PAP^T, Pf, P)`.
pub fn preprocess_system(
    a: &SparseMatrix,
    f: &[f64],
) -> Result<(SparseMatrix, Vec<f64>, Permutation)> {
    if f.len() != a.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "rhs length {} vs {} rows",
            f.len(),
            a.nrows()
        )));
    }
    let p = rcm_order(a)?;
    let reordered = a.apply_permutation(&p, PermuteSide::Both)?;
    let rhs = p.apply(f)?;
    Ok((reordered, rhs, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tridiagonal(n: usize) -> SparseMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        SparseMatrix::from_triplets(n, n, t).unwrap()
    }

    fn scramble(a: &SparseMatrix, forward: Vec<usize>) -> SparseMatrix {
        let p = Permutation::from_forward(forward).unwrap();
        a.apply_permutation(&p, PermuteSide::Both).unwrap()
    }

    #[test]
    fn bandwidth_of_diagonal_is_zero() {
        assert_eq!(bandwidth(&SparseMatrix::identity(4)).unwrap(), 0);
        let empty = SparseMatrix::from_triplets(3, 3, vec![]).unwrap();
        assert_eq!(bandwidth(&empty).unwrap(), 0);
    }

    #[test]
    fn bandwidth_of_tridiagonal_is_one() {
        assert_eq!(bandwidth(&tridiagonal(5)).unwrap(), 1);
    }

    #[test]
    fn bandwidth_of_arrow_is_dimension_minus_one() {
        let m = 6;
        let mut t = vec![(0, m - 1, 1.0)];
        for i in 0..m {
            t.push((i, i, 1.0));
        }
        let a = SparseMatrix::from_triplets(m, m, t).unwrap();
        assert_eq!(bandwidth(&a).unwrap(), m - 1);
    }

    #[test]
    fn bandwidth_rejects_non_square() {
        let a = SparseMatrix::from_triplets(2, 3, vec![(0, 0, 1.0)]).unwrap();
        assert!(matches!(bandwidth(&a), Err(Error::NotSquare { .. })));
    }

    #[test]
    fn rcm_on_edgeless_graph_keeps_zero_bandwidth() {
        let a = SparseMatrix::identity(5);
        let p = rcm_order(&a).unwrap();
        let b = a.apply_permutation(&p, PermuteSide::Both).unwrap();
        assert_eq!(bandwidth(&b).unwrap(), 0);
    }

    #[test]
    fn rcm_matches_exhaustive_minimum_on_scrambled_path() {
        // path graph 0-1-2-3-4 relabeled
        let a = scramble(&tridiagonal(5), vec![3, 0, 4, 1, 2]);
        assert!(bandwidth(&a).unwrap() > 1);

        // oracle: minimum bandwidth over all 120 relabelings
        let mut best = usize::MAX;
        let mut perm = vec![0usize, 1, 2, 3, 4];
        // Heap's algorithm, iterative
        let mut stack = vec![0usize; 5];
        let eval = |p: &[usize], m: &SparseMatrix| -> usize {
            m.iter()
                .map(|(i, j, _)| p[i].abs_diff(p[j]))
                .max()
                .unwrap_or(0)
        };
        best = best.min(eval(&perm, &a));
        let mut i = 1;
        while i < 5 {
            if stack[i] < i {
                if i % 2 == 0 {
                    perm.swap(0, i);
                } else {
                    perm.swap(stack[i], i);
                }
                best = best.min(eval(&perm, &a));
                stack[i] += 1;
                i = 1;
            } else {
                stack[i] = 0;
                i += 1;
            }
        }
        assert_eq!(best, 1);

        let p = rcm_order(&a).unwrap();
        let b = a.apply_permutation(&p, PermuteSide::Both).unwrap();
        assert_eq!(bandwidth(&b).unwrap(), best);
    }

    #[test]
    fn rcm_is_deterministic() {
        let a = scramble(&tridiagonal(30), (0..30).map(|i| (i * 17) % 30).collect());
        let p1 = rcm_order(&a).unwrap();
        let p2 = rcm_order(&a).unwrap();
        assert_eq!(p1, p2);
    }

    #[test]
    fn rcm_handles_disconnected_components() {
        // two disjoint paths: {0,2,4} and {1,3}
        let t = vec![
            (0, 2, 1.0),
            (2, 0, 1.0),
            (2, 4, 1.0),
            (4, 2, 1.0),
            (1, 3, 1.0),
            (3, 1, 1.0),
        ];
        let a = SparseMatrix::from_triplets(5, 5, t).unwrap();
        let p = rcm_order(&a).unwrap();
        let b = a.apply_permutation(&p, PermuteSide::Both).unwrap();
        assert!(bandwidth(&b).unwrap() <= 1);
    }

    #[test]
    fn preprocess_round_trips_against_dense_solve() {
        use nalgebra::{DMatrix, DVector};
        let a = scramble(&tridiagonal(12), (0..12).map(|i| (i * 5) % 12).collect());
        let x_star: Vec<f64> = (0..12).map(|i| (i as f64) - 3.5).collect();
        let f = a.spmv(&x_star).unwrap();

        let (reordered, rhs, p) = preprocess_system(&a, &f).unwrap();
        assert!(bandwidth(&reordered).unwrap() <= bandwidth(&a).unwrap());

        let dense = reordered.to_dense();
        let sol = DMatrix::from(dense)
            .lu()
            .solve(&DVector::from_column_slice(&rhs))
            .expect("nonsingular");
        let back = p.apply_inverse(sol.as_slice()).unwrap();
        for (got, want) in back.iter().zip(&x_star) {
            assert!((got - want).abs() < 1e-9);
        }
    }

    #[test]
    fn asymmetric_pattern_is_symmetrized() {
        // strictly upper bidiagonal: graph is still the path
        let mut t = Vec::new();
        for i in 0..6 {
            t.push((i, i, 1.0));
            if i + 1 < 6 {
                t.push((i, i + 1, 1.0));
            }
        }
        let a = scramble(
            &SparseMatrix::from_triplets(6, 6, t).unwrap(),
            vec![4, 2, 0, 5, 1, 3],
        );
        let p = rcm_order(&a).unwrap();
        let b = a.apply_permutation(&p, PermuteSide::Both).unwrap();
        assert!(bandwidth(&b).unwrap() <= 1);
    }

    #[test]
    fn row_iterates_track_each_other_across_reordering() {
        use crate::solvers::row_project;
        // run the row Kaczmarz kernel on the original and the preprocessed
        // system with corresponding rows; error norms must coincide.
        let a = scramble(&tridiagonal(10), (0..10).map(|i| (i * 7) % 10).collect());
        let x_star: Vec<f64> = (0..10).map(|i| ((i as f64) * 0.9).sin() + 2.0).collect();
        let f = a.spmv(&x_star).unwrap();
        let (reordered, rhs, p) = preprocess_system(&a, &f).unwrap();
        let star_permuted = p.apply(&x_star).unwrap();

        let mut x = vec![0.0; 10];
        let mut y = vec![0.0; 10];
        for step in 0..60 {
            let row = step % 10;
            x = row_project(&a, &f, &x, row).unwrap();
            y = row_project(&reordered, &rhs, &y, p.forward()[row]).unwrap();
            let ex: f64 = x
                .iter()
                .zip(&x_star)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let ey: f64 = y
                .iter()
                .zip(&star_permuted)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            assert!((ex - ey).abs() <= 1e-12 * ex.max(1.0));
        }
    }

    proptest! {
        #[test]
        fn rcm_always_returns_a_bijection(
            entries in proptest::collection::vec((0usize..12, 0usize..12, 1.0f64..2.0), 0..50),
        ) {
            let a = SparseMatrix::from_triplets(12, 12, entries).unwrap();
            let p = rcm_order(&a).unwrap();
            let mut sorted = p.forward().to_vec();
            sorted.sort_unstable();
            prop_assert_eq!(sorted, (0..12).collect::<Vec<_>>());
        }
    }
}
