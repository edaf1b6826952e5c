//! The self-avoiding path-count matrix: entry `(i, j)` counts the simple paths of
//! length `ell` between `i` and `j`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{bfs_ball_with, BallScratch, Graph};
use crate::par;
use crate::rng;
use crate::spectral::SymmetricOperator;

/// Limits on per-row enumeration work.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathGuard {
    /// Refuse rows whose ball has more than this many extra edges.
    pub max_extra_edges: Option<usize>,
    /// Refuse rows whose DFS visits more partial paths than this.
    pub max_paths_per_row: u64,
}

impl Default for PathGuard {
    fn default() -> Self {
        PathGuard {
            max_extra_edges: None,
            max_paths_per_row: 100_000_000,
        }
    }
}

impl PathGuard {
    pub fn with_extra_edge_cap(cap: usize) -> Self {
        PathGuard {
            max_extra_edges: Some(cap),
            ..Default::default()
        }
    }
}

/// Exhaustive count of simple paths of length `ell` from `i` to `j`, by plain
/// depth-first search over the whole graph with an on-path marker.
pub fn count_paths_exact(g: &Graph, i: usize, j: usize, ell: usize) -> Result<u64> {
    g.check_node(i)?;
    g.check_node(j)?;
    fn walk(g: &Graph, u: usize, target: usize, left: usize, on_path: &mut [bool]) -> u64 {
        if left == 0 {
            return (u == target) as u64;
        }
        let mut total = 0;
        for &v in g.neighbors(u) {
            if !on_path[v] {
                on_path[v] = true;
                total += walk(g, v, target, left - 1, on_path);
                on_path[v] = false;
            }
        }
        total
    }
    let mut on_path = vec![false; g.n()];
    on_path[i] = true;
    Ok(walk(g, i, j, ell, &mut on_path))
}

/// Buffers for repeated row construction.
#[derive(Debug, Clone)]
pub struct RowScratch {
    ball: BallScratch,
    on_path: Vec<bool>,
    counts: Vec<u64>,
    touched: Vec<usize>,
}

impl RowScratch {
    pub fn new(n: usize) -> Self {
        RowScratch {
            ball: BallScratch::new(n),
            on_path: vec![false; n],
            counts: vec![0; n],
            touched: Vec::new(),
        }
    }
}

/// Sparse row as sorted `(column, count)` pairs.
pub type SparseRow = Vec<(usize, u64)>;

pub fn build_row(g: &Graph, i: usize, ell: usize, guard: &PathGuard) -> Result<SparseRow> {
    g.check_node(i)?;
    build_row_with(g, i, ell, guard, &mut RowScratch::new(g.n()))
}

/// Row `i` via a self-avoiding DFS inside the radius-`ell` ball. Tree balls
/// short-circuit to the indicator of the outer layer.
pub fn build_row_with(
    g: &Graph,
    i: usize,
    ell: usize,
    guard: &PathGuard,
    scratch: &mut RowScratch,
) -> Result<SparseRow> {
    if ell == 0 {
        return Ok(vec![(i, 1)]);
    }
    let ball = bfs_ball_with(g, i, ell, &mut scratch.ball);
    if let Some(cap) = guard.max_extra_edges {
        if ball.extra_edges > cap {
            return Err(Error::ComplexityGuard {
                nodes: vec![i],
                reason: format!("ball has {} extra edges (cap {cap})", ball.extra_edges),
            });
        }
    }
    if ball.is_tree() {
        return Ok(ball.layers[ell].iter().map(|&j| (j, 1)).collect());
    }

    // Iterative DFS; stack holds (node, next neighbor index).
    let mut stack: Vec<(usize, usize)> = Vec::with_capacity(ell + 1);
    let mut visited_paths: u64 = 0;
    scratch.on_path[i] = true;
    stack.push((i, 0));
    let mut result = Ok(());
    while let Some(&mut (u, ref mut next)) = stack.last_mut() {
        let nbrs = g.neighbors(u);
        if *next >= nbrs.len() {
            scratch.on_path[u] = false;
            stack.pop();
            continue;
        }
        let v = nbrs[*next];
        *next += 1;
        if scratch.on_path[v] {
            continue;
        }
        visited_paths += 1;
        if visited_paths > guard.max_paths_per_row {
            result = Err(Error::ComplexityGuard {
                nodes: vec![i],
                reason: format!("more than {} partial paths", guard.max_paths_per_row),
            });
            break;
        }
        if stack.len() == ell {
            if scratch.counts[v] == 0 {
                scratch.touched.push(v);
            }
            match scratch.counts[v].checked_add(1) {
                Some(c) => scratch.counts[v] = c,
                None => {
                    result = Err(Error::Overflow { node: i });
                    break;
                }
            }
        } else {
            scratch.on_path[v] = true;
            stack.push((v, 0));
        }
    }
    for (u, _) in stack.drain(..) {
        scratch.on_path[u] = false;
    }

    scratch.touched.sort_unstable();
    let row = scratch
        .touched
        .iter()
        .map(|&j| (j, std::mem::take(&mut scratch.counts[j])))
        .collect();
    scratch.touched.clear();
    result.map(|_| row)
}

/// Symmetric sparse matrix of path counts in CSR form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathCountMatrix {
    n: usize,
    ell: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<u64>,
}

pub fn build_matrix(g: &Graph, ell: usize, guard: &PathGuard) -> Result<PathCountMatrix> {
    let n = g.n();
    let rows = par::map_range_with(
        n,
        || RowScratch::new(n),
        |scratch, i| build_row_with(g, i, ell, guard, scratch),
    );

    let mut guarded = Vec::new();
    let mut reasons = Vec::new();
    let mut ok_rows = Vec::with_capacity(n);
    for row in rows {
        match row {
            Ok(r) => ok_rows.push(r),
            Err(Error::ComplexityGuard { nodes, reason }) => {
                guarded.extend(nodes);
                if reasons.len() < 3 {
                    reasons.push(reason);
                }
            }
            Err(e) => return Err(e),
        }
    }
    if !guarded.is_empty() {
        return Err(Error::ComplexityGuard {
            nodes: guarded,
            reason: reasons.join("; "),
        });
    }

    let mut row_ptr = Vec::with_capacity(n + 1);
    row_ptr.push(0);
    let nnz: usize = ok_rows.iter().map(Vec::len).sum();
    let mut cols = Vec::with_capacity(nnz);
    let mut vals = Vec::with_capacity(nnz);
    for row in ok_rows {
        for (j, c) in row {
            cols.push(j);
            vals.push(c);
        }
        row_ptr.push(cols.len());
    }
    let b = PathCountMatrix { n, ell, row_ptr, cols, vals };
    b.check_symmetry()?;
    Ok(b)
}

impl PathCountMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[u64]) {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[range.clone()], &self.vals[range])
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map_or(0, |k| vals[k])
    }

    /// Entries `(i, j, count)` in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        (0..self.n).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &c)| (i, j, c))
        })
    }

    /// Full check up to n = 5000; above that a deterministic ~1% sample of rows.
    fn check_symmetry(&self) -> Result<()> {
        let full = self.n <= 5000;
        for i in 0..self.n {
            if !full && !rng::hash2(0x5A5A, i as u64).is_multiple_of(100) {
                continue;
            }
            let (cols, vals) = self.row(i);
            for (&j, &c) in cols.iter().zip(vals) {
                let back = self.get(j, i);
                if back != c {
                    return Err(Error::Asymmetric { i, j, forward: c, backward: back });
                }
            }
        }
        Ok(())
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: x.len() });
        }
        let mut y = vec![0.0; self.n];
        self.apply(x, &mut y);
        Ok(y)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, j, c) in self.triplets() {
            d[i][j] = c as f64;
        }
        d
    }

    /// Coordinate text, one `i j count` line per nonzero, sorted.
    pub fn write_coordinates<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (i, j, c) in self.triplets() {
            writeln!(out, "{i} {j} {c}")?;
        }
        Ok(())
    }
}

impl SymmetricOperator for PathCountMatrix {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        par::fill(y, |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(|(&j, &c)| c as f64 * x[j]).sum()
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> Graph {
        Graph::from_edges(3, [(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    #[test]
    fn exact_counts_small() {
        assert_eq!(count_paths_exact(&triangle(), 0, 2, 2).unwrap(), 1);
        let p = Graph::path(3);
        assert_eq!(count_paths_exact(&p, 0, 2, 2).unwrap(), 1);
        assert_eq!(count_paths_exact(&p, 0, 1, 2).unwrap(), 0);
        assert_eq!(count_paths_exact(&Graph::complete(4), 0, 3, 3).unwrap(), 2);
        assert_eq!(count_paths_exact(&p, 1, 1, 0).unwrap(), 1);
        assert!(count_paths_exact(&p, 0, 3, 1).is_err());
    }

    #[test]
    fn triangle_row() {
        let row = build_row(&triangle(), 0, 2, &PathGuard::default()).unwrap();
        assert_eq!(row, vec![(1, 1), (2, 1)]);
    }

    #[test]
    fn tree_row_is_outer_layer_indicator() {
        let tree = Graph::from_edges(7, [(0, 1), (0, 2), (1, 3), (1, 4), (2, 5), (5, 6)]).unwrap();
        let row = build_row(&tree, 0, 2, &PathGuard::default()).unwrap();
        assert_eq!(row, vec![(3, 1), (4, 1), (5, 1)]);
    }

    #[test]
    fn ell_one_is_adjacency_and_zero_is_identity() {
        let g = Graph::from_edges(5, [(0, 1), (1, 2), (2, 0), (3, 4)]).unwrap();
        let b = build_matrix(&g, 1, &PathGuard::default()).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(b.get(i, j), g.has_edge(i, j) as u64);
            }
        }
        let id = build_matrix(&g, 0, &PathGuard::default()).unwrap();
        assert_eq!(id.triplets().collect::<Vec<_>>(), (0..5).map(|i| (i, i, 1)).collect::<Vec<_>>());
    }

    #[test]
    fn six_cycle_antipodal_pairs_count_two() {
        let b = build_matrix(&Graph::cycle(6), 3, &PathGuard::default()).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let expect = if (i + 3) % 6 == j { 2 } else { 0 };
                assert_eq!(b.get(i, j), expect, "({i},{j})");
            }
        }
    }

    #[test]
    fn guard_trips_on_extra_edges() {
        let k5 = Graph::complete(5);
        let err = build_row(&k5, 0, 2, &PathGuard::with_extra_edge_cap(2)).unwrap_err();
        assert!(matches!(err, Error::ComplexityGuard { ref nodes, .. } if nodes == &vec![0]));
        let err = build_matrix(&k5, 2, &PathGuard::with_extra_edge_cap(2)).unwrap_err();
        match err {
            Error::ComplexityGuard { nodes, .. } => assert_eq!(nodes, vec![0, 1, 2, 3, 4]),
            other => panic!("unexpected {other:?}"),
        }
        let tight = PathGuard { max_extra_edges: None, max_paths_per_row: 10 };
        assert!(build_row(&k5, 0, 3, &tight).is_err());
        // scratch must be clean after an aborted row
        let mut scratch = RowScratch::new(5);
        assert!(build_row_with(&k5, 0, 3, &tight, &mut scratch).is_err());
        let row = build_row_with(&k5, 0, 3, &PathGuard::default(), &mut scratch).unwrap();
        assert_eq!(row, vec![(1, 6), (2, 6), (3, 6), (4, 6)]);
    }

    #[test]
    fn matvec_degree_and_columns() {
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (1, 3), (2, 3)]).unwrap();
        let b = build_matrix(&g, 1, &PathGuard::default()).unwrap();
        assert_eq!(b.matvec(&[1.0; 4]).unwrap(), vec![1.0, 3.0, 2.0, 2.0]);
        let b2 = build_matrix(&g, 2, &PathGuard::default()).unwrap();
        for j in 0..4 {
            let mut e = vec![0.0; 4];
            e[j] = 1.0;
            let col = b2.matvec(&e).unwrap();
            for i in 0..4 {
                assert_eq!(col[i], b2.get(j, i) as f64);
            }
        }
        assert!(matches!(b.matvec(&[1.0; 3]), Err(Error::DimensionMismatch { expected: 4, got: 3 })));
    }

    #[test]
    fn coordinate_dump() {
        let b = build_matrix(&Graph::path(3), 2, &PathGuard::default()).unwrap();
        let mut out = Vec::new();
        b.write_coordinates(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "0 2 1\n2 0 1\n");
    }
}
