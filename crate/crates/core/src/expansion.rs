//! Exhaustive toy-scale check of the path expansion
//!
//! `B(l) = Delta(l) + sum_{m=1..l} Delta(l-m) Abar B(m-1) - sum_{m=1..l} Gamma(l,m)`
//!
//! `Delta(l)_ij` sums `prod (A - Abar)` over all index sequences `i = i_0, ..., i_l = j`
//! with distinct entries. `Gamma(l,m)_ij` sums
//! `prod_{t<=l-m} (A - Abar) * Abar_{i_{l-m} i_{l-m+1}} * prod_{t>=l-m+2} A` over
//! sequences whose two segments `i_0..i_{l-m}` and `i_{l-m+1}..i_l` are each
//! distinct but share at least one node. Empty products are 1.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::paths::{build_matrix, PathGuard};
use crate::sbm::MeanMatrix;

/// Largest graph accepted by the enumerations here.
pub const MAX_NODES: usize = 14;
/// Largest path length accepted by [`verify_identity`].
pub const MAX_ELL: usize = 4;
pub const IDENTITY_TOL: f64 = 1e-9;

pub type Dense = Vec<Vec<f64>>;

fn check_cap(n: usize) -> Result<()> {
    if n > MAX_NODES {
        Err(Error::EnumerationCap { n, cap: MAX_NODES })
    } else {
        Ok(())
    }
}

/// Every simple path of a given length in a graph, grouped by ordered endpoints.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SimplePathSet {
    pub n: usize,
    pub ell: usize,
    /// `paths[i * n + j]`: node sequences from `i` to `j`.
    paths: Vec<Vec<Vec<usize>>>,
}

impl SimplePathSet {
    pub fn between(&self, i: usize, j: usize) -> &[Vec<usize>] {
        &self.paths[i * self.n + j]
    }

    pub fn total(&self) -> usize {
        self.paths.iter().map(Vec::len).sum()
    }
}

pub fn enumerate_simple_paths(g: &Graph, ell: usize) -> Result<SimplePathSet> {
    let n = g.n();
    check_cap(n)?;
    let mut paths = vec![Vec::new(); n * n];
    let mut current = Vec::with_capacity(ell + 1);
    fn extend(g: &Graph, ell: usize, current: &mut Vec<usize>, out: &mut [Vec<Vec<usize>>], n: usize) {
        let last = *current.last().expect("nonempty");
        if current.len() == ell + 1 {
            out[current[0] * n + last].push(current.clone());
            return;
        }
        for &v in g.neighbors(last) {
            if !current.contains(&v) {
                current.push(v);
                extend(g, ell, current, out, n);
                current.pop();
            }
        }
    }
    for i in 0..n {
        current.clear();
        current.push(i);
        extend(g, ell, &mut current, &mut paths, n);
    }
    Ok(SimplePathSet { n, ell, paths })
}

fn dense_adjacency(g: &Graph) -> Dense {
    let n = g.n();
    (0..n)
        .map(|i| (0..n).map(|j| g.has_edge(i, j) as u8 as f64).collect())
        .collect()
}

fn check_dims(g: &Graph, abar: &MeanMatrix) -> Result<()> {
    check_cap(g.n())?;
    if abar.n() != g.n() {
        return Err(Error::DimensionMismatch { expected: g.n(), got: abar.n() });
    }
    Ok(())
}

/// Calls `visit` for every sequence of `len` pairwise distinct nodes.
fn for_each_distinct(n: usize, len: usize, mut visit: impl FnMut(&[usize])) {
    fn rec(n: usize, len: usize, seq: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
        if seq.len() == len {
            visit(seq);
            return;
        }
        for v in 0..n {
            if !seq.contains(&v) {
                seq.push(v);
                rec(n, len, seq, visit);
                seq.pop();
            }
        }
    }
    rec(n, len, &mut Vec::with_capacity(len), &mut visit);
}

pub fn delta_matrix(g: &Graph, abar: &MeanMatrix, ell: usize) -> Result<Dense> {
    check_dims(g, abar)?;
    let n = g.n();
    let a = dense_adjacency(g);
    let centered = |u: usize, v: usize| a[u][v] - abar.entry(u, v);
    let mut out = vec![vec![0.0; n]; n];
    for_each_distinct(n, ell + 1, |seq| {
        let w: f64 = seq.windows(2).map(|e| centered(e[0], e[1])).product();
        out[seq[0]][seq[ell]] += w;
    });
    Ok(out)
}

/// Path-set sizes accumulated while building `Gamma(l,m)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentCounts {
    /// `|Q^m_ij|` per ordered pair, row-major.
    pub q: Vec<usize>,
    /// `|R^m_ij|`
    pub r: Vec<usize>,
    /// `|P_ij|`, counted as fully distinct sequences inside the same sweep.
    pub p: Vec<usize>,
}

pub fn gamma_matrix(g: &Graph, abar: &MeanMatrix, ell: usize, m: usize) -> Result<Dense> {
    gamma_matrix_with_counts(g, abar, ell, m).map(|(d, _)| d)
}

pub fn gamma_matrix_with_counts(
    g: &Graph,
    abar: &MeanMatrix,
    ell: usize,
    m: usize,
) -> Result<(Dense, SegmentCounts)> {
    check_dims(g, abar)?;
    if m == 0 || m > ell {
        return Err(Error::InvalidParameters(format!("need 1 <= m <= ell, got m = {m}, ell = {ell}")));
    }
    let n = g.n();
    let a = dense_adjacency(g);
    let split = ell - m; // last index of the first segment
    let mut out = vec![vec![0.0; n]; n];
    let mut counts = SegmentCounts { q: vec![0; n * n], r: vec![0; n * n], p: vec![0; n * n] };

    // First segment i_0..i_split (split + 1 distinct nodes), second segment
    // i_{split+1}..i_ell (m distinct nodes), enumerated independently.
    let mut firsts = Vec::new();
    for_each_distinct(n, split + 1, |s| firsts.push(s.to_vec()));
    let mut seconds = Vec::new();
    for_each_distinct(n, m, |s| seconds.push(s.to_vec()));

    for first in &firsts {
        let head: f64 = first
            .windows(2)
            .map(|e| a[e[0]][e[1]] - abar.entry(e[0], e[1]))
            .product();
        let bridge_from = first[split];
        for second in &seconds {
            let (i, j) = (first[0], second[m - 1]);
            let intersects = second.iter().any(|v| first.contains(v));
            counts.q[i * n + j] += 1;
            if !intersects {
                counts.p[i * n + j] += 1;
                continue;
            }
            counts.r[i * n + j] += 1;
            let tail: f64 = second.windows(2).map(|e| a[e[0]][e[1]]).product();
            out[i][j] += head * abar.entry(bridge_from, second[0]) * tail;
        }
    }
    Ok((out, counts))
}

fn matmul(x: &Dense, y: &Dense) -> Dense {
    let n = x.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            let xik = x[i][k];
            if xik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i][j] += xik * y[k][j];
            }
        }
    }
    out
}

fn frobenius(x: &Dense) -> f64 {
    x.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionReport {
    pub n: usize,
    pub ell: usize,
    pub max_abs_error: f64,
    pub delta_frobenius: f64,
    /// Frobenius norm of `Gamma(l,m)` for `m = 1..=l`.
    pub gamma_frobenius: Vec<f64>,
}

impl ExpansionReport {
    pub fn passes(&self) -> bool {
        self.max_abs_error <= IDENTITY_TOL
    }
}

/// Evaluate both sides of the expansion densely and report the largest entrywise gap.
pub fn verify_identity(g: &Graph, abar: &MeanMatrix, ell: usize) -> Result<ExpansionReport> {
    check_dims(g, abar)?;
    if ell > MAX_ELL {
        return Err(Error::EnumerationCap { n: ell, cap: MAX_ELL });
    }
    let n = g.n();
    let guard = PathGuard::default();
    let b: Vec<Dense> = (0..=ell)
        .map(|k| build_matrix(g, k, &guard).map(|m| m.to_dense()))
        .collect::<Result<_>>()?;
    let deltas: Vec<Dense> = (0..=ell).map(|k| delta_matrix(g, abar, k)).collect::<Result<_>>()?;
    let abar_dense = abar.to_dense();

    let mut rhs = deltas[ell].clone();
    let mut gamma_frobenius = Vec::with_capacity(ell);
    for m in 1..=ell {
        let term = matmul(&matmul(&deltas[ell - m], &abar_dense), &b[m - 1]);
        let gamma = gamma_matrix(g, abar, ell, m)?;
        gamma_frobenius.push(frobenius(&gamma));
        for i in 0..n {
            for j in 0..n {
                rhs[i][j] += term[i][j] - gamma[i][j];
            }
        }
    }
    let max_abs_error = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| (b[ell][i][j] - rhs[i][j]).abs())
        .fold(0.0, f64::max);
    Ok(ExpansionReport {
        n,
        ell,
        max_abs_error,
        delta_frobenius: frobenius(&deltas[ell]),
        gamma_frobenius,
    })
}
