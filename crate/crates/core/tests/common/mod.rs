#![allow(dead_code)]

use nalgebra::DMatrix;
use sbm_paths::sbm::{sample_graph, sample_spins};
use sbm_paths::{Graph, SbmParams, SpinAssignment};

/// A small SBM instance whose size and rates are drawn from `seed`.
pub fn small_sbm(seed: u64, n_lo: usize, n_hi: usize) -> (SbmParams, SpinAssignment, Graph) {
    let h = |k: u64| sbm_paths::rng::unit_f64(sbm_paths::rng::hash2(seed, k));
    let n = n_lo + (h(1) * (n_hi - n_lo + 1) as f64) as usize;
    let n = n.min(n_hi);
    let a = (0.5 + 5.0 * h(2)).min(n as f64);
    let b = (0.2 + 3.0 * h(3)).min(n as f64);
    let p = SbmParams::new(n, a, b).unwrap();
    let spins = sample_spins(n, seed);
    let g = sample_graph(&p, &spins, seed).unwrap();
    (p, spins, g)
}

pub fn adjacency(g: &Graph) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(g.n(), g.n());
    for (u, v) in g.edges() {
        a[(u, v)] = 1.0;
        a[(v, u)] = 1.0;
    }
    a
}

/// All-pairs hop distances; `usize::MAX` when unreachable.
pub fn floyd_warshall(g: &Graph) -> Vec<Vec<usize>> {
    let n = g.n();
    let inf = usize::MAX / 4;
    let mut d = vec![vec![inf; n]; n];
    for i in 0..n {
        d[i][i] = 0;
    }
    for (u, v) in g.edges() {
        d[u][v] = 1;
        d[v][u] = 1;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    for row in &mut d {
        for x in row.iter_mut() {
            if *x >= inf {
                *x = usize::MAX;
            }
        }
    }
    d
}

/// Simple path counts for `ell <= 3` from powers of the adjacency matrix:
/// `B2 = A^2 - D`, and off the diagonal `B3 = A^3 - A (d_i + d_j - 1)`.
pub fn closed_form_paths(g: &Graph, ell: usize) -> DMatrix<f64> {
    let n = g.n();
    let a = adjacency(g);
    let mut b = match ell {
        0 => DMatrix::identity(n, n),
        1 => a.clone(),
        2 => &a * &a,
        3 => &a * &a * &a,
        _ => panic!("closed form only up to ell = 3"),
    };
    if ell >= 2 {
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    b[(i, j)] = 0.0;
                } else if ell == 3 {
                    b[(i, j)] -= a[(i, j)] * (g.degree(i) + g.degree(j)) as f64 - a[(i, j)];
                }
            }
        }
    }
    b
}

/// Eigenvalues sorted by magnitude, largest first.
pub fn dense_spectrum(m: &DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    assert!(v.iter().all(|x| x.is_finite()), "dense eigen oracle returned non-finite values");
    v.sort_by(|x, y| y.abs().total_cmp(&x.abs()));
    v
}

/// Eigenvalue magnitudes of a symmetric matrix, i.e. its singular values,
/// largest first.
pub fn dense_magnitudes(m: &DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    v.sort_by(|x, y| y.total_cmp(x));
    v
}

pub fn to_dmatrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}
