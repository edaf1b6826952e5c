//! Simple undirected graphs, distance balls and the layer statistics built on them.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::par;
use crate::sbm::{DerivedParams, SpinAssignment};

/// Simple undirected graph stored as sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
    m: usize,
}

impl Graph {
    /// Build from an edge list. Duplicate edges (in either orientation) are merged;
    /// self-loops and out-of-range endpoints are rejected.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        for (u, v) in edges {
            for w in [u, v] {
                if w >= n {
                    return Err(Error::NodeOutOfRange { node: w, n });
                }
            }
            if u == v {
                return Err(Error::InvalidParameters(format!("self-loop at node {u}")));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self::from_sorted_adjacency(adj))
    }

    /// Adjacency lists must already be sorted, deduplicated and symmetric.
    pub(crate) fn from_sorted_adjacency(adj: Vec<Vec<usize>>) -> Self {
        let m = adj.iter().map(Vec::len).sum::<usize>() / 2;
        Graph { adj, m }
    }

    pub fn empty(n: usize) -> Self {
        Graph {
            adj: vec![Vec::new(); n],
            m: 0,
        }
    }

    pub fn complete(n: usize) -> Self {
        let adj = (0..n)
            .map(|i| (0..n).filter(|&j| j != i).collect())
            .collect();
        Self::from_sorted_adjacency(adj)
    }

    /// The path 0 - 1 - ... - (n-1).
    pub fn path(n: usize) -> Self {
        Self::from_edges(n, (1..n).map(|i| (i - 1, i))).expect("valid path")
    }

    pub fn cycle(n: usize) -> Self {
        assert!(n >= 3, "a cycle needs at least 3 nodes");
        Self::from_edges(n, (0..n).map(|i| (i, (i + 1) % n))).expect("valid cycle")
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adj[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i].binary_search(&j).is_ok()
    }

    /// Edges as `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    pub(crate) fn check_node(&self, i: usize) -> Result<()> {
        if i < self.n() {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange { node: i, n: self.n() })
        }
    }
}

/// Distance layers of the radius-`radius` ball around `center`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BallDecomposition {
    pub center: usize,
    pub radius: usize,
    /// `layers[t]` holds the nodes at distance exactly `t`, sorted.
    pub layers: Vec<Vec<usize>>,
    /// BFS-tree parent of each node, aligned with `layers`. The center is its own parent.
    pub parents: Vec<Vec<usize>>,
    /// Tree excess of the induced subgraph on the ball.
    pub extra_edges: usize,
}

impl BallDecomposition {
    pub fn size(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    pub fn is_tree(&self) -> bool {
        self.extra_edges == 0
    }
}

/// Reusable BFS buffers, sized to the graph. Epoch stamping avoids clearing.
#[derive(Debug, Clone)]
pub struct BallScratch {
    stamp: Vec<u32>,
    dist: Vec<u32>,
    parent: Vec<usize>,
    epoch: u32,
}

impl BallScratch {
    pub fn new(n: usize) -> Self {
        BallScratch {
            stamp: vec![0; n],
            dist: vec![0; n],
            parent: vec![0; n],
            epoch: 0,
        }
    }

    fn next_epoch(&mut self) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
    }

    /// Distance of `v` from the last BFS center, if `v` was reached.
    #[inline]
    pub fn distance(&self, v: usize) -> Option<usize> {
        (self.stamp[v] == self.epoch).then(|| self.dist[v] as usize)
    }
}

pub fn bfs_ball(g: &Graph, i: usize, radius: usize) -> Result<BallDecomposition> {
    g.check_node(i)?;
    Ok(bfs_ball_with(g, i, radius, &mut BallScratch::new(g.n())))
}

/// BFS using caller-provided scratch. `i` must be a valid node.
pub fn bfs_ball_with(
    g: &Graph,
    i: usize,
    radius: usize,
    scratch: &mut BallScratch,
) -> BallDecomposition {
    scratch.next_epoch();
    let epoch = scratch.epoch;
    scratch.stamp[i] = epoch;
    scratch.dist[i] = 0;
    scratch.parent[i] = i;

    let mut layers = vec![vec![i]];
    for t in 1..=radius {
        let mut next = Vec::new();
        for &u in &layers[t - 1] {
            for &v in g.neighbors(u) {
                if scratch.stamp[v] != epoch {
                    scratch.stamp[v] = epoch;
                    scratch.dist[v] = t as u32;
                    scratch.parent[v] = u;
                    next.push(v);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        next.sort_unstable();
        layers.push(next);
    }

    let parents = layers
        .iter()
        .map(|layer| layer.iter().map(|&v| scratch.parent[v]).collect())
        .collect();

    let mut inner_edges = 0usize;
    let mut size = 0usize;
    for layer in &layers {
        for &u in layer {
            size += 1;
            inner_edges += g
                .neighbors(u)
                .iter()
                .filter(|&&v| v > u && scratch.stamp[v] == epoch)
                .count();
        }
    }
    while layers.len() <= radius {
        layers.push(Vec::new());
    }
    let mut parents: Vec<Vec<usize>> = parents;
    parents.resize(layers.len(), Vec::new());

    BallDecomposition {
        center: i,
        radius,
        layers,
        parents,
        extra_edges: inner_edges + 1 - size,
    }
}

/// Layer sizes and spin sums of one ball.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NeighborhoodStats {
    /// `s[t]`: number of nodes at distance `t`.
    pub s: Vec<u64>,
    /// `d[t]`: sum of spins at distance `t`.
    pub d: Vec<i64>,
    pub u_plus: Vec<u64>,
    pub u_minus: Vec<u64>,
}

pub fn neighborhood_stats(ball: &BallDecomposition, spins: &SpinAssignment) -> NeighborhoodStats {
    let mut u_plus = Vec::with_capacity(ball.layers.len());
    let mut u_minus = Vec::with_capacity(ball.layers.len());
    for layer in &ball.layers {
        let plus = layer.iter().filter(|&&v| spins.get(v) > 0).count() as u64;
        u_plus.push(plus);
        u_minus.push(layer.len() as u64 - plus);
    }
    let s = u_plus.iter().zip(&u_minus).map(|(p, m)| p + m).collect();
    let d = u_plus
        .iter()
        .zip(&u_minus)
        .map(|(&p, &m)| p as i64 - m as i64)
        .collect();
    NeighborhoodStats { s, d, u_plus, u_minus }
}

/// Maximal normalized growth statistics over all nodes and depths `1..=ell`.
/// A diagnostic: nothing here is asserted against a hard bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthReport {
    pub n: usize,
    pub ell: usize,
    /// max `S_t(i) / (alpha^t ln n)`
    pub s_ratio_max: f64,
    /// max `|D_t(i)| / (|beta|^t ln n)`; `None` when beta = 0.
    pub d_ratio_max: Option<f64>,
    /// max `|S_t(i) - alpha^(t-ell) S_ell(i)| / (ln n + sqrt(alpha^t ln n))`
    pub s_control_max: f64,
    /// Same with `D` and `beta^(t-ell)`; `None` when beta = 0.
    pub d_control_max: Option<f64>,
}

pub fn growth_report(
    g: &Graph,
    spins: &SpinAssignment,
    ell: usize,
    params: &DerivedParams,
) -> Result<GrowthReport> {
    if params.alpha <= 1.0 {
        return Err(Error::InvalidParameters(format!(
            "growth report needs alpha > 1, got {}",
            params.alpha
        )));
    }
    spins.check_len(g.n())?;
    let (alpha, beta) = (params.alpha, params.beta);
    let log_n = (g.n() as f64).ln();
    let has_beta = beta != 0.0;

    let per_node = par::map_range_with(
        g.n(),
        || BallScratch::new(g.n()),
        |scratch, i| {
            let ball = bfs_ball_with(g, i, ell, scratch);
            let stats = neighborhood_stats(&ball, spins);
            let s_ell = stats.s[ell] as f64;
            let d_ell = stats.d[ell] as f64;
            let mut out = [0.0f64; 4];
            for t in 1..=ell {
                let s_t = stats.s[t] as f64;
                let d_t = stats.d[t] as f64;
                let scale = log_n + (alpha.powi(t as i32) * log_n).sqrt();
                out[0] = out[0].max(s_t / (alpha.powi(t as i32) * log_n));
                out[2] = out[2].max((s_t - alpha.powi(t as i32 - ell as i32) * s_ell).abs() / scale);
                if has_beta {
                    out[1] = out[1].max(d_t.abs() / (beta.abs().powi(t as i32) * log_n));
                    out[3] = out[3]
                        .max((d_t - beta.powi(t as i32 - ell as i32) * d_ell).abs() / scale);
                }
            }
            out
        },
    );
    let fold = |k: usize| per_node.iter().map(|o| o[k]).fold(0.0, f64::max);
    Ok(GrowthReport {
        n: g.n(),
        ell,
        s_ratio_max: fold(0),
        d_ratio_max: has_beta.then(|| fold(1)),
        s_control_max: fold(2),
        d_control_max: has_beta.then(|| fold(3)),
    })
}

/// Per-node tree excess of the radius-`ell` balls.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CycleCensus {
    pub ell: usize,
    pub extra_edges: Vec<usize>,
    pub nodes_with_cycle: usize,
    pub nodes_with_two_or_more: usize,
}

impl CycleCensus {
    pub fn fraction_two_or_more(&self) -> f64 {
        if self.extra_edges.is_empty() {
            0.0
        } else {
            self.nodes_with_two_or_more as f64 / self.extra_edges.len() as f64
        }
    }
}

pub fn cycle_census(g: &Graph, ell: usize) -> CycleCensus {
    let extra_edges = par::map_range_with(
        g.n(),
        || BallScratch::new(g.n()),
        |scratch, i| bfs_ball_with(g, i, ell, scratch).extra_edges,
    );
    CycleCensus {
        ell,
        nodes_with_cycle: extra_edges.iter().filter(|&&e| e >= 1).count(),
        nodes_with_two_or_more: extra_edges.iter().filter(|&&e| e >= 2).count(),
        extra_edges,
    }
}
