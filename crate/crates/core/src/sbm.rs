//! Two-community stochastic block model: parameters, spin and graph sampling, and
//! the conditional mean adjacency as a low-rank operator.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::par;
use crate::rng;
use crate::spectral::SymmetricOperator;

/// Model inputs: `n` nodes, within-community rate `a`, cross-community rate `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SbmParams {
    pub n: usize,
    pub a: f64,
    pub b: f64,
}

impl SbmParams {
    pub fn new(n: usize, a: f64, b: f64) -> Result<Self> {
        let p = SbmParams { n, a, b };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParameters(format!("n must be >= 2, got {}", self.n)));
        }
        for (name, rate) in [("a", self.a), ("b", self.b)] {
            if !rate.is_finite() || rate < 0.0 {
                return Err(Error::InvalidParameters(format!("{name} must be finite and >= 0, got {rate}")));
            }
            if rate / self.n as f64 > 1.0 {
                return Err(Error::InvalidParameters(format!(
                    "{name}/n = {} exceeds 1",
                    rate / self.n as f64
                )));
            }
        }
        Ok(())
    }

    pub fn within_prob(&self) -> f64 {
        self.a / self.n as f64
    }

    pub fn across_prob(&self) -> f64 {
        self.b / self.n as f64
    }
}

/// `alpha = (a+b)/2`, `beta = (a-b)/2`, `tau = (a-b)^2 / (2(a+b))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    pub alpha: f64,
    pub beta: f64,
    pub tau: f64,
}

impl DerivedParams {
    pub fn from_rates(a: f64, b: f64) -> Result<Self> {
        if !(a + b > 0.0) {
            return Err(Error::InvalidParameters(format!(
                "a + b must be positive for tau to be defined (a = {a}, b = {b})"
            )));
        }
        Ok(DerivedParams {
            alpha: (a + b) / 2.0,
            beta: (a - b) / 2.0,
            tau: (a - b) * (a - b) / (2.0 * (a + b)),
        })
    }
}

pub fn derive_params(p: &SbmParams) -> Result<DerivedParams> {
    DerivedParams::from_rates(p.a, p.b)
}

/// Detectability condition `beta^2 > alpha` (equivalently `tau > 1`).
pub fn is_detectable(d: &DerivedParams) -> bool {
    d.beta * d.beta > d.alpha
}

/// Community labels in {-1, +1}.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct SpinAssignment(Vec<i8>);

impl SpinAssignment {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if let Some(pos) = spins.iter().position(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidParameters(format!(
                "spin at index {pos} is {}, expected -1 or +1",
                spins[pos]
            )));
        }
        Ok(SpinAssignment(spins))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> i8 {
        self.0[i]
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&s| s as f64).collect()
    }

    pub fn flipped(&self) -> Self {
        SpinAssignment(self.0.iter().map(|&s| -s).collect())
    }

    pub(crate) fn check_len(&self, n: usize) -> Result<()> {
        if self.len() == n {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: n, got: self.len() })
        }
    }
}

impl TryFrom<Vec<i8>> for SpinAssignment {
    type Error = Error;
    fn try_from(v: Vec<i8>) -> Result<Self> {
        SpinAssignment::new(v)
    }
}

impl From<SpinAssignment> for Vec<i8> {
    fn from(s: SpinAssignment) -> Vec<i8> {
        s.0
    }
}

/// I.i.d. uniform spins; entry `i` depends only on `(seed, i)`.
pub fn sample_spins(n: usize, seed: u64) -> SpinAssignment {
    let key = rng::derive(seed, "spins");
    SpinAssignment(
        (0..n)
            .map(|i| if rng::hash2(key, i as u64) >> 63 == 1 { 1 } else { -1 })
            .collect(),
    )
}

/// How edges are drawn. Both are exact samplers of the same distribution but
/// produce different graphs for the same seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeSampler {
    /// One hashed uniform per unordered pair; O(n^2).
    #[default]
    PairScan,
    /// Geometric skipping within each spin class; O(n + m).
    GeometricSkip,
}

pub fn sample_graph(p: &SbmParams, spins: &SpinAssignment, seed: u64) -> Result<Graph> {
    sample_graph_with(p, spins, seed, EdgeSampler::PairScan)
}

pub fn sample_graph_with(
    p: &SbmParams,
    spins: &SpinAssignment,
    seed: u64,
    sampler: EdgeSampler,
) -> Result<Graph> {
    p.validate()?;
    spins.check_len(p.n)?;
    let n = p.n;
    let (p_in, p_out) = (p.within_prob(), p.across_prob());
    let key = rng::derive(seed, "graph");

    let upper: Vec<Vec<usize>> = match sampler {
        EdgeSampler::PairScan => par::map_range(n, |i| {
            let si = spins.get(i);
            (i + 1..n)
                .filter(|&j| {
                    let prob = if spins.get(j) == si { p_in } else { p_out };
                    rng::unit_f64(rng::hash3(key, i as u64, j as u64)) < prob
                })
                .collect()
        }),
        EdgeSampler::GeometricSkip => {
            let plus: Vec<usize> = (0..n).filter(|&i| spins.get(i) > 0).collect();
            let minus: Vec<usize> = (0..n).filter(|&i| spins.get(i) < 0).collect();
            par::map_range(n, |i| {
                let mut r = rng::stream_rng(key, i as u64);
                let (same, other) = if spins.get(i) > 0 { (&plus, &minus) } else { (&minus, &plus) };
                let mut row = Vec::new();
                for (class, prob) in [(same, p_in), (other, p_out)] {
                    let start = class.partition_point(|&j| j <= i);
                    skip_sample(&class[start..], prob, &mut r, &mut row);
                }
                row.sort_unstable();
                row
            })
        }
    };

    let mut adj: Vec<Vec<usize>> = upper.clone();
    for (i, row) in upper.iter().enumerate() {
        for &j in row {
            adj[j].push(i);
        }
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    Ok(Graph::from_sorted_adjacency(adj))
}

/// Select each element of `candidates` independently with probability `prob`.
fn skip_sample<R: Rng>(candidates: &[usize], prob: f64, r: &mut R, out: &mut Vec<usize>) {
    if prob <= 0.0 {
        return;
    }
    if prob >= 1.0 {
        out.extend_from_slice(candidates);
        return;
    }
    let log_q = (-prob).ln_1p();
    let mut pos = 0usize;
    loop {
        let u: f64 = 1.0 - r.random::<f64>(); // (0, 1]
        let gap = (u.ln() / log_q).floor();
        if !gap.is_finite() || gap >= (candidates.len() - pos) as f64 {
            return;
        }
        pos += gap as usize;
        out.push(candidates[pos]);
        pos += 1;
        if pos >= candidates.len() {
            return;
        }
    }
}

/// Conditional mean adjacency
/// `c_e ee' + c_s ss' - (a/n) I` with `c_e = (a+b)/2n`, `c_s = (a-b)/2n`,
/// which has zero diagonal and `a/n` or `b/n` off the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanMatrix {
    pub coef_ones: f64,
    pub coef_spins: f64,
    spins: Vec<f64>,
}

pub fn mean_matrix(p: &SbmParams, spins: &SpinAssignment) -> Result<MeanMatrix> {
    spins.check_len(p.n)?;
    let n = p.n as f64;
    Ok(MeanMatrix {
        coef_ones: (p.a + p.b) / (2.0 * n),
        coef_spins: (p.a - p.b) / (2.0 * n),
        spins: spins.to_f64(),
    })
}

impl MeanMatrix {
    pub fn n(&self) -> usize {
        self.spins.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            0.0
        } else {
            self.coef_ones + self.coef_spins * self.spins[i] * self.spins[j]
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n())
            .map(|i| (0..self.n()).map(|j| self.entry(i, j)).collect())
            .collect()
    }
}

impl SymmetricOperator for MeanMatrix {
    fn dim(&self) -> usize {
        self.n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let total = crate::stats::sum(x.iter().copied());
        let proj = crate::stats::dot(&self.spins, x);
        for ((yi, xi), si) in y.iter_mut().zip(x).zip(&self.spins) {
            *yi = self.coef_ones * total + self.coef_spins * proj * si
                - (self.coef_ones + self.coef_spins * si * si) * xi;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_examples() {
        let d = DerivedParams::from_rates(5.0, 1.0).unwrap();
        assert_eq!((d.alpha, d.beta), (3.0, 2.0));
        assert!((d.tau - 4.0 / 3.0).abs() < 1e-15);
        let d = DerivedParams::from_rates(4.0, 4.0).unwrap();
        assert_eq!((d.alpha, d.beta, d.tau), (4.0, 0.0, 0.0));
        let d = DerivedParams::from_rates(7.0, 1.0).unwrap();
        assert_eq!((d.alpha, d.beta, d.tau), (4.0, 3.0, 2.25));
        assert!(DerivedParams::from_rates(0.0, 0.0).is_err());
    }

    #[test]
    fn detectability_examples() {
        let d = |alpha, beta| DerivedParams { alpha, beta, tau: beta * beta / alpha };
        assert!(is_detectable(&d(3.0, 2.0)));
        assert!(!is_detectable(&d(4.0, 2.0)));
        assert!(!is_detectable(&d(4.0, 0.0)));
    }

    #[test]
    fn params_validation() {
        assert!(SbmParams::new(1, 1.0, 1.0).is_err());
        assert!(SbmParams::new(10, 11.0, 1.0).is_err());
        assert!(SbmParams::new(10, 1.0, 10.5).is_err());
        assert!(SbmParams::new(10, -1.0, 0.0).is_err());
        assert!(SbmParams::new(10, 10.0, 0.0).is_ok());
    }

    #[test]
    fn spins_shape_and_determinism() {
        assert_eq!(sample_spins(2, 1).len(), 2);
        let s = sample_spins(4, 42);
        assert_eq!(s, sample_spins(4, 42));
        assert!(s.as_slice().iter().all(|&x| x == 1 || x == -1));
        assert!(SpinAssignment::new(vec![1, 0]).is_err());
    }

    #[test]
    fn complete_and_empty_graphs() {
        let n = 7;
        let spins = sample_spins(n, 3);
        for sampler in [EdgeSampler::PairScan, EdgeSampler::GeometricSkip] {
            let g = sample_graph_with(&SbmParams::new(n, n as f64, n as f64).unwrap(), &spins, 1, sampler).unwrap();
            assert_eq!(g, Graph::complete(n));
            let g = sample_graph_with(&SbmParams::new(n, 0.0, 0.0).unwrap(), &spins, 1, sampler).unwrap();
            assert_eq!(g.m(), 0);
        }
    }

    #[test]
    fn graph_rejects_bad_inputs() {
        let spins = sample_spins(5, 0);
        let p = SbmParams { n: 5, a: 6.0, b: 1.0 };
        assert!(matches!(sample_graph(&p, &spins, 0), Err(Error::InvalidParameters(_))));
        let p = SbmParams::new(6, 1.0, 1.0).unwrap();
        assert!(matches!(sample_graph(&p, &spins, 0), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn mean_matrix_small_cases() {
        let p = SbmParams::new(2, 1.0, 0.0).unwrap();
        let s = SpinAssignment::new(vec![1, 1]).unwrap();
        let m = mean_matrix(&p, &s).unwrap();
        assert_eq!(m.entry(0, 1), 0.5);
        assert_eq!(m.entry(0, 0), 0.0);

        let n = 5;
        let p = SbmParams::new(n, 3.0, 1.0).unwrap();
        let s = SpinAssignment::new(vec![1; n]).unwrap();
        let m = mean_matrix(&p, &s).unwrap();
        let mut y = vec![0.0; n];
        m.apply(&vec![1.0; n], &mut y);
        for yi in y {
            assert!((yi - (n as f64 - 1.0) * 3.0 / n as f64).abs() < 1e-14);
        }
    }

    #[test]
    fn mean_matrix_entries_by_hand() {
        for n in 2..=6 {
            for pattern in [vec![1i8; n], (0..n).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect()] {
                let p = SbmParams::new(n, 1.5, 0.5).unwrap();
                let s = SpinAssignment::new(pattern).unwrap();
                let m = mean_matrix(&p, &s).unwrap();
                let dense = m.to_dense();
                for i in 0..n {
                    for j in 0..n {
                        let expect = if i == j {
                            0.0
                        } else if s.get(i) == s.get(j) {
                            1.5 / n as f64
                        } else {
                            0.5 / n as f64
                        };
                        assert!((dense[i][j] - expect).abs() < 1e-15);
                    }
                }
            }
        }
    }
}
