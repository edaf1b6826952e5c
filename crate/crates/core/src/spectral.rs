//! Block subspace iteration for extremal eigenpairs of symmetric operators, plus
//! the alignment and projected-norm diagnostics reported for path-count matrices.

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::paths::PathCountMatrix;
use crate::rng;
use crate::sbm::SpinAssignment;
use crate::stats::{dot, norm};

/// A real symmetric linear map `y = A x`.
pub trait SymmetricOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);

    fn apply_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.apply(x, &mut y);
        y
    }
}

/// Row-major dense symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSymmetric {
    rows: Vec<Vec<f64>>,
}

impl DenseSymmetric {
    pub fn new(rows: Vec<Vec<f64>>) -> Self {
        DenseSymmetric { rows }
    }

    pub fn identity(n: usize) -> Self {
        DenseSymmetric::new(
            (0..n)
                .map(|i| (0..n).map(|j| (i == j) as u8 as f64).collect())
                .collect(),
        )
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

impl SymmetricOperator for DenseSymmetric {
    fn dim(&self) -> usize {
        self.rows.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (yi, row) in y.iter_mut().zip(&self.rows) {
            *yi = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenPair {
    pub value: f64,
    /// Unit norm; sign fixed so the largest-magnitude entry is positive.
    pub vector: Vec<f64>,
    /// `||A x - value x||_2`
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Block size; defaults to `k + 2`.
    pub block: Option<usize>,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol: 1e-8,
            max_iter: 5000,
            seed: 0,
            block: None,
        }
    }
}

/// Cyclic Jacobi on a small dense symmetric matrix. Returns eigenvalues and the
/// eigenvectors as columns `vecs[row][col]`, unsorted.
pub fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let p = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..p)
        .map(|i| (0..p).map(|j| (i == j) as u8 as f64).collect())
        .collect();
    for _sweep in 0..100 {
        let off: f64 = (0..p)
            .flat_map(|i| (0..p).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        let scale: f64 = (0..p).map(|i| m[i][i] * m[i][i]).sum::<f64>() + off;
        if off <= 1e-30 * scale.max(1e-300) {
            break;
        }
        for r in 0..p {
            for s in r + 1..p {
                if m[r][s].abs() <= 1e-300 {
                    continue;
                }
                let theta = (m[s][s] - m[r][r]) / (2.0 * m[r][s]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..p {
                    let (mkr, mks) = (m[k][r], m[k][s]);
                    m[k][r] = c * mkr - sn * mks;
                    m[k][s] = sn * mkr + c * mks;
                }
                for k in 0..p {
                    let (mrk, msk) = (m[r][k], m[s][k]);
                    m[r][k] = c * mrk - sn * msk;
                    m[s][k] = sn * mrk + c * msk;
                }
                for row in v.iter_mut() {
                    let (vr, vs) = (row[r], row[s]);
                    row[r] = c * vr - sn * vs;
                    row[s] = sn * vr + c * vs;
                }
            }
        }
    }
    ((0..p).map(|i| m[i][i]).collect(), v)
}

fn random_unit_column(n: usize, seed: u64, index: u64) -> Vec<f64> {
    // Centered uniforms are enough to start an iteration.
    (0..n)
        .map(|i| rng::unit_f64(rng::hash3(seed, index, i as u64)) - 0.5)
        .collect()
}

/// Orthonormalize columns in place (Gram-Schmidt, two passes). Columns that
/// collapse numerically are replaced by fresh deterministic random vectors.
fn orthonormalize(cols: &mut [Vec<f64>], seed: u64, refill_counter: &mut u64) {
    for c in 0..cols.len() {
        let mut attempts = 0;
        loop {
            let before = norm(&cols[c]).max(1e-300);
            for _pass in 0..2 {
                for prev in 0..c {
                    let (head, tail) = cols.split_at_mut(c);
                    let q = &head[prev];
                    let col = &mut tail[0];
                    let h = dot(q, col);
                    col.iter_mut().zip(q).for_each(|(x, qi)| *x -= h * qi);
                }
            }
            let after = norm(&cols[c]);
            if after > 1e-10 * before && after > 1e-280 {
                cols[c].iter_mut().for_each(|x| *x /= after);
                break;
            }
            attempts += 1;
            assert!(attempts < 50, "could not complete an orthonormal basis");
            *refill_counter += 1;
            cols[c] = random_unit_column(cols[c].len(), seed, 1_000_000 + *refill_counter);
        }
    }
}

fn normalize_sign(v: &mut [f64]) {
    let mut best = 0usize;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn residual<O: SymmetricOperator + ?Sized>(op: &O, x: &[f64], value: f64) -> f64 {
    let y = op.apply_vec(x);
    norm(&y.iter().zip(x).map(|(a, b)| a - value * b).collect::<Vec<_>>())
}

/// The `k` eigenpairs of largest magnitude, sorted by `|value|` descending.
pub fn top_eigenpairs<O: SymmetricOperator + ?Sized>(
    op: &O,
    k: usize,
    opts: &EigenOptions,
) -> Result<Vec<EigenPair>> {
    let n = op.dim();
    if k == 0 || k > n {
        return Err(Error::InvalidParameters(format!("need 1 <= k <= n, got k = {k}, n = {n}")));
    }
    let p = opts.block.unwrap_or(k + 2).max(k).min(n);
    let seed = rng::derive(opts.seed, "eigen");
    let mut refills = 0u64;

    let mut x: Vec<Vec<f64>> = (0..p).map(|c| random_unit_column(n, seed, c as u64)).collect();
    orthonormalize(&mut x, seed, &mut refills);
    let mut best_residuals = vec![f64::INFINITY; k];

    // The iterate takes plain power steps. Ritz pairs come from span{X, AX},
    // which stays invariant even when the block boundary cuts a +c/-c pair.
    for iter in 1..=opts.max_iter {
        let y: Vec<Vec<f64>> = x.iter().map(|col| op.apply_vec(col)).collect();
        let mut q: Vec<Vec<f64>> = x.iter().chain(&y).cloned().collect();
        q.truncate(n);
        orthonormalize(&mut q, seed, &mut refills);
        let z: Vec<Vec<f64>> = q.iter().map(|col| op.apply_vec(col)).collect();
        let m = q.len();
        let h: Vec<Vec<f64>> = (0..m)
            .map(|r| (0..m).map(|c| 0.5 * (dot(&q[r], &z[c]) + dot(&q[c], &z[r]))).collect())
            .collect();
        let (theta, w) = jacobi_eigen(&h);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&i, &j| {
            theta[j]
                .abs()
                .total_cmp(&theta[i].abs())
                .then(theta[j].total_cmp(&theta[i]))
        });
        order.truncate(p);
        let combine = |basis: &[Vec<f64>], col: usize| -> Vec<f64> {
            let mut out = vec![0.0; n];
            for (b, row) in basis.iter().zip(&w) {
                let coef = row[col];
                out.iter_mut().zip(b).for_each(|(o, bi)| *o += coef * bi);
            }
            out
        };
        let ritz_x: Vec<Vec<f64>> = order.iter().map(|&c| combine(&q, c)).collect();
        let ritz_y: Vec<Vec<f64>> = order.iter().map(|&c| combine(&z, c)).collect();
        let values: Vec<f64> = order.iter().map(|&c| theta[c]).collect();

        // One pair past k must settle too; otherwise a converged lower pair
        // can be reported ahead of a larger one that is still forming.
        let watch = (k + 1).min(p);
        let residuals: Vec<f64> = (0..watch)
            .map(|c| {
                norm(
                    &ritz_y[c]
                        .iter()
                        .zip(&ritz_x[c])
                        .map(|(a, b)| a - values[c] * b)
                        .collect::<Vec<_>>(),
                )
            })
            .collect();
        let threshold = opts.tol * values[0].abs().max(1.0);
        if residuals[..k].iter().sum::<f64>() < best_residuals.iter().sum::<f64>() {
            best_residuals = residuals[..k].to_vec();
        }
        if residuals.iter().all(|&r| r <= threshold) {
            log::debug!("subspace iteration converged after {iter} iterations");
            return Ok((0..k)
                .map(|c| {
                    let mut vector = ritz_x[c].clone();
                    let len = norm(&vector);
                    vector.iter_mut().for_each(|v| *v /= len);
                    normalize_sign(&mut vector);
                    EigenPair {
                        value: values[c],
                        vector,
                        residual: residuals[c],
                    }
                })
                .collect());
        }
        x = y;
        orthonormalize(&mut x, seed, &mut refills);
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        residuals: best_residuals,
    })
}

/// `|<u, v>| / (|u| |v|)`, clamped to [0, 1].
pub fn alignment(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch { expected: u.len(), got: v.len() });
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((dot(u, v).abs() / (nu * nv)).min(1.0))
}

/// `P B B P` where `P` projects onto the orthogonal complement of `basis`.
struct ProjectedSquare<'a, O: SymmetricOperator + ?Sized> {
    op: &'a O,
    basis: Vec<Vec<f64>>,
}

impl<O: SymmetricOperator + ?Sized> ProjectedSquare<'_, O> {
    fn project(&self, v: &mut [f64]) {
        for q in &self.basis {
            let h = dot(q, v);
            v.iter_mut().zip(q).for_each(|(x, qi)| *x -= h * qi);
        }
    }
}

impl<O: SymmetricOperator + ?Sized> SymmetricOperator for ProjectedSquare<'_, O> {
    fn dim(&self) -> usize {
        self.op.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let mut z = x.to_vec();
        self.project(&mut z);
        let w = self.op.apply_vec(&z);
        self.op.apply(&w, y);
        self.project(y);
    }
}

/// `sup ||B x||` over unit `x` orthogonal to `v1` and `v2`, via the dominant
/// eigenvalue of `P B^2 P`.
pub fn ramanujan_sup<O: SymmetricOperator + ?Sized>(
    op: &O,
    v1: &[f64],
    v2: &[f64],
    opts: &EigenOptions,
) -> Result<f64> {
    let n = op.dim();
    for v in [v1, v2] {
        if v.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: v.len() });
        }
    }
    let n1 = norm(v1);
    let n2 = norm(v2);
    if n1 == 0.0 || n2 == 0.0 {
        return Err(Error::ZeroVector);
    }
    let q1: Vec<f64> = v1.iter().map(|x| x / n1).collect();
    let h = dot(&q1, v2);
    let rest: Vec<f64> = v2.iter().zip(&q1).map(|(x, q)| x - h * q).collect();
    let rest_norm = norm(&rest);
    let mut basis = vec![q1];
    if rest_norm > 1e-10 * n2 {
        basis.push(rest.iter().map(|x| x / rest_norm).collect());
    } else {
        log::warn!("projection vectors are colinear; projecting out a single direction");
    }
    if basis.len() >= n {
        return Ok(0.0);
    }
    let projected = ProjectedSquare { op, basis };
    let top = top_eigenpairs(&projected, 1, opts)?;
    Ok(top[0].value.max(0.0).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralOptions {
    /// Number of eigenpairs to compute (at least 2 for detection).
    pub k: usize,
    pub eigen: EigenOptions,
    /// Whether to estimate the projected norm when spins are available.
    pub ramanujan: bool,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        SpectralOptions {
            k: 3,
            eigen: EigenOptions::default(),
            ramanujan: true,
        }
    }
}

/// Relative tolerance under which two eigenvalues are treated as equal.
pub const DEGENERACY_RTOL: f64 = 1e-6;

fn nearly_equal(x: f64, y: f64) -> bool {
    (x - y).abs() <= DEGENERACY_RTOL * x.abs().max(y.abs()).max(1e-300)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    /// Sorted by `|value|` descending.
    pub pairs: Vec<EigenPair>,
    /// Index into `pairs` of the eigenvector used for detection: the second
    /// largest eigenvalue by signed value.
    pub detection_index: usize,
    /// alignment of the leading eigenvector with `B e`
    pub align_v1_be: Option<f64>,
    /// alignment of the detection eigenvector with `B sigma` (needs spins)
    pub align_v2_bsigma: Option<f64>,
    pub ramanujan_sup: Option<f64>,
    /// `|lambda_2| / |lambda_1|`
    pub ratio_l2_l1: f64,
    /// `|lambda_3| / sqrt(|lambda_1|)`
    pub ratio_l3_sqrt_l1: f64,
    /// Adjacent leading eigenvalues agree within [`DEGENERACY_RTOL`].
    pub degenerate: bool,
    /// The detection eigenvalue is negative or the leading pair was not
    /// separable, so the run lies outside the regime the method targets.
    pub experimental: bool,
}

impl SpectrumReport {
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.value).collect()
    }

    pub fn value(&self, idx: usize) -> f64 {
        self.pairs.get(idx).map_or(f64::NAN, |p| p.value)
    }

    pub fn detection_vector(&self) -> &[f64] {
        &self.pairs[self.detection_index].vector
    }

    /// `|lambda_3| / (n^(1/4) sqrt(|lambda_1|))`.
    pub fn ramanujan_ratio(&self, n: usize) -> f64 {
        self.ratio_l3_sqrt_l1 / (n as f64).powf(0.25)
    }

    /// JSON with exactly the documented field names. Non-finite numbers become
    /// `null` and are listed under `nonfinite`.
    pub fn to_json(&self) -> Value {
        let mut nonfinite = Vec::new();
        let mut num = |name: &str, x: Option<f64>| -> Value {
            match x {
                Some(v) if v.is_finite() => json!(v),
                Some(_) => {
                    nonfinite.push(name.to_string());
                    Value::Null
                }
                None => Value::Null,
            }
        };
        let eigenvalues: Vec<Value> = self.pairs.iter().map(|p| num("eigenvalues", Some(p.value))).collect();
        let residuals: Vec<Value> = self.pairs.iter().map(|p| num("residuals", Some(p.residual))).collect();
        let mut obj = Map::new();
        obj.insert("eigenvalues".into(), Value::Array(eigenvalues));
        obj.insert("residuals".into(), Value::Array(residuals));
        obj.insert("align_v1_Be".into(), num("align_v1_Be", self.align_v1_be));
        obj.insert("align_v2_Bsigma".into(), num("align_v2_Bsigma", self.align_v2_bsigma));
        obj.insert("ramanujan_sup".into(), num("ramanujan_sup", self.ramanujan_sup));
        obj.insert("ratio_l2_l1".into(), num("ratio_l2_l1", Some(self.ratio_l2_l1)));
        obj.insert("ratio_l3_sqrt_l1".into(), num("ratio_l3_sqrt_l1", Some(self.ratio_l3_sqrt_l1)));
        obj.insert("degenerate".into(), json!(self.degenerate));
        nonfinite.dedup();
        if !nonfinite.is_empty() {
            obj.insert("nonfinite".into(), json!(nonfinite));
        }
        Value::Object(obj)
    }
}

/// Rotate two eigenvectors sharing (numerically) one eigenvalue so that the first
/// is the projection of `target` onto their span.
fn align_degenerate_pair<O: SymmetricOperator + ?Sized>(op: &O, pairs: &mut [EigenPair], target: &[f64]) {
    let (c1, c2) = (dot(&pairs[0].vector, target), dot(&pairs[1].vector, target));
    let r = (c1 * c1 + c2 * c2).sqrt();
    if r <= 1e-12 * norm(target).max(1e-300) {
        return;
    }
    let (c, s) = (c1 / r, c2 / r);
    let (u, v) = (pairs[0].vector.clone(), pairs[1].vector.clone());
    let mut first: Vec<f64> = u.iter().zip(&v).map(|(a, b)| c * a + s * b).collect();
    let mut second: Vec<f64> = u.iter().zip(&v).map(|(a, b)| -s * a + c * b).collect();
    normalize_sign(&mut first);
    normalize_sign(&mut second);
    // Both share the leading Rayleigh quotient up to the degeneracy tolerance.
    let (l1, l2) = (pairs[0].value, pairs[1].value);
    pairs[0].residual = residual(op, &first, l1);
    pairs[1].residual = residual(op, &second, l2);
    pairs[0].vector = first;
    pairs[1].vector = second;
}

/// Index of the second largest eigenvalue by signed value. Numerically equal
/// values keep their magnitude order.
fn second_largest_signed(pairs: &[EigenPair]) -> usize {
    let argmax = |skip: Option<usize>| {
        let mut best: Option<usize> = None;
        for (i, p) in pairs.iter().enumerate() {
            if Some(i) == skip {
                continue;
            }
            match best {
                Some(b) if !(p.value > pairs[b].value && !nearly_equal(p.value, pairs[b].value)) => {}
                _ => best = Some(i),
            }
        }
        best.expect("at least two pairs")
    };
    let first = argmax(None);
    argmax(Some(first))
}

pub fn spectrum_report(
    b: &PathCountMatrix,
    spins: Option<&SpinAssignment>,
    opts: &SpectralOptions,
) -> Result<SpectrumReport> {
    let n = b.n();
    if let Some(s) = spins {
        s.check_len(n)?;
    }
    let k = opts.k.max(2).min(n);
    let mut pairs = top_eigenpairs(b, k, &opts.eigen)?;

    let be = b.apply_vec(&vec![1.0; n]);
    let bsigma = spins.map(|s| b.apply_vec(&s.to_f64()));

    let degenerate_12 = pairs.len() >= 2 && nearly_equal(pairs[0].value, pairs[1].value);
    let degenerate_23 = pairs.len() >= 3 && nearly_equal(pairs[1].value, pairs[2].value);
    if degenerate_12 {
        align_degenerate_pair(b, &mut pairs, &be);
    }

    let detection_index = second_largest_signed(&pairs);

    let align_v1_be = alignment(&pairs[0].vector, &be).ok();
    let align_v2_bsigma = bsigma
        .as_ref()
        .and_then(|bs| alignment(&pairs[detection_index].vector, bs).ok());

    let ramanujan_sup = match (&bsigma, opts.ramanujan) {
        (Some(bs), true) => match ramanujan_sup(b, &be, bs, &opts.eigen) {
            Ok(v) => Some(v),
            Err(Error::ZeroVector) => None,
            Err(e) => return Err(e),
        },
        _ => None,
    };

    let l1 = pairs[0].value.abs();
    let ratio_l2_l1 = pairs[1].value.abs() / l1;
    let ratio_l3_sqrt_l1 = pairs.get(2).map_or(f64::NAN, |p| p.value.abs() / l1.sqrt());
    let experimental = pairs[detection_index].value < 0.0;

    Ok(SpectrumReport {
        pairs,
        detection_index,
        align_v1_be,
        align_v2_bsigma,
        ramanujan_sup,
        ratio_l2_l1,
        ratio_l3_sqrt_l1,
        degenerate: degenerate_12 || degenerate_23,
        experimental,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::paths::{build_matrix, PathGuard};

    fn k3() -> DenseSymmetric {
        DenseSymmetric::new(vec![
            vec![0.0, 1.0, 1.0],
            vec![1.0, 0.0, 1.0],
            vec![1.0, 1.0, 0.0],
        ])
    }

    #[test]
    fn jacobi_diagonalizes() {
        let a = vec![vec![2.0, 1.0], vec![1.0, 2.0]];
        let (mut vals, _) = jacobi_eigen(&a);
        vals.sort_by(f64::total_cmp);
        assert!((vals[0] - 1.0).abs() < 1e-14 && (vals[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn k3_spectrum() {
        let pairs = top_eigenpairs(&k3(), 3, &EigenOptions::default()).unwrap();
        let vals: Vec<f64> = pairs.iter().map(|p| p.value).collect();
        assert!((vals[0] - 2.0).abs() < 1e-10);
        assert!((vals[1] + 1.0).abs() < 1e-10 && (vals[2] + 1.0).abs() < 1e-10);
        assert!(pairs[0].residual <= 1e-8);
        for p in &pairs {
            assert!((norm(&p.vector) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn identity_spectrum() {
        let pairs = top_eigenpairs(&DenseSymmetric::identity(6), 3, &EigenOptions::default()).unwrap();
        for p in &pairs {
            assert!((p.value - 1.0).abs() < 1e-12);
        }
        for i in 0..3 {
            for j in 0..i {
                assert!(dot(&pairs[i].vector, &pairs[j].vector).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn zero_operator_converges() {
        let zero = DenseSymmetric::new(vec![vec![0.0; 4]; 4]);
        let pairs = top_eigenpairs(&zero, 2, &EigenOptions::default()).unwrap();
        assert!(pairs.iter().all(|p| p.value == 0.0));
    }

    #[test]
    fn bad_k_and_nonconvergence() {
        assert!(top_eigenpairs(&k3(), 4, &EigenOptions::default()).is_err());
        // Path graph with n = 40: the block cannot converge in two sweeps.
        let b = build_matrix(&Graph::path(40), 1, &PathGuard::default()).unwrap();
        let opts = EigenOptions { max_iter: 2, block: Some(2), ..Default::default() };
        match top_eigenpairs(&b, 1, &opts) {
            Err(Error::NonConvergence { iterations: 2, residuals }) => assert_eq!(residuals.len(), 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn alignment_examples() {
        let v = [1.0, 2.0, -3.0];
        assert!((alignment(&v, &v).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(alignment(&[1.0, 0.0], &[0.0, 5.0]).unwrap(), 0.0);
        let w: Vec<f64> = v.iter().map(|x| -2.0 * x).collect();
        assert!((alignment(&w, &v).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(alignment(&[0.0, 0.0], &[1.0, 0.0]), Err(Error::ZeroVector)));
    }

    #[test]
    fn ramanujan_on_identity() {
        let id = DenseSymmetric::identity(5);
        let v1 = [1.0, 2.0, 0.0, 0.0, 1.0];
        let v2 = [0.0, 1.0, 1.0, -1.0, 0.0];
        let r = ramanujan_sup(&id, &v1, &v2, &EigenOptions::default()).unwrap();
        assert!((r - 1.0).abs() < 1e-9);
        // colinear inputs fall back to a single projected direction
        let r = ramanujan_sup(&id, &v1, &v1, &EigenOptions::default()).unwrap();
        assert!((r - 1.0).abs() < 1e-9);
    }

    #[test]
    fn k3_report() {
        let g = Graph::complete(3);
        let b = build_matrix(&g, 1, &PathGuard::default()).unwrap();
        let r = spectrum_report(&b, None, &SpectralOptions::default()).unwrap();
        assert!((r.pairs[0].value - 2.0).abs() < 1e-9);
        assert!((r.align_v1_be.unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(r.align_v2_bsigma, None);
        assert!(r.degenerate); // -1 is a double eigenvalue
        let js = r.to_json();
        let keys: Vec<&str> = js.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(
            keys.iter().copied().collect::<std::collections::BTreeSet<_>>(),
            [
                "eigenvalues", "residuals", "align_v1_Be", "align_v2_Bsigma", "ramanujan_sup",
                "ratio_l2_l1", "ratio_l3_sqrt_l1", "degenerate"
            ]
            .into_iter()
            .collect()
        );
    }

    #[test]
    fn two_cliques_are_flagged_and_split() {
        let mut edges = Vec::new();
        for base in [0, 5] {
            for i in 0..5 {
                for j in i + 1..5 {
                    edges.push((base + i, base + j));
                }
            }
        }
        let g = Graph::from_edges(10, edges).unwrap();
        let b = build_matrix(&g, 1, &PathGuard::default()).unwrap();
        let r = spectrum_report(&b, None, &SpectralOptions::default()).unwrap();
        assert!(r.degenerate);
        assert!((r.pairs[0].value - 4.0).abs() < 1e-9 && (r.pairs[1].value - 4.0).abs() < 1e-9);
        let v2 = r.detection_vector();
        assert!(v2[..5].iter().all(|&x| x > 0.0) != v2[5..].iter().all(|&x| x > 0.0));
    }
}
