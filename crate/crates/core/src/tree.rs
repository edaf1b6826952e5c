//! The two-type Poisson branching process that approximates graph neighborhoods,
//! its martingales, and Monte Carlo estimates of the limiting spin-weighted
//! martingale.
//!
//! Generation `t` has `V+_t ~ Poi((a/2) V+_{t-1} + (b/2) V-_{t-1})` and
//! `V-_t ~ Poi((a/2) V-_{t-1} + (b/2) V+_{t-1})`, independent given the past,
//! started from one `+` individual. `M_t = alpha^-t (V+_t + V-_t)` and
//! `Delta_t = beta^-t (V+_t - V-_t)` are martingales.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::graph::{bfs_ball_with, neighborhood_stats, BallScratch, Graph};
use crate::par;
use crate::rng;
use crate::sbm::{DerivedParams, SpinAssignment};
use crate::stats;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TreeTrajectory {
    pub v_plus: Vec<u64>,
    pub v_minus: Vec<u64>,
}

impl TreeTrajectory {
    pub fn depth(&self) -> usize {
        self.v_plus.len() - 1
    }

    pub fn population(&self, t: usize) -> u64 {
        self.v_plus[t] + self.v_minus[t]
    }
}

fn poisson<R: Rng>(mean: f64, r: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("finite positive mean").sample(r) as u64
}

fn check_rates(a: f64, b: f64) -> Result<()> {
    if !(a.is_finite() && b.is_finite() && a >= 0.0 && b >= 0.0) {
        return Err(Error::InvalidParameters(format!("rates must be finite and >= 0 (a = {a}, b = {b})")));
    }
    Ok(())
}

fn simulate_with<R: Rng>(a: f64, b: f64, depth: usize, r: &mut R) -> TreeTrajectory {
    let mut v_plus = Vec::with_capacity(depth + 1);
    let mut v_minus = Vec::with_capacity(depth + 1);
    v_plus.push(1u64);
    v_minus.push(0u64);
    for t in 1..=depth {
        let (p, m) = (v_plus[t - 1] as f64, v_minus[t - 1] as f64);
        v_plus.push(poisson(0.5 * a * p + 0.5 * b * m, r));
        v_minus.push(poisson(0.5 * a * m + 0.5 * b * p, r));
    }
    TreeTrajectory { v_plus, v_minus }
}

pub fn simulate_tree(a: f64, b: f64, depth: usize, seed: u64) -> Result<TreeTrajectory> {
    check_rates(a, b)?;
    let mut r = rng::stream_rng(rng::derive(seed, "tree"), 0);
    Ok(simulate_with(a, b, depth, &mut r))
}

/// `trials` independent trajectories; trial `k` draws from its own stream.
pub fn simulate_many(a: f64, b: f64, depth: usize, trials: usize, seed: u64) -> Result<Vec<TreeTrajectory>> {
    check_rates(a, b)?;
    let key = rng::derive(seed, "tree-trials");
    Ok(par::map_range(trials, |k| {
        simulate_with(a, b, depth, &mut rng::stream_rng(key, k as u64))
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartingaleTrack {
    pub m: Vec<f64>,
    pub delta: Vec<f64>,
}

pub fn martingale_track(tr: &TreeTrajectory, alpha: f64, beta: f64) -> Result<MartingaleTrack> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameters(format!("alpha must be > 0, got {alpha}")));
    }
    if beta == 0.0 || !beta.is_finite() {
        return Err(Error::InvalidParameters("beta = 0: Delta_t is undefined".into()));
    }
    let mut m = Vec::with_capacity(tr.v_plus.len());
    let mut delta = Vec::with_capacity(tr.v_plus.len());
    for (t, (&p, &q)) in tr.v_plus.iter().zip(&tr.v_minus).enumerate() {
        m.push((p + q) as f64 / alpha.powi(t as i32));
        delta.push((p as f64 - q as f64) / beta.powi(t as i32));
    }
    Ok(MartingaleTrack { m, delta })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceFormulas {
    /// `(1 - alpha^-t) / (alpha - 1)`
    pub var_m: f64,
    /// `(1 - (alpha/beta^2)^t) / (beta^2/alpha - 1)`, or `t` when `beta^2 = alpha`.
    pub var_delta: f64,
    /// `beta^2 <= alpha`: the variance of `Delta_t` grows without bound.
    pub delta_divergent: bool,
}

pub fn variance_formulas(alpha: f64, beta: f64, t: usize) -> Result<VarianceFormulas> {
    if !(alpha > 1.0) {
        return Err(Error::InvalidParameters(format!("variance formulas need alpha > 1, got {alpha}")));
    }
    if beta == 0.0 {
        return Err(Error::InvalidParameters("beta = 0: Delta_t is undefined".into()));
    }
    let ti = t as i32;
    let var_m = (1.0 - alpha.powi(-ti)) / (alpha - 1.0);
    let ratio = alpha / (beta * beta);
    let var_delta = if (ratio - 1.0).abs() < 1e-15 {
        t as f64
    } else {
        (1.0 - ratio.powi(ti)) / (1.0 / ratio - 1.0)
    };
    Ok(VarianceFormulas {
        var_m,
        var_delta,
        delta_divergent: beta * beta <= alpha,
    })
}

/// `1 / (beta^2/alpha - 1)`, the variance of the limit; `None` when it diverges.
pub fn limit_delta_variance(alpha: f64, beta: f64) -> Option<f64> {
    let snr = beta * beta / alpha;
    (snr > 1.0).then(|| 1.0 / (snr - 1.0))
}

/// Monte Carlo sample of `Delta_depth`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaSample {
    pub trials: usize,
    pub depth: usize,
    pub values: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
    /// Sorted copy of `values`; the empirical CDF.
    #[serde(skip)]
    pub sorted: Vec<f64>,
    /// Closed-form `Var(Delta_depth)` when the rates are known.
    pub theory_variance: Option<f64>,
}

pub const QUANTILE_LEVELS: [(&str, f64); 9] = [
    ("p01", 0.01),
    ("p05", 0.05),
    ("p10", 0.10),
    ("p25", 0.25),
    ("p50", 0.50),
    ("p75", 0.75),
    ("p90", 0.90),
    ("p95", 0.95),
    ("p99", 0.99),
];

impl DeltaSample {
    pub fn from_values(depth: usize, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameters("empty sample".into()));
        }
        Ok(DeltaSample {
            trials: values.len(),
            depth,
            mean: stats::mean(&values),
            variance: stats::variance(&values),
            sorted: stats::sorted(&values),
            values,
            theory_variance: None,
        })
    }

    /// `P(Delta >= x)` under the empirical distribution.
    pub fn tail(&self, x: f64) -> f64 {
        (self.trials - stats::count_below(&self.sorted, x)) as f64 / self.trials as f64
    }

    /// `P(-Delta >= x) = P(Delta <= -x)`.
    pub fn neg_tail(&self, x: f64) -> f64 {
        stats::count_at_most(&self.sorted, -x) as f64 / self.trials as f64
    }

    pub fn second_moment(&self) -> f64 {
        stats::sum(self.values.iter().map(|v| v * v)) / self.trials as f64
    }

    pub fn quantile(&self, q: f64) -> f64 {
        stats::quantile_sorted(&self.sorted, q)
    }

    /// `|variance - theory| / theory`; absolute difference when theory is 0.
    pub fn variance_rel_err(&self) -> Option<f64> {
        self.theory_variance.map(|th| {
            let diff = (self.variance - th).abs();
            if th == 0.0 {
                diff
            } else {
                diff / th
            }
        })
    }

    pub fn to_json(&self) -> Value {
        let finite = |x: Option<f64>| x.filter(|v| v.is_finite()).map_or(Value::Null, |v| json!(v));
        let quantiles: serde_json::Map<String, Value> = QUANTILE_LEVELS
            .iter()
            .map(|&(name, q)| (name.to_string(), finite(Some(self.quantile(q)))))
            .collect();
        json!({
            "trials": self.trials,
            "depth": self.depth,
            "mean": finite(Some(self.mean)),
            "variance": finite(Some(self.variance)),
            "quantiles": quantiles,
            "theory_variance": finite(self.theory_variance),
            "variance_rel_err": finite(self.variance_rel_err()),
        })
    }
}

pub fn monte_carlo_delta(a: f64, b: f64, depth: usize, trials: usize, seed: u64) -> Result<DeltaSample> {
    if trials == 0 {
        return Err(Error::InvalidParameters("need at least one trial".into()));
    }
    let d = DerivedParams::from_rates(a, b)?;
    let paths = simulate_many(a, b, depth, trials, seed)?;
    delta_sample_from(&paths, &d, depth)
}

/// `Delta_depth` from pre-simulated trajectories.
pub fn delta_sample_from(paths: &[TreeTrajectory], d: &DerivedParams, depth: usize) -> Result<DeltaSample> {
    let values = paths
        .iter()
        .map(|tr| martingale_track(tr, d.alpha, d.beta).map(|m| m.delta[depth]))
        .collect::<Result<Vec<_>>>()?;
    let mut sample = DeltaSample::from_values(depth, values)?;
    sample.theory_variance = if depth == 0 {
        Some(0.0)
    } else if d.alpha > 1.0 {
        Some(variance_formulas(d.alpha, d.beta, depth)?.var_delta)
    } else {
        None
    };
    Ok(sample)
}

/// Per-generation moments of both martingales with standard errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentRow {
    pub t: usize,
    pub mean_m: f64,
    pub se_mean_m: f64,
    pub var_m: f64,
    pub se_var_m: f64,
    pub mean_delta: f64,
    pub se_mean_delta: f64,
    pub var_delta: f64,
    pub se_var_delta: f64,
}

pub fn martingale_moments(paths: &[TreeTrajectory], alpha: f64, beta: f64) -> Result<Vec<MomentRow>> {
    let tracks = paths
        .iter()
        .map(|tr| martingale_track(tr, alpha, beta))
        .collect::<Result<Vec<_>>>()?;
    let depth = paths.first().map_or(0, TreeTrajectory::depth);
    let n = tracks.len() as f64;
    Ok((0..=depth)
        .map(|t| {
            let m: Vec<f64> = tracks.iter().map(|k| k.m[t]).collect();
            let dl: Vec<f64> = tracks.iter().map(|k| k.delta[t]).collect();
            let (vm, vd) = (stats::variance(&m), stats::variance(&dl));
            MomentRow {
                t,
                mean_m: stats::mean(&m),
                se_mean_m: (vm / n).sqrt(),
                var_m: vm,
                se_var_m: stats::variance_standard_error(&m),
                mean_delta: stats::mean(&dl),
                se_mean_delta: (vd / n).sqrt(),
                var_delta: vd,
                se_var_delta: stats::variance_standard_error(&dl),
            }
        })
        .collect())
}

/// `1/2 (P(Delta >= t) - P(-Delta >= t))`, the limiting overlap at threshold `t`.
pub fn predict_overlap(sample: &DeltaSample, t: f64) -> f64 {
    0.5 * (sample.tail(t) - sample.neg_tail(t))
}

/// `sigma_i beta^-ell D_ell(i)` for every node.
pub fn graph_delta_values(g: &Graph, spins: &SpinAssignment, ell: usize, beta: f64) -> Result<Vec<f64>> {
    if beta == 0.0 {
        return Err(Error::InvalidParameters("beta = 0: Delta_t is undefined".into()));
    }
    spins.check_len(g.n())?;
    let scale = beta.powi(-(ell as i32));
    Ok(par::map_range_with(
        g.n(),
        || BallScratch::new(g.n()),
        |scratch, i| {
            let ball = bfs_ball_with(g, i, ell, scratch);
            let st = neighborhood_stats(&ball, spins);
            spins.get(i) as f64 * st.d[ell] as f64 * scale
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingReport {
    pub ell: usize,
    pub ks: f64,
    /// `(1/n) sum beta^-2ell D_ell(i)^2`
    pub graph_second_moment: f64,
    pub sample_second_moment: f64,
    pub second_moment_rel_err: f64,
}

/// Compares the graph's normalized layer spin sums at depth `ell` with a tree
/// sample of `Delta_ell`.
pub fn coupling_diagnostic(
    g: &Graph,
    spins: &SpinAssignment,
    ell: usize,
    d: &DerivedParams,
    sample: &DeltaSample,
) -> Result<CouplingReport> {
    if sample.depth != ell {
        return Err(Error::InvalidParameters(format!(
            "sample depth {} does not match ell = {ell}",
            sample.depth
        )));
    }
    let values = graph_delta_values(g, spins, ell, d.beta)?;
    let graph_second_moment = stats::sum(values.iter().map(|v| v * v)) / values.len() as f64;
    let sample_second_moment = sample.second_moment();
    Ok(CouplingReport {
        ell,
        ks: stats::ks_two_sample(&values, &sample.values),
        graph_second_moment,
        sample_second_moment,
        second_moment_rel_err: (graph_second_moment - sample_second_moment).abs() / sample_second_moment,
    })
}
