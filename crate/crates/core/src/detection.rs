//! End-to-end detection: path length choice, second-eigenvector thresholding,
//! overlap scoring, permutation nulls and multi-seed experiments.

use std::io::Write;
use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::par;
use crate::paths::{build_matrix, PathGuard};
use crate::rng;
use crate::sbm::{derive_params, sample_graph, sample_spins, SbmParams, SpinAssignment};
use crate::spectral::{spectrum_report, SpectralOptions, SpectrumReport};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathLengthMode {
    /// `floor(ln n / (4 ln alpha))`, at least 1.
    Theory,
    /// `floor(ln n / (2 ln alpha))`, at least 1.
    Practical,
    Fixed(usize),
}

pub fn choose_path_length(n: usize, alpha: f64, mode: PathLengthMode) -> Result<usize> {
    let divisor = match mode {
        PathLengthMode::Fixed(ell) => return Ok(ell),
        PathLengthMode::Theory => 4.0,
        PathLengthMode::Practical => 2.0,
    };
    if !(alpha > 1.0) {
        return Err(Error::InvalidParameters(format!(
            "path length selection needs alpha > 1, got {alpha}"
        )));
    }
    let raw = ((n as f64).ln() / (divisor * alpha.ln())).floor();
    if raw < 1.0 {
        log::warn!("n = {n} is too small for the {mode:?} path length at alpha = {alpha}; using 1");
    }
    Ok(raw.max(1.0) as usize)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpinEstimate {
    pub estimates: SpinAssignment,
    pub threshold_used: f64,
    /// Index (by magnitude order) of the eigenvector that was thresholded.
    pub source: usize,
}

/// `+1` where `x_i sqrt(n) >= t`, `-1` elsewhere.
pub fn estimate_spins(x: &[f64], t: f64, source: usize) -> SpinEstimate {
    let scale = (x.len() as f64).sqrt();
    let estimates = x
        .iter()
        .map(|&xi| if xi * scale >= t { 1 } else { -1 })
        .collect();
    SpinEstimate {
        estimates: SpinAssignment::new(estimates).expect("entries are +-1"),
        threshold_used: t,
        source,
    }
}

/// `(1/n) sum sigma_i hat_i`.
pub fn overlap(sigma: &SpinAssignment, hat: &SpinAssignment) -> Result<f64> {
    if sigma.len() != hat.len() {
        return Err(Error::DimensionMismatch { expected: sigma.len(), got: hat.len() });
    }
    if sigma.is_empty() {
        return Err(Error::InvalidParameters("overlap of empty assignments".into()));
    }
    let agree: i64 = sigma
        .as_slice()
        .iter()
        .zip(hat.as_slice())
        .map(|(&a, &b)| (a * b) as i64)
        .sum();
    Ok(agree as f64 / sigma.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdSweep {
    pub best_t: f64,
    pub best_abs_overlap: f64,
    /// `(t, overlap)` for every grid point, in grid order.
    pub curve: Vec<(f64, f64)>,
}

/// Evaluation-only: picks the grid threshold with the largest `|overlap|`
/// against the ground truth, preferring thresholds closer to zero on ties.
pub fn threshold_sweep(x: &[f64], sigma: &SpinAssignment, grid: &[f64]) -> Result<ThresholdSweep> {
    if grid.is_empty() {
        return Err(Error::InvalidParameters("threshold grid is empty".into()));
    }
    let mut curve = Vec::with_capacity(grid.len());
    let mut best: Option<(f64, f64)> = None;
    for &t in grid {
        let ov = overlap(sigma, &estimate_spins(x, t, 0).estimates)?;
        curve.push((t, ov));
        let better = match best {
            None => true,
            Some((bt, bo)) => ov.abs() > bo || (ov.abs() == bo && t.abs() < bt.abs()),
        };
        if better {
            best = Some((t, ov.abs()));
        }
    }
    let (best_t, best_abs_overlap) = best.expect("grid nonempty");
    Ok(ThresholdSweep { best_t, best_abs_overlap, curve })
}

/// Distribution of `|overlap|` between `hat` and random permutations of `sigma`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NullBand {
    pub resamples: usize,
    pub p99: f64,
    #[serde(skip)]
    pub sorted: Vec<f64>,
}

pub const NULL_QUANTILE: f64 = 0.99;

pub fn permutation_null(
    sigma: &SpinAssignment,
    hat: &SpinAssignment,
    resamples: usize,
    seed: u64,
) -> Result<NullBand> {
    if sigma.len() != hat.len() {
        return Err(Error::DimensionMismatch { expected: sigma.len(), got: hat.len() });
    }
    if resamples == 0 {
        return Err(Error::InvalidParameters("need at least one null resample".into()));
    }
    let key = rng::derive(seed, "null");
    let scores = par::map_range(resamples, |r| {
        let mut perm = sigma.as_slice().to_vec();
        perm.shuffle(&mut rng::stream_rng(key, r as u64));
        let perm = SpinAssignment::new(perm).expect("permutation of spins");
        overlap(&perm, hat).expect("equal lengths").abs()
    });
    let sorted = stats::sorted(&scores);
    Ok(NullBand {
        resamples,
        p99: stats::quantile_sorted(&sorted, NULL_QUANTILE),
        sorted,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectOptions {
    pub guard: PathGuard,
    pub spectral: SpectralOptions,
    /// Permutation-null resamples when ground truth is supplied; 0 disables.
    pub null_resamples: usize,
}

impl Default for DetectOptions {
    fn default() -> Self {
        DetectOptions {
            guard: PathGuard::default(),
            spectral: SpectralOptions::default(),
            null_resamples: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionTiming {
    pub build_ms: f64,
    pub eigen_ms: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionResult {
    pub estimate: SpinEstimate,
    pub overlap: Option<f64>,
    pub abs_overlap: Option<f64>,
    pub null: Option<NullBand>,
    #[serde(skip)]
    pub spectrum: SpectrumReport,
    pub ell: usize,
    pub nnz: usize,
    pub degenerate: bool,
    pub experimental: bool,
    pub timing: DetectionTiming,
}

impl DetectionResult {
    /// Whether `|overlap|` beats the 99th percentile of the permutation null.
    pub fn beats_null(&self) -> Option<bool> {
        Some(self.abs_overlap? > self.null.as_ref()?.p99)
    }
}

/// Build the path-count matrix, take the eigenvector of the second largest
/// eigenvalue, threshold it at `t`, and score against `sigma` when given.
pub fn detect(
    g: &Graph,
    ell: usize,
    t: f64,
    sigma: Option<&SpinAssignment>,
    opts: &DetectOptions,
) -> Result<DetectionResult> {
    if g.n() < 2 {
        return Err(Error::InvalidParameters("detection needs at least two nodes".into()));
    }
    if let Some(s) = sigma {
        s.check_len(g.n())?;
    }
    let start = Instant::now();
    let b = build_matrix(g, ell, &opts.guard)?;
    let build_ms = start.elapsed().as_secs_f64() * 1e3;
    let eig_start = Instant::now();
    let spectrum = spectrum_report(&b, sigma, &opts.spectral)?;
    let eigen_ms = eig_start.elapsed().as_secs_f64() * 1e3;

    let estimate = estimate_spins(spectrum.detection_vector(), t, spectrum.detection_index);
    let overlap = sigma.map(|s| overlap(s, &estimate.estimates)).transpose()?;
    let null = match sigma {
        Some(s) if opts.null_resamples > 0 => Some(permutation_null(
            s,
            &estimate.estimates,
            opts.null_resamples,
            opts.spectral.eigen.seed,
        )?),
        _ => None,
    };
    if spectrum.degenerate {
        log::warn!("near-degenerate leading eigenvalues: {:?}", spectrum.eigenvalues());
    }
    Ok(DetectionResult {
        overlap,
        abs_overlap: overlap.map(f64::abs),
        null,
        ell,
        nnz: b.nnz(),
        degenerate: spectrum.degenerate,
        experimental: spectrum.experimental,
        estimate,
        spectrum,
        timing: DetectionTiming {
            build_ms,
            eigen_ms,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        },
    })
}

/// The spins and graph a seed produces. Shared by experiments and the CLI.
pub fn sample_instance(p: &SbmParams, seed: u64) -> Result<(SpinAssignment, Graph)> {
    let spins = sample_spins(p.n, seed);
    let g = sample_graph(p, &spins, seed)?;
    Ok((spins, g))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowValues {
    pub overlap: f64,
    pub abs_overlap: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub ramanujan_sup: Option<f64>,
    pub align_v2_bsigma: Option<f64>,
    pub null_p99: Option<f64>,
    pub degenerate: bool,
    pub experimental: bool,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub seed: u64,
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub beta: f64,
    pub tau: f64,
    pub ell: usize,
    pub t: f64,
    pub outcome: std::result::Result<RowValues, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentTable {
    pub rows: Vec<ExperimentRow>,
    pub mean_abs_overlap: f64,
    pub std_abs_overlap: f64,
    pub failures: usize,
}

pub const CSV_COLUMNS: [&str; 17] = [
    "seed", "n", "a", "b", "alpha", "beta", "tau", "ell", "t", "overlap", "abs_overlap",
    "lambda1", "lambda2", "lambda3", "ramanujan_sup", "align_v2_Bsigma", "wall_ms",
];

fn cell(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => format!("{v}"),
        _ => String::new(),
    }
}

impl ExperimentRow {
    pub fn csv_record(&self) -> String {
        let mut fields = vec![
            self.seed.to_string(),
            self.n.to_string(),
            cell(Some(self.a)),
            cell(Some(self.b)),
            cell(Some(self.alpha)),
            cell(Some(self.beta)),
            cell(Some(self.tau)),
            self.ell.to_string(),
            cell(Some(self.t)),
        ];
        match &self.outcome {
            Ok(v) => fields.extend([
                cell(Some(v.overlap)),
                cell(Some(v.abs_overlap)),
                cell(Some(v.lambda1)),
                cell(Some(v.lambda2)),
                cell(Some(v.lambda3)),
                cell(v.ramanujan_sup),
                cell(v.align_v2_bsigma),
                cell(Some(v.wall_ms)),
            ]),
            Err(_) => fields.extend(std::iter::repeat_n(String::new(), 8)),
        }
        fields.join(",")
    }
}

impl ExperimentTable {
    pub fn from_rows(rows: Vec<ExperimentRow>) -> Self {
        let values: Vec<f64> = rows
            .iter()
            .filter_map(|r| r.outcome.as_ref().ok().map(|v| v.abs_overlap))
            .collect();
        let failures = rows.len() - values.len();
        let std = if values.len() < 2 { 0.0 } else { stats::variance(&values).sqrt() };
        ExperimentTable {
            mean_abs_overlap: stats::mean(&values),
            std_abs_overlap: std,
            failures,
            rows,
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W, with_header: bool) -> std::io::Result<()> {
        if with_header {
            writeln!(out, "{}", CSV_COLUMNS.join(","))?;
        }
        for row in &self.rows {
            writeln!(out, "{}", row.csv_record())?;
        }
        Ok(())
    }
}

/// One detection run per seed, each on a freshly sampled instance. Seeds run in
/// parallel; a failing seed is recorded in its row and does not abort the table.
pub fn run_experiment(
    p: &SbmParams,
    mode: PathLengthMode,
    t: f64,
    seeds: &[u64],
    opts: &DetectOptions,
) -> Result<ExperimentTable> {
    p.validate()?;
    let d = derive_params(p)?;
    let ell = choose_path_length(p.n, d.alpha, mode)?;
    if d.beta < 0.0 {
        log::warn!("b > a: runs are marked experimental");
    }
    let rows = par::map_slice(seeds, |&seed| {
        let outcome = run_seed(p, ell, t, seed, opts)
            .map(|mut v| {
                v.experimental |= d.beta < 0.0;
                v
            })
            .map_err(|e| {
                log::warn!("seed {seed} failed: {e}");
                e.to_string()
            });
        ExperimentRow {
            seed,
            n: p.n,
            a: p.a,
            b: p.b,
            alpha: d.alpha,
            beta: d.beta,
            tau: d.tau,
            ell,
            t,
            outcome,
        }
    });
    Ok(ExperimentTable::from_rows(rows))
}

fn run_seed(p: &SbmParams, ell: usize, t: f64, seed: u64, opts: &DetectOptions) -> Result<RowValues> {
    let start = Instant::now();
    let (spins, g) = sample_instance(p, seed)?;
    let mut seeded = *opts;
    seeded.spectral.eigen.seed = seed;
    let r = detect(&g, ell, t, Some(&spins), &seeded)?;
    Ok(RowValues {
        overlap: r.overlap.expect("ground truth supplied"),
        abs_overlap: r.abs_overlap.expect("ground truth supplied"),
        lambda1: r.spectrum.value(0),
        lambda2: r.spectrum.value(1),
        lambda3: r.spectrum.value(2),
        ramanujan_sup: r.spectrum.ramanujan_sup,
        align_v2_bsigma: r.spectrum.align_v2_bsigma,
        null_p99: r.null.as_ref().map(|nb| nb.p99),
        degenerate: r.degenerate,
        experimental: r.experimental,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}
