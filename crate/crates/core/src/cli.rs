//! Command-line front end: argument and config-file resolution, instance
//! loading, and the subcommands that emit JSON/CSV artifacts.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::detection::{
    choose_path_length, detect, run_experiment, sample_instance, DetectOptions, ExperimentRow,
    ExperimentTable, PathLengthMode, CSV_COLUMNS,
};
use crate::error::{Error, Result};
use crate::expansion::{verify_identity, ExpansionReport, IDENTITY_TOL, MAX_NODES};
use crate::graph::Graph;
use crate::io;
use crate::par;
use crate::paths::{build_matrix, PathGuard};
use crate::rng;
use crate::sbm::{
    derive_params, mean_matrix, sample_graph_with, sample_spins, DerivedParams, EdgeSampler, SbmParams,
    SpinAssignment,
};
use crate::spectral::{ramanujan_sup, spectrum_report, EigenOptions, SpectralOptions, SymmetricOperator};
use crate::tree::{monte_carlo_delta, predict_overlap};

#[derive(Debug, Parser)]
#[command(name = "sbm-paths", version, about = "Path-count spectral detection on the two-community SBM")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// Base seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Seed list: `0..20`, `1..=5` or `3,7,11`.
    #[arg(long, global = true)]
    pub seeds: Option<String>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output path (file prefix for `gen`); stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// TOML file with default values; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GraphArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Edge-list file; otherwise a graph is sampled from `--n --a --b`.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Spin file holding the ground truth for a `--graph` input.
    #[arg(long)]
    pub spins: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct PathArgs {
    /// Fixed path length.
    #[arg(long)]
    pub ell: Option<usize>,
    /// Path length rule when `--ell` is absent.
    #[arg(long, value_enum)]
    pub ell_mode: Option<EllMode>,
    /// Abort rows whose ball has more extra edges than this.
    #[arg(long)]
    pub max_extra_edges: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EllMode {
    Theory,
    Practical,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample an SBM instance and write `<out>.edges` and `<out>.spins`.
    Gen {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum)]
        sampler: Option<SamplerArg>,
    },
    /// Run the detection pipeline on one graph.
    Detect {
        #[command(flatten)]
        input: GraphArgs,
        #[command(flatten)]
        path: PathArgs,
        /// Threshold on `x_i sqrt(n)`.
        #[arg(long, allow_hyphen_values = true)]
        t: Option<f64>,
        /// Require ground truth and report the overlap.
        #[arg(long)]
        evaluate: bool,
        #[arg(long)]
        null_resamples: Option<usize>,
        /// Write the estimated spins here.
        #[arg(long)]
        estimates: Option<PathBuf>,
        /// Write the path-count matrix in coordinate form here.
        #[arg(long)]
        dump_matrix: Option<PathBuf>,
    },
    /// Multi-seed experiments over a parameter grid.
    Sweep {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        path: PathArgs,
        /// Fixed alpha for a tau grid.
        #[arg(long)]
        alpha: Option<f64>,
        /// Comma-separated tau values (needs `--alpha`).
        #[arg(long, value_delimiter = ',')]
        taus: Option<Vec<f64>>,
        /// Comma-separated node counts (needs `--a --b`).
        #[arg(long, value_delimiter = ',')]
        ns: Option<Vec<usize>>,
        #[arg(long, allow_hyphen_values = true)]
        t: Option<f64>,
        #[arg(long)]
        null_resamples: Option<usize>,
    },
    /// Leading eigenpairs and diagnostics of the path-count matrix.
    Spectrum {
        #[command(flatten)]
        input: GraphArgs,
        #[command(flatten)]
        path: PathArgs,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Norm of the path-count matrix away from `B e` and `B sigma`.
    Ramanujan {
        #[command(flatten)]
        input: GraphArgs,
        #[command(flatten)]
        path: PathArgs,
    },
    /// Monte Carlo sample of the branching-process martingale.
    Tree {
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        b: Option<f64>,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Exhaustively check the path expansion identity on toy graphs.
    VerifyExpansion {
        #[command(flatten)]
        input: GraphArgs,
        #[arg(long)]
        ell: Option<usize>,
        /// Number of random instances in the default sweep.
        #[arg(long)]
        instances: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerArg {
    PairScan,
    GeometricSkip,
}

impl From<SamplerArg> for EdgeSampler {
    fn from(s: SamplerArg) -> Self {
        match s {
            SamplerArg::PairScan => EdgeSampler::PairScan,
            SamplerArg::GeometricSkip => EdgeSampler::GeometricSkip,
        }
    }
}

/// Values a `--config` file may provide. Every key is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub seeds: Option<String>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub n: Option<usize>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub graph: Option<PathBuf>,
    pub spins: Option<PathBuf>,
    pub ell: Option<usize>,
    pub ell_mode: Option<EllMode>,
    pub max_extra_edges: Option<usize>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub t: Option<f64>,
    pub null_resamples: Option<usize>,
    pub sampler: Option<SamplerArg>,
    pub alpha: Option<f64>,
    pub taus: Option<Vec<f64>>,
    pub ns: Option<Vec<usize>>,
    pub k: Option<usize>,
    pub depth: Option<usize>,
    pub trials: Option<usize>,
    pub instances: Option<usize>,
}

/// Fully resolved settings; echoed into every artifact header.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub subcommand: String,
    pub seeds: Vec<u64>,
    pub threads: usize,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub n: Option<usize>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub graph: Option<PathBuf>,
    pub spins: Option<PathBuf>,
    pub ell: Option<usize>,
    pub ell_mode: EllMode,
    pub max_extra_edges: Option<usize>,
    pub tol: f64,
    pub max_iter: usize,
    pub t: f64,
    pub null_resamples: usize,
    pub sampler: SamplerArg,
    pub alpha: Option<f64>,
    pub taus: Vec<f64>,
    pub ns: Vec<usize>,
    pub k: usize,
    pub depth: usize,
    pub trials: usize,
    pub instances: usize,
    pub evaluate: bool,
}

impl RunConfig {
    pub fn seed(&self) -> u64 {
        self.seeds[0]
    }

    fn guard(&self) -> PathGuard {
        PathGuard {
            max_extra_edges: self.max_extra_edges,
            ..PathGuard::default()
        }
    }

    fn eigen(&self, seed: u64) -> EigenOptions {
        EigenOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            seed,
            block: None,
        }
    }

    fn detect_options(&self, seed: u64) -> DetectOptions {
        DetectOptions {
            guard: self.guard(),
            spectral: SpectralOptions {
                k: self.k,
                eigen: self.eigen(seed),
                ramanujan: true,
            },
            null_resamples: self.null_resamples,
        }
    }

    fn ell_for(&self, n: usize, alpha: f64) -> Result<usize> {
        let mode = match (self.ell, self.ell_mode) {
            (Some(ell), _) => PathLengthMode::Fixed(ell),
            (None, EllMode::Theory) => PathLengthMode::Theory,
            (None, EllMode::Practical) => PathLengthMode::Practical,
        };
        choose_path_length(n, alpha, mode)
    }

    fn params(&self) -> Result<SbmParams> {
        match (self.n, self.a, self.b) {
            (Some(n), Some(a), Some(b)) => SbmParams::new(n, a, b),
            _ => Err(Error::Usage("model parameters --n, --a and --b are required".into())),
        }
    }
}

pub fn parse_seeds(list: &str) -> Result<Vec<u64>> {
    let bad = || Error::Usage(format!("cannot parse seed list '{list}'"));
    let list = list.trim();
    let seeds: Vec<u64> = if let Some((lo, hi)) = list.split_once("..=") {
        let (lo, hi): (u64, u64) = (lo.parse().map_err(|_| bad())?, hi.parse().map_err(|_| bad())?);
        (lo..=hi).collect()
    } else if let Some((lo, hi)) = list.split_once("..") {
        let (lo, hi): (u64, u64) = (lo.parse().map_err(|_| bad())?, hi.parse().map_err(|_| bad())?);
        (lo..hi).collect()
    } else {
        list.split(',')
            .map(|s| s.trim().parse::<u64>().map_err(|_| bad()))
            .collect::<Result<_>>()?
    };
    if seeds.is_empty() {
        return Err(Error::Usage(format!("seed list '{list}' is empty")));
    }
    Ok(seeds)
}

fn read_config(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        msg: e.to_string(),
    })
}

/// Flags override the config file, which overrides built-in defaults.
pub fn resolve(cli: &Cli) -> Result<RunConfig> {
    let file = match &cli.global.config {
        Some(p) => read_config(p)?,
        None => FileConfig::default(),
    };
    let g = &cli.global;
    macro_rules! pick {
        ($flag:expr, $file:expr) => {
            $flag.clone().or($file.clone())
        };
    }
    let seeds = match pick!(g.seeds, file.seeds) {
        Some(list) => parse_seeds(&list)?,
        None => vec![pick!(g.seed, file.seed).unwrap_or(0)],
    };
    let mut cfg = RunConfig {
        subcommand: String::new(),
        seeds,
        threads: pick!(g.threads, file.threads).unwrap_or_else(par::available_threads),
        out: pick!(g.out, file.out),
        format: pick!(g.format, file.format).unwrap_or(Format::Json),
        n: file.n,
        a: file.a,
        b: file.b,
        graph: file.graph.clone(),
        spins: file.spins.clone(),
        ell: file.ell,
        ell_mode: file.ell_mode.unwrap_or(EllMode::Practical),
        max_extra_edges: file.max_extra_edges,
        tol: file.tol.unwrap_or(1e-8),
        max_iter: file.max_iter.unwrap_or(5000),
        t: file.t.unwrap_or(0.0),
        null_resamples: file.null_resamples.unwrap_or(200),
        sampler: file.sampler.unwrap_or(SamplerArg::PairScan),
        alpha: file.alpha,
        taus: file.taus.clone().unwrap_or_default(),
        ns: file.ns.clone().unwrap_or_default(),
        k: file.k.unwrap_or(3),
        depth: file.depth.unwrap_or(12),
        trials: file.trials.unwrap_or(100_000),
        instances: file.instances.unwrap_or(50),
        evaluate: false,
    };

    let apply_model = |cfg: &mut RunConfig, m: &ModelArgs| {
        cfg.n = m.n.or(cfg.n);
        cfg.a = m.a.or(cfg.a);
        cfg.b = m.b.or(cfg.b);
    };
    let apply_graph = |cfg: &mut RunConfig, input: &GraphArgs| {
        apply_model(cfg, &input.model);
        cfg.graph = input.graph.clone().or(cfg.graph.take());
        cfg.spins = input.spins.clone().or(cfg.spins.take());
    };
    let apply_path = |cfg: &mut RunConfig, p: &PathArgs| {
        cfg.ell = p.ell.or(cfg.ell);
        cfg.ell_mode = p.ell_mode.unwrap_or(cfg.ell_mode);
        cfg.max_extra_edges = p.max_extra_edges.or(cfg.max_extra_edges);
        cfg.tol = p.tol.unwrap_or(cfg.tol);
        cfg.max_iter = p.max_iter.unwrap_or(cfg.max_iter);
    };

    match &cli.command {
        Command::Gen { model, sampler } => {
            cfg.subcommand = "gen".into();
            apply_model(&mut cfg, model);
            cfg.sampler = sampler.unwrap_or(cfg.sampler);
        }
        Command::Detect { input, path, t, evaluate, null_resamples, .. } => {
            cfg.subcommand = "detect".into();
            apply_graph(&mut cfg, input);
            apply_path(&mut cfg, path);
            cfg.t = t.unwrap_or(cfg.t);
            cfg.evaluate = *evaluate;
            cfg.null_resamples = null_resamples.unwrap_or(cfg.null_resamples);
        }
        Command::Sweep { model, path, alpha, taus, ns, t, null_resamples } => {
            cfg.subcommand = "sweep".into();
            apply_model(&mut cfg, model);
            apply_path(&mut cfg, path);
            cfg.alpha = alpha.or(cfg.alpha);
            if let Some(taus) = taus {
                cfg.taus = taus.clone();
            }
            if let Some(ns) = ns {
                cfg.ns = ns.clone();
            }
            cfg.t = t.unwrap_or(cfg.t);
            cfg.null_resamples = null_resamples.unwrap_or(cfg.null_resamples);
        }
        Command::Spectrum { input, path, k } => {
            cfg.subcommand = "spectrum".into();
            apply_graph(&mut cfg, input);
            apply_path(&mut cfg, path);
            cfg.k = k.unwrap_or(cfg.k);
        }
        Command::Ramanujan { input, path } => {
            cfg.subcommand = "ramanujan".into();
            apply_graph(&mut cfg, input);
            apply_path(&mut cfg, path);
        }
        Command::Tree { a, b, depth, trials } => {
            cfg.subcommand = "tree".into();
            cfg.a = a.or(cfg.a);
            cfg.b = b.or(cfg.b);
            cfg.depth = depth.unwrap_or(cfg.depth);
            cfg.trials = trials.unwrap_or(cfg.trials);
        }
        Command::VerifyExpansion { input, ell, instances } => {
            cfg.subcommand = "verify-expansion".into();
            apply_graph(&mut cfg, input);
            cfg.ell = ell.or(cfg.ell);
            cfg.instances = instances.unwrap_or(cfg.instances);
        }
    }
    Ok(cfg)
}

fn timestamp() -> String {
    // SOURCE_DATE_EPOCH pins the header for reproducible artifacts.
    match std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|s| s.parse::<i64>().ok()) {
        Some(secs) => chrono::DateTime::from_timestamp(secs, 0)
            .map(|t| t.to_rfc3339())
            .unwrap_or_default(),
        None => chrono::Utc::now().to_rfc3339(),
    }
}

pub fn metadata(cfg: &RunConfig) -> Value {
    json!({
        "tool": "sbm-paths",
        "version": env!("CARGO_PKG_VERSION"),
        "timestamp": timestamp(),
        "seeds": cfg.seeds,
        "config": cfg,
    })
}

fn open_out(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

/// Writes to `--out` or stdout.
fn emit(cfg: &RunConfig, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    match &cfg.out {
        Some(path) => {
            let mut w = open_out(path)?;
            body(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            body(&mut lock).map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn emit_json(cfg: &RunConfig, mut value: Value) -> Result<()> {
    if let Value::Object(map) = &mut value {
        map.insert("meta".into(), metadata(cfg));
    }
    emit(cfg, |w| {
        serde_json::to_writer_pretty(&mut *w, &value)?;
        writeln!(w)
    })
}

fn emit_csv(cfg: &RunConfig, table_rows: &[ExperimentRow]) -> Result<()> {
    let meta = metadata(cfg).to_string();
    emit(cfg, |w| {
        writeln!(w, "# meta: {meta}")?;
        ExperimentTable::from_rows(table_rows.to_vec()).write_csv(w, true)
    })
}

fn finite(x: Option<f64>) -> Value {
    x.filter(|v| v.is_finite()).map_or(Value::Null, |v| json!(v))
}

/// Graph and optional ground truth, from a file or from the model parameters.
struct Instance {
    graph: Graph,
    spins: Option<SpinAssignment>,
    derived: Option<DerivedParams>,
}

fn load_instance(cfg: &RunConfig) -> Result<Instance> {
    let derived = match (cfg.a, cfg.b) {
        (Some(a), Some(b)) => Some(DerivedParams::from_rates(a, b)?),
        _ => None,
    };
    if let Some(path) = &cfg.graph {
        let graph = io::read_edge_list(path)?;
        let spins = cfg.spins.as_deref().map(io::read_spins).transpose()?;
        if let Some(s) = &spins {
            if s.len() != graph.n() {
                return Err(Error::Usage(format!(
                    "spin file has {} entries but the graph has {} nodes",
                    s.len(),
                    graph.n()
                )));
            }
        }
        return Ok(Instance { graph, spins, derived });
    }
    let p = cfg.params()?;
    let (spins, graph) = sample_instance(&p, cfg.seed())?;
    Ok(Instance { graph, spins: Some(spins), derived })
}

/// Alpha for path-length rules: from the rates when known, else the mean degree.
fn alpha_of(inst: &Instance) -> f64 {
    inst.derived
        .map(|d| d.alpha)
        .unwrap_or_else(|| 2.0 * inst.graph.m() as f64 / inst.graph.n().max(1) as f64)
}

pub fn cmd_gen(cfg: &RunConfig) -> Result<Value> {
    let p = cfg.params()?;
    let seed = cfg.seed();
    let spins = sample_spins(p.n, seed);
    let g = sample_graph_with(&p, &spins, seed, cfg.sampler.into())?;
    let prefix = cfg.out.clone().unwrap_or_else(|| PathBuf::from("sbm"));
    let edges_path = PathBuf::from(format!("{}.edges", prefix.display()));
    let spins_path = PathBuf::from(format!("{}.spins", prefix.display()));
    let meta = vec![format!("meta: {}", metadata(cfg))];

    let mut w = open_out(&edges_path)?;
    io::write_edge_list(&g, &meta, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(&edges_path, e))?;
    let mut w = open_out(&spins_path)?;
    io::write_spins(&spins, &meta, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(&spins_path, e))?;
    Ok(json!({
        "edges": edges_path,
        "spins": spins_path,
        "n": g.n(),
        "m": g.m(),
    }))
}

pub fn cmd_detect(cfg: &RunConfig, estimates: Option<&Path>, dump: Option<&Path>) -> Result<()> {
    let inst = load_instance(cfg)?;
    if cfg.evaluate && inst.spins.is_none() {
        return Err(Error::Usage("evaluation mode needs ground truth: pass --spins".into()));
    }
    let ell = cfg.ell_for(inst.graph.n(), alpha_of(&inst))?;
    let seed = cfg.seed();
    let opts = cfg.detect_options(seed);
    let result = detect(&inst.graph, ell, cfg.t, inst.spins.as_ref(), &opts)?;

    if let Some(path) = dump {
        let b = build_matrix(&inst.graph, ell, &opts.guard)?;
        let mut w = open_out(path)?;
        b.write_coordinates(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))?;
    }
    if let Some(path) = estimates {
        let mut w = open_out(path)?;
        io::write_spins(&result.estimate.estimates, &[], &mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))?;
    }

    let d = inst.derived;
    let row = ExperimentRow {
        seed,
        n: inst.graph.n(),
        a: cfg.a.unwrap_or(f64::NAN),
        b: cfg.b.unwrap_or(f64::NAN),
        alpha: d.map_or(f64::NAN, |d| d.alpha),
        beta: d.map_or(f64::NAN, |d| d.beta),
        tau: d.map_or(f64::NAN, |d| d.tau),
        ell,
        t: cfg.t,
        outcome: Ok(crate::detection::RowValues {
            overlap: result.overlap.unwrap_or(f64::NAN),
            abs_overlap: result.abs_overlap.unwrap_or(f64::NAN),
            lambda1: result.spectrum.value(0),
            lambda2: result.spectrum.value(1),
            lambda3: result.spectrum.value(2),
            ramanujan_sup: result.spectrum.ramanujan_sup,
            align_v2_bsigma: result.spectrum.align_v2_bsigma,
            null_p99: result.null.as_ref().map(|nb| nb.p99),
            degenerate: result.degenerate,
            experimental: result.experimental,
            wall_ms: result.timing.wall_ms,
        }),
    };
    match cfg.format {
        Format::Csv => emit_csv(cfg, &[row]),
        Format::Json => emit_json(
            cfg,
            json!({
                "n": inst.graph.n(),
                "m": inst.graph.m(),
                "ell": ell,
                "t": cfg.t,
                "nnz": result.nnz,
                "overlap": finite(result.overlap),
                "abs_overlap": finite(result.abs_overlap),
                "null_p99": finite(result.null.as_ref().map(|nb| nb.p99)),
                "beats_null": result.beats_null(),
                "degenerate": result.degenerate,
                "experimental": result.experimental,
                "estimate_source": result.estimate.source,
                "spectrum": result.spectrum.to_json(),
                "timing": result.timing,
            }),
        ),
    }
}

/// Grid points `(n, a, b)` of a sweep.
fn sweep_points(cfg: &RunConfig) -> Result<Vec<(usize, f64, f64)>> {
    if !cfg.taus.is_empty() {
        let alpha = cfg.alpha.ok_or_else(|| Error::Usage("--taus needs --alpha".into()))?;
        let n = cfg.n.ok_or_else(|| Error::Usage("--taus needs --n".into()))?;
        // tau = beta^2 / alpha
        return Ok(cfg
            .taus
            .iter()
            .map(|&tau| {
                let beta = (tau * alpha).max(0.0).sqrt();
                (n, alpha + beta, alpha - beta)
            })
            .collect());
    }
    if !cfg.ns.is_empty() {
        let (a, b) = match (cfg.a, cfg.b) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::Usage("--ns needs --a and --b".into())),
        };
        return Ok(cfg.ns.iter().map(|&n| (n, a, b)).collect());
    }
    Err(Error::Usage("empty sweep grid: pass --alpha with --taus, or --a --b with --ns".into()))
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<()> {
    let points = sweep_points(cfg)?;
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for (n, a, b) in points {
        let table = SbmParams::new(n, a, b).and_then(|p| {
            let d = derive_params(&p)?;
            let mode = PathLengthMode::Fixed(cfg.ell_for(n, d.alpha)?);
            run_experiment(&p, mode, cfg.t, &cfg.seeds, &cfg.detect_options(0))
        });
        match table {
            Ok(table) => {
                summaries.push(json!({
                    "n": n, "a": a, "b": b,
                    "tau": table.rows.first().map(|r| r.tau),
                    "mean_abs_overlap": finite(Some(table.mean_abs_overlap)),
                    "std_abs_overlap": finite(Some(table.std_abs_overlap)),
                    "failures": table.failures,
                }));
                rows.extend(table.rows);
            }
            Err(e) => {
                log::warn!("grid point (n={n}, a={a}, b={b}) failed: {e}");
                summaries.push(json!({ "n": n, "a": a, "b": b, "error": e.to_string() }));
                let d = DerivedParams::from_rates(a, b).ok();
                rows.extend(cfg.seeds.iter().map(|&seed| ExperimentRow {
                    seed,
                    n,
                    a,
                    b,
                    alpha: d.map_or(f64::NAN, |d| d.alpha),
                    beta: d.map_or(f64::NAN, |d| d.beta),
                    tau: d.map_or(f64::NAN, |d| d.tau),
                    ell: cfg.ell.unwrap_or(0),
                    t: cfg.t,
                    outcome: Err(e.to_string()),
                }));
            }
        }
    }
    match cfg.format {
        Format::Csv => emit_csv(cfg, &rows),
        Format::Json => emit_json(
            cfg,
            json!({
                "columns": CSV_COLUMNS,
                "points": summaries,
                "rows": rows.iter().map(|r| r.csv_record()).collect::<Vec<_>>(),
            }),
        ),
    }
}

pub fn cmd_spectrum(cfg: &RunConfig) -> Result<()> {
    let inst = load_instance(cfg)?;
    let ell = cfg.ell_for(inst.graph.n(), alpha_of(&inst))?;
    let b = build_matrix(&inst.graph, ell, &cfg.guard())?;
    let opts = SpectralOptions {
        k: cfg.k,
        eigen: cfg.eigen(cfg.seed()),
        ramanujan: inst.spins.is_some(),
    };
    let report = spectrum_report(&b, inst.spins.as_ref(), &opts)?;
    emit_json(
        cfg,
        json!({
            "n": inst.graph.n(),
            "ell": ell,
            "nnz": b.nnz(),
            "spectrum": report.to_json(),
            "ramanujan_ratio": finite(Some(report.ramanujan_ratio(inst.graph.n()))),
        }),
    )
}

pub fn cmd_ramanujan(cfg: &RunConfig) -> Result<()> {
    let inst = load_instance(cfg)?;
    let spins = inst
        .spins
        .as_ref()
        .ok_or_else(|| Error::Usage("ramanujan needs ground truth: pass --spins".into()))?;
    let n = inst.graph.n();
    let ell = cfg.ell_for(n, alpha_of(&inst))?;
    let b = build_matrix(&inst.graph, ell, &cfg.guard())?;
    let eig = cfg.eigen(cfg.seed());
    let be = b.apply_vec(&vec![1.0; n]);
    let bs = b.apply_vec(&spins.to_f64());
    let sup = ramanujan_sup(&b, &be, &bs, &eig)?;
    let lambda1 = crate::spectral::top_eigenpairs(&b, 1, &eig)?[0].value.abs();
    emit_json(
        cfg,
        json!({
            "n": n,
            "ell": ell,
            "ramanujan_sup": finite(Some(sup)),
            "lambda1": finite(Some(lambda1)),
            "sqrt_lambda1": finite(Some(lambda1.sqrt())),
            "ratio_sup_sqrt_l1_n025": finite(Some(sup / (lambda1.sqrt() * (n as f64).powf(0.25)))),
        }),
    )
}

pub fn cmd_tree(cfg: &RunConfig) -> Result<()> {
    let (a, b) = match (cfg.a, cfg.b) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::Usage("tree needs --a and --b".into())),
    };
    let d = DerivedParams::from_rates(a, b)?;
    if d.beta == 0.0 {
        return Err(Error::InvalidParameters("a = b gives beta = 0: Delta_t is undefined".into()));
    }
    let sample = monte_carlo_delta(a, b, cfg.depth, cfg.trials, cfg.seed())?;
    let mut value = sample.to_json();
    value["predicted_overlap_t0"] = finite(Some(predict_overlap(&sample, 0.0)));
    emit_json(cfg, value)
}

fn expansion_instances(cfg: &RunConfig) -> Result<Vec<(Graph, SbmParams, SpinAssignment, usize)>> {
    let ell = cfg.ell;
    if let Some(path) = &cfg.graph {
        let g = io::read_edge_list(path)?;
        if g.n() > MAX_NODES {
            return Err(Error::EnumerationCap { n: g.n(), cap: MAX_NODES });
        }
        let spins = match &cfg.spins {
            Some(p) => io::read_spins(p)?,
            None => sample_spins(g.n(), cfg.seed()),
        };
        spins.check_len(g.n())?;
        let p = SbmParams::new(g.n(), cfg.a.unwrap_or(1.0), cfg.b.unwrap_or(0.5))?;
        return Ok(vec![(g, p, spins, ell.unwrap_or(2))]);
    }
    if let Some(n) = cfg.n {
        if n > MAX_NODES {
            return Err(Error::EnumerationCap { n, cap: MAX_NODES });
        }
    }
    let key = rng::derive(cfg.seed(), "expansion-sweep");
    (0..cfg.instances)
        .map(|k| {
            let h = |salt: u64| rng::unit_f64(rng::hash3(key, k as u64, salt));
            let n = cfg.n.unwrap_or(4 + (h(0) * 9.0) as usize); // 4..=12
            let ell = ell.unwrap_or(1 + k % 3);
            let p = SbmParams::new(n, (0.2 + 0.7 * h(1)) * n as f64, (0.05 + 0.5 * h(2)) * n as f64)?;
            let spins = match k % 4 {
                0 => SpinAssignment::new(vec![1; n])?,
                1 => SpinAssignment::new((0..n).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect())?,
                _ => sample_spins(n, rng::hash2(key, k as u64)),
            };
            let g = sample_graph_with(&p, &spins, rng::hash2(key, 1000 + k as u64), EdgeSampler::PairScan)?;
            Ok((g, p, spins, ell))
        })
        .collect()
}

/// Returns whether every instance passed.
pub fn cmd_verify_expansion(cfg: &RunConfig) -> Result<bool> {
    let instances = expansion_instances(cfg)?;
    let reports: Vec<ExpansionReport> = instances
        .iter()
        .map(|(g, p, spins, ell)| verify_identity(g, &mean_matrix(p, spins)?, *ell))
        .collect::<Result<_>>()?;
    let max_abs_error = reports.iter().map(|r| r.max_abs_error).fold(0.0, f64::max);
    let passed = max_abs_error <= IDENTITY_TOL;
    emit_json(
        cfg,
        json!({
            "instances": reports.len(),
            "tolerance": IDENTITY_TOL,
            "max_abs_error": max_abs_error,
            "passed": passed,
            "reports": reports,
        }),
    )?;
    Ok(passed)
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> Result<i32> {
    let cfg = resolve(&cli)?;
    let threads = Some(cfg.threads);
    par::with_threads(threads, move || match &cli.command {
        Command::Gen { .. } => {
            let summary = cmd_gen(&cfg)?;
            println!("{summary}");
            Ok(0)
        }
        Command::Detect { estimates, dump_matrix, .. } => {
            cmd_detect(&cfg, estimates.as_deref(), dump_matrix.as_deref()).map(|_| 0)
        }
        Command::Sweep { .. } => cmd_sweep(&cfg).map(|_| 0),
        Command::Spectrum { .. } => cmd_spectrum(&cfg).map(|_| 0),
        Command::Ramanujan { .. } => cmd_ramanujan(&cfg).map(|_| 0),
        Command::Tree { .. } => cmd_tree(&cfg).map(|_| 0),
        Command::VerifyExpansion { .. } => cmd_verify_expansion(&cfg).map(|ok| if ok { 0 } else { 3 }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seeds("0..3").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_seeds("2..=4").unwrap(), vec![2, 3, 4]);
        assert_eq!(parse_seeds("5, 9,1").unwrap(), vec![5, 9, 1]);
        assert!(parse_seeds("3..3").is_err());
        assert!(parse_seeds("x").is_err());
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "n = 50\na = 5.0\nb = 1.0\nt = 0.5\nseeds = \"1..3\"\n").unwrap();
        let cli = Cli::parse_from([
            "sbm-paths", "--config", path.to_str().unwrap(), "detect", "--a", "6", "--ell", "2",
        ]);
        let cfg = resolve(&cli).unwrap();
        assert_eq!(cfg.n, Some(50));
        assert_eq!(cfg.a, Some(6.0));
        assert_eq!(cfg.b, Some(1.0));
        assert_eq!(cfg.t, 0.5);
        assert_eq!(cfg.seeds, vec![1, 2]);
        assert_eq!(cfg.ell, Some(2));
        assert_eq!(cfg.tol, 1e-8);

        std::fs::write(&path, "bogus = 1\n").unwrap();
        let cli = Cli::parse_from(["sbm-paths", "--config", path.to_str().unwrap(), "tree"]);
        assert!(matches!(resolve(&cli), Err(Error::Parse { .. })));
    }

    #[test]
    fn tau_grid_points() {
        let cli = Cli::parse_from(["sbm-paths", "sweep", "--n", "100", "--alpha", "4", "--taus", "0,2.25"]);
        let cfg = resolve(&cli).unwrap();
        assert_eq!(sweep_points(&cfg).unwrap(), vec![(100, 4.0, 4.0), (100, 7.0, 1.0)]);
        let cli = Cli::parse_from(["sbm-paths", "sweep", "--n", "100"]);
        assert!(matches!(sweep_points(&resolve(&cli).unwrap()), Err(Error::Usage(_))));
    }
}
