//! Command-line surface: sieve → ap → sums → train → eval → regions →
//! plot data.
//!
//! Exit codes: 0 success, 2 configuration/validation error, 3 compute
//! or I/O error. Flags can also be supplied through `--config FILE`
//! (key=value lines or a JSON object, keys matching the long flag
//! names); explicit flags win. When `MNRANK_DATA_DIR` is set, relative
//! paths resolve under it.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::curve::{ap_vector, ApVector, CurveError};
use crate::dataset::{
    self, read_ap_cache, write_ap_cache, CurveCatalog, DatasetError, SplitManifest, SplitSpec,
};
use crate::eval::{confusion, mcc, report_csv, report_text, EvalError};
use crate::models::{
    train_learned_sum, train_sum_mlp, LearnedSum, LearnedSumConfig, ModelError, SumInputSpec,
    SumMlp, SumMlpConfig, TrainOutcome,
};
use crate::nn::{load_checkpoint, save_checkpoint, NnError, Tensor};
use crate::primes::{sieve_primes, PrimeError, PrimeTable};
use crate::regions::{self, RegionError, SumPointCloud};
use crate::sums::{features, SumError, PAPER_BOUNDS};
use crate::svg::ScatterPlot;

// ---------------------------------------------------------------------------
// Errors and exit codes
// ---------------------------------------------------------------------------

#[derive(Debug)]
enum CliError {
    /// Bad flags, config, or input data → exit 2.
    Config(String),
    /// Failures during computation or output → exit 3.
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Runtime(m) => m,
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::Io { .. } => CliError::Runtime(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<CurveError> for CliError {
    fn from(e: CurveError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<SumError> for CliError {
    fn from(e: SumError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<PrimeError> for CliError {
    fn from(e: PrimeError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Config(_) | ModelError::Input(_) => CliError::Config(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<NnError> for CliError {
    fn from(e: NnError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<RegionError> for CliError {
    fn from(e: RegionError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

// ---------------------------------------------------------------------------
// Argument structures
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(name = "mnrank", version, about = "Mestre–Nagao sums and rank classifiers for elliptic curves over Q")]
struct Cli {
    /// Optional config file (key=value lines or a JSON object) whose
    /// keys mirror the long flag names; explicit flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker cap for parallel sections (outputs are identical for any
    /// value).
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute Frobenius traces for every curve and write an APV1 cache.
    Ap(ApArgs),
    /// Evaluate Mestre–Nagao sums at a bound set and write a feature CSV.
    Sums(SumsArgs),
    /// Train a classifier and write a checkpoint plus a training log.
    Train(TrainArgs),
    /// Evaluate a checkpoint: MCC plus confusion tables.
    Eval(EvalArgs),
    /// Fit MCC-optimal rectangles in the (S0(10^3), S0(10^5)) plane.
    Regions(RegionsArgs),
    /// Emit scatter CSV, region-grid CSV, and an SVG scatter plot.
    Plotdata(PlotdataArgs),
}

#[derive(Args)]
struct ApArgs {
    /// Curve catalog CSV: label,a1,a2,a3,a4,a6,conductor,rank.
    #[arg(long)]
    curves: PathBuf,
    /// Prime limit (traces for all primes p < limit).
    #[arg(long, default_value_t = 100_000)]
    limit: u64,
    /// Output cache path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SumsArgs {
    #[arg(long)]
    cache: PathBuf,
    #[arg(long)]
    curves: PathBuf,
    /// "all" for the paper's 8 bounds, or a comma-separated list.
    #[arg(long, default_value = "all")]
    bounds: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum SplitMode {
    TopRange,
    Uniform,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum ModelKind {
    SumMlp,
    LearnedSum,
}

#[derive(Args)]
struct SplitArgs {
    /// How the catalog is cut into train/validation/test.
    #[arg(long, value_enum, default_value = "uniform")]
    mode: SplitMode,
    /// Top-range mode: train on conductors <= this value.
    #[arg(long)]
    train_max: Option<u64>,
    /// Top-range mode: test on conductors >= this value.
    #[arg(long)]
    test_min: Option<u64>,
    /// Top-range mode: share of the training range held out for
    /// validation.
    #[arg(long, default_value_t = 0.1)]
    val_fraction: f64,
    /// Uniform mode: train,validation,test fractions.
    #[arg(long, default_value = "0.6,0.2,0.2")]
    fractions: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    curves: PathBuf,
    #[arg(long)]
    cache: PathBuf,
    #[arg(long, value_enum, default_value = "sum-mlp")]
    model: ModelKind,
    #[command(flatten)]
    split: SplitArgs,
    /// Sum MLP: which sums to feed ("s0", "s5", or "s0s5").
    #[arg(long, default_value = "s0s5")]
    input_sums: String,
    /// Sum MLP: bound subset ("all" or a comma-separated list).
    #[arg(long, default_value = "all")]
    bounds: String,
    #[arg(long, default_value_t = 4)]
    hidden_layers: usize,
    #[arg(long, default_value_t = 128)]
    hidden_width: usize,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long, default_value_t = 0.01)]
    weight_decay: f64,
    /// Learned sum: emit conductor-dependent weights.
    #[arg(long, default_value_t = false)]
    conductor_dependent: bool,
    /// Learned sum: hidden channel widths of the conv stack.
    #[arg(long, default_value = "128,128,128,128")]
    conv_hidden: String,
    /// Checkpoint output path.
    #[arg(long)]
    out: PathBuf,
    /// Training log output (JSON lines), defaults to <out>.log.jsonl.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    curves: PathBuf,
    #[arg(long)]
    cache: PathBuf,
    /// Prefix for the report files (<prefix>.csv and <prefix>.txt).
    #[arg(long)]
    out_prefix: PathBuf,
}

#[derive(Args)]
struct RegionsArgs {
    #[arg(long)]
    curves: PathBuf,
    #[arg(long)]
    cache: PathBuf,
    /// Conductor window "lo,hi" (inclusive); whole catalog if omitted.
    #[arg(long)]
    window: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Rule-set JSON output path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PlotdataArgs {
    #[arg(long)]
    curves: PathBuf,
    #[arg(long)]
    cache: PathBuf,
    #[arg(long)]
    window: Option<String>,
    /// Grid resolution per axis for the region background.
    #[arg(long, default_value_t = 64)]
    resolution: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Prefix for outputs (<prefix>_scatter.csv, <prefix>_grid.csv,
    /// <prefix>.svg).
    #[arg(long)]
    out_prefix: PathBuf,
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

pub fn main() {
    let args: Vec<String> = std::env::args().collect();
    std::process::exit(run(args));
}

/// Parses and dispatches; returns the process exit code.
pub fn run(args: Vec<String>) -> i32 {
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            // clap prints its own help/version output with exit 0.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if cli.jobs == 0 {
        eprintln!("error: --jobs must be at least 1");
        return 2;
    }
    let result = match cli.command {
        Command::Ap(a) => cmd_ap(a),
        Command::Sums(a) => cmd_sums(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Regions(a) => cmd_regions(a),
        Command::Plotdata(a) => cmd_plotdata(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

/// Reads `--config FILE` (if present) and appends `--key value` for
/// every config entry whose flag is not already on the command line.
fn expand_config(mut args: Vec<String>) -> Result<Vec<String>, String> {
    let config_path = args
        .iter()
        .position(|a| a == "--config")
        .and_then(|i| args.get(i + 1).cloned())
        .or_else(|| {
            args.iter()
                .find_map(|a| a.strip_prefix("--config=").map(str::to_string))
        });
    let Some(path) = config_path else {
        return Ok(args);
    };
    let path = resolve_path(Path::new(&path));
    let text = std::fs::read_to_string(&path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;

    let mut entries: Vec<(String, String)> = Vec::new();
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        let obj: serde_json::Map<String, serde_json::Value> = serde_json::from_str(trimmed)
            .map_err(|e| format!("config is not a JSON object: {e}"))?;
        for (k, v) in obj {
            let v = match v {
                serde_json::Value::String(s) => s,
                other => other.to_string(),
            };
            entries.push((k, v));
        }
    } else {
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("config line {}: expected key=value", ln + 1))?;
            entries.push((k.trim().to_string(), v.trim().to_string()));
        }
    }
    for (key, value) in entries {
        let flag = format!("--{key}");
        let already = args
            .iter()
            .any(|a| *a == flag || a.starts_with(&format!("{flag}=")));
        if !already {
            args.push(flag);
            args.push(value);
        }
    }
    Ok(args)
}

/// Relative paths resolve under `MNRANK_DATA_DIR` when it is set.
fn resolve_path(p: &Path) -> PathBuf {
    if p.is_absolute() {
        return p.to_path_buf();
    }
    match std::env::var_os("MNRANK_DATA_DIR") {
        Some(dir) => PathBuf::from(dir).join(p),
        None => p.to_path_buf(),
    }
}

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

fn parse_bounds(spec: &str) -> Result<Vec<u64>, CliError> {
    if spec == "all" {
        return Ok(PAPER_BOUNDS.to_vec());
    }
    let bounds: Vec<u64> = spec
        .split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| CliError::Config(format!("bad bound {s:?}")))
        })
        .collect::<Result<_, _>>()?;
    if bounds.is_empty() || bounds.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Config(
            "bounds must be a non-empty ascending list".into(),
        ));
    }
    Ok(bounds)
}

fn parse_window(spec: &Option<String>) -> Result<Option<(u64, u64)>, CliError> {
    let Some(s) = spec else { return Ok(None) };
    let (lo, hi) = s
        .split_once(',')
        .ok_or_else(|| CliError::Config(format!("window must be lo,hi, got {s:?}")))?;
    let lo = lo
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("bad window bound {lo:?}")))?;
    let hi = hi
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("bad window bound {hi:?}")))?;
    if lo > hi {
        return Err(CliError::Config(format!("empty window {lo}..{hi}")));
    }
    Ok(Some((lo, hi)))
}

/// Loads catalog + cache and checks that they describe the same curves.
fn load_inputs(
    curves: &Path,
    cache: &Path,
) -> Result<(CurveCatalog, Vec<ApVector>, PrimeTable), CliError> {
    let catalog = dataset::load_catalog(&resolve_path(curves), None)?;
    let vectors = read_ap_cache(&resolve_path(cache))?;
    if vectors.len() != catalog.len() {
        return Err(CliError::Config(format!(
            "cache has {} curves, catalog has {}",
            vectors.len(),
            catalog.len()
        )));
    }
    let limit = vectors
        .first()
        .map(|v| v.prime_limit)
        .ok_or_else(|| CliError::Config("empty ap cache".into()))?;
    let table = sieve_primes(limit)?;
    Ok((catalog, vectors, table))
}

fn build_split(catalog: &CurveCatalog, args: &SplitArgs) -> Result<SplitManifest, CliError> {
    let spec = match args.mode {
        SplitMode::TopRange => {
            let train_max = args.train_max.ok_or_else(|| {
                CliError::Config("--train-max is required in top-range mode".into())
            })?;
            let test_min = args.test_min.ok_or_else(|| {
                CliError::Config("--test-min is required in top-range mode".into())
            })?;
            SplitSpec::TopRange {
                train_range: (0, train_max),
                test_range: (test_min, u64::MAX),
                val_fraction: args.val_fraction,
                seed: args.seed,
            }
        }
        SplitMode::Uniform => {
            let parts: Vec<f64> = args
                .fractions
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|_| CliError::Config(format!("bad fraction {s:?}")))
                })
                .collect::<Result<_, _>>()?;
            if parts.len() != 3 {
                return Err(CliError::Config(
                    "--fractions needs exactly three values".into(),
                ));
            }
            SplitSpec::Uniform {
                fractions: (parts[0], parts[1], parts[2]),
                seed: args.seed,
            }
        }
    };
    Ok(dataset::split(catalog, &spec)?)
}

/// Sum-feature rows for the given curve ordinals in ordinal order.
fn feature_rows(
    catalog: &CurveCatalog,
    vectors: &[ApVector],
    table: &PrimeTable,
    spec: &SumInputSpec,
    ordinals: &[u32],
) -> Result<(Tensor, Vec<u8>), CliError> {
    let dim = spec.dim();
    let mut data = Vec::with_capacity(ordinals.len() * dim);
    let mut labels = Vec::with_capacity(ordinals.len());
    for &i in ordinals {
        let curve = &catalog.curves[i as usize];
        let f = features(&vectors[i as usize], curve, table, &spec.bounds)?;
        data.extend(spec.row(&f)?);
        labels.push(curve.rank);
    }
    Ok((Tensor::from_vec(vec![ordinals.len(), dim], data), labels))
}

/// aₚ/√p rows plus log₁₀N for the learned-sum graph.
fn ap_norm_rows(
    catalog: &CurveCatalog,
    vectors: &[ApVector],
    table: &PrimeTable,
    ordinals: &[u32],
) -> (Tensor, Vec<f64>, Vec<u8>) {
    let len = table.len();
    let inv_sqrt: Vec<f64> = table
        .primes()
        .iter()
        .map(|&p| 1.0 / (p as f64).sqrt())
        .collect();
    let mut data = Vec::with_capacity(ordinals.len() * len);
    let mut log10n = Vec::with_capacity(ordinals.len());
    let mut labels = Vec::with_capacity(ordinals.len());
    for &i in ordinals {
        let v = &vectors[i as usize];
        data.extend(v.values.iter().zip(&inv_sqrt).map(|(&a, s)| a as f64 * s));
        log10n.push((catalog.curves[i as usize].conductor as f64).log10());
        labels.push(catalog.curves[i as usize].rank);
    }
    (
        Tensor::from_vec(vec![ordinals.len(), len], data),
        log10n,
        labels,
    )
}

/// (S₀(10³), S₀(10⁵), rank) triples inside an optional conductor window.
fn sum_point_cloud(
    catalog: &CurveCatalog,
    vectors: &[ApVector],
    table: &PrimeTable,
    window: Option<(u64, u64)>,
) -> Result<SumPointCloud, CliError> {
    let mut points = Vec::new();
    for (curve, ap) in catalog.curves.iter().zip(vectors) {
        if let Some((lo, hi)) = window {
            if curve.conductor < lo || curve.conductor > hi {
                continue;
            }
        }
        let f = features(ap, curve, table, &[1_000, 100_000])?;
        points.push((f.s0[0], f.s0[1], curve.rank));
    }
    if points.is_empty() {
        return Err(CliError::Config(
            "no curves inside the requested conductor window".into(),
        ));
    }
    Ok(SumPointCloud { points })
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

fn cmd_ap(args: ApArgs) -> Result<(), CliError> {
    let catalog = dataset::load_catalog(&resolve_path(&args.curves), None)?;
    let table = sieve_primes(args.limit)?;
    let start = Instant::now();
    let mut vectors = Vec::with_capacity(catalog.len());
    for curve in &catalog.curves {
        vectors.push(ap_vector(curve, &table)?);
    }
    let secs = start.elapsed().as_secs_f64();
    write_ap_cache(&resolve_path(&args.out), &vectors)?;
    println!(
        "{} curves, {} primes < {}: {:.1} curves/sec",
        catalog.len(),
        table.len(),
        args.limit,
        catalog.len() as f64 / secs.max(1e-9)
    );
    Ok(())
}

fn cmd_sums(args: SumsArgs) -> Result<(), CliError> {
    let (catalog, vectors, table) = load_inputs(&args.curves, &args.cache)?;
    let bounds = parse_bounds(&args.bounds)?;
    let mut out = String::new();
    out.push_str("label");
    for &b in &bounds {
        let _ = write!(out, ",s0_{b}");
    }
    for &b in &bounds {
        let _ = write!(out, ",s5_{b}");
    }
    out.push_str(",log10_conductor,rank\n");
    for (curve, ap) in catalog.curves.iter().zip(&vectors) {
        let f = features(ap, curve, &table, &bounds)?;
        let _ = write!(out, "{}", curve.label.as_deref().unwrap_or(""));
        for v in f.s0.iter().chain(&f.s5) {
            let _ = write!(out, ",{v:.12e}");
        }
        let _ = writeln!(out, ",{:.12e},{}", f.log10_conductor, curve.rank);
    }
    std::fs::write(resolve_path(&args.out), out)?;
    println!("wrote {} feature rows", catalog.len());
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<(), CliError> {
    let (catalog, vectors, table) = load_inputs(&args.curves, &args.cache)?;
    let manifest = build_split(&catalog, &args.split)?;
    let classes = catalog.classes();

    let outcome: TrainOutcome = match args.model {
        ModelKind::SumMlp => {
            let spec = SumInputSpec {
                use_s0: args.input_sums.contains("s0"),
                use_s5: args.input_sums.contains("s5"),
                bounds: parse_bounds(&args.bounds)?,
            };
            let config = SumMlpConfig {
                input: spec.clone(),
                hidden_layers: args.hidden_layers,
                hidden_width: args.hidden_width,
                classes: classes.clone(),
                lr: args.lr.unwrap_or(1e-3),
                weight_decay: args.weight_decay,
                batch_size: args.batch_size.unwrap_or(1024),
                epochs: args.epochs.unwrap_or(50),
                seed: args.split.seed,
            };
            let (x_train, y_train) =
                feature_rows(&catalog, &vectors, &table, &spec, &manifest.train)?;
            let (x_val, y_val) =
                feature_rows(&catalog, &vectors, &table, &spec, &manifest.validation)?;
            train_sum_mlp(config, (&x_train, &y_train), (&x_val, &y_val))?
        }
        ModelKind::LearnedSum => {
            let conv_hidden: Vec<usize> = args
                .conv_hidden
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|_| CliError::Config(format!("bad channel width {s:?}")))
                })
                .collect::<Result<_, _>>()?;
            let config = LearnedSumConfig {
                conductor_dependent: args.conductor_dependent,
                prime_limit: table.limit(),
                conv_hidden,
                classes: classes.clone(),
                lr: args.lr.unwrap_or(1e-4),
                weight_decay: args.weight_decay,
                batch_size: args.batch_size.unwrap_or(256),
                epochs: args.epochs.unwrap_or(5),
                seed: args.split.seed,
                ..Default::default()
            };
            let (x_train, n_train, y_train) =
                ap_norm_rows(&catalog, &vectors, &table, &manifest.train);
            let (x_val, n_val, y_val) =
                ap_norm_rows(&catalog, &vectors, &table, &manifest.validation);
            train_learned_sum(
                config,
                (&x_train, &n_train, &y_train),
                (&x_val, &n_val, &y_val),
            )?
        }
    };

    let out = resolve_path(&args.out);
    save_checkpoint(&out, &outcome.checkpoint)?;
    let log_path = args
        .log
        .map(|p| resolve_path(&p))
        .unwrap_or_else(|| out.with_extension("log.jsonl"));
    let mut log = String::new();
    for entry in &outcome.log {
        let _ = writeln!(log, "{}", serde_json::to_string(entry).unwrap());
    }
    std::fs::write(&log_path, log)?;
    println!("best validation MCC {:.4}", outcome.best_val_mcc);
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<(), CliError> {
    let (catalog, vectors, table) = load_inputs(&args.curves, &args.cache)?;
    let ckpt = load_checkpoint(&resolve_path(&args.checkpoint))?;
    let ordinals: Vec<u32> = (0..catalog.len() as u32).collect();

    let (pred, classes, truth): (Vec<u8>, Vec<u8>, Vec<u8>) = match ckpt.meta["graph"].as_str() {
        Some("sum_mlp") => {
            let model = SumMlp::from_checkpoint(&ckpt)?;
            let (x, y) = feature_rows(
                &catalog,
                &vectors,
                &table,
                &model.config.input,
                &ordinals,
            )?;
            (model.predict(&x)?, model.config.classes.clone(), y)
        }
        Some("learned_sum") => {
            let model = LearnedSum::from_checkpoint(&ckpt)?;
            let (x, n, y) = ap_norm_rows(&catalog, &vectors, &table, &ordinals);
            (model.predict(&x, &n)?, model.config.classes.clone(), y)
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown checkpoint graph {other:?}"
            )))
        }
    };

    let cm = confusion(&truth, &pred, &classes)?;
    let score = mcc(&cm);
    let prefix = resolve_path(&args.out_prefix);
    std::fs::write(prefix.with_extension("csv"), report_csv(&cm, score))?;
    std::fs::write(prefix.with_extension("txt"), report_text(&cm, score))?;
    println!("MCC {score:.4}");
    Ok(())
}

fn cmd_regions(args: RegionsArgs) -> Result<(), CliError> {
    let (catalog, vectors, table) = load_inputs(&args.curves, &args.cache)?;
    let window = parse_window(&args.window)?;
    let cloud = sum_point_cloud(&catalog, &vectors, &table, window)?;
    let classes = cloud.classes();
    let (rules, score) = regions::fit(&cloud, &classes, args.seed)?;
    let (_, y_only) = regions::fit_y_only(&cloud, &classes)?;
    let json = serde_json::to_string_pretty(&rules)
        .map_err(|e| CliError::Runtime(format!("rule serialization: {e}")))?;
    std::fs::write(resolve_path(&args.out), json)?;
    println!("MCC {score:.4} (y-only threshold baseline {y_only:.4})");
    Ok(())
}

fn cmd_plotdata(args: PlotdataArgs) -> Result<(), CliError> {
    if args.resolution < 2 {
        return Err(CliError::Config("--resolution must be at least 2".into()));
    }
    let (catalog, vectors, table) = load_inputs(&args.curves, &args.cache)?;
    let window = parse_window(&args.window)?;
    let cloud = sum_point_cloud(&catalog, &vectors, &table, window)?;
    let classes = cloud.classes();
    let (rules, _) = regions::fit(&cloud, &classes, args.seed)?;

    let x_range = cloud
        .points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |acc, p| {
            (acc.0.min(p.0), acc.1.max(p.0))
        });
    let y_range = cloud
        .points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |acc, p| {
            (acc.0.min(p.1), acc.1.max(p.1))
        });
    let grid = regions::region_grid(
        |x, y| rules.classify(x, y),
        x_range,
        y_range,
        (args.resolution, args.resolution),
    )?;

    let prefix = resolve_path(&args.out_prefix);
    let stem = prefix.to_string_lossy().to_string();

    let mut scatter = String::from("s0_1000,s0_100000,rank\n");
    for &(x, y, r) in &cloud.points {
        let _ = writeln!(scatter, "{x:.12e},{y:.12e},{r}");
    }
    std::fs::write(format!("{stem}_scatter.csv"), scatter)?;

    let mut grid_csv = String::from("s0_1000,s0_100000,rank\n");
    for &(x, y, r) in &grid {
        let _ = writeln!(grid_csv, "{x:.12e},{y:.12e},{r}");
    }
    std::fs::write(format!("{stem}_grid.csv"), grid_csv)?;

    let mut plot = ScatterPlot::new("S0(10^3)", "S0(10^5)");
    plot.points = cloud.points.clone();
    plot.grid = grid;
    std::fs::write(format!("{stem}.svg"), plot.render())?;
    println!("wrote {} points", cloud.points.len());
    Ok(())
}
