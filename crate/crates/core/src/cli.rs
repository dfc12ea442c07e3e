//! Command-line surface. Every subcommand is a library function returning
//! the text it would write, so it can be tested without a process.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    error_metrics, flip_impacts, global_impact, hypercube_impacts, is_monotone, mean_cayley, AttributionTable,
    HypercubeFunction,
};
use crate::attribution::{Attribution, Method};
use crate::error::{Error, Result};
use crate::io;
use crate::model::{FeatureVector, TreeEnsemble};
use crate::pathdep::{oracle_values_many, WeightScheme};
use crate::scalar::Scalar;
use crate::synth::{self, RandomEnsembleSpec, SyntheticKind, SyntheticSpec};
use crate::traversal::OpCounter;

/// Agreement required between an algorithm and the oracle in `verify`.
pub const VERIFY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Float64,
    Rational,
}

#[derive(Debug, Parser)]
#[command(name = "tree-attrib", version, about = "Exact Shapley and Banzhaf attributions for tree ensembles")]
pub struct Cli {
    #[command(flatten)]
    pub config: RunConfig,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    /// Model JSON file.
    #[arg(long, global = true)]
    pub model: Option<PathBuf>,
    /// Dataset CSV with header f0..f{n-1}.
    #[arg(long, global = true)]
    pub data: Option<PathBuf>,
    /// Comma-separated method names.
    #[arg(long, global = true, value_delimiter = ',')]
    pub method: Vec<String>,
    #[arg(long, global = true, value_enum, default_value_t = Mode::Float64)]
    pub mode: Mode,
    /// Output file (stdout when absent); a directory for `synth`.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Worker threads for per-point parallelism.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Comma-separated ranking lengths for the Cayley distance.
    #[arg(long = "top-n", global = true, value_delimiter = ',')]
    pub top_n: Vec<usize>,
    #[arg(long, global = true, default_value_t = 3)]
    pub repeats: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: None,
            data: None,
            method: Vec::new(),
            mode: Mode::Float64,
            output: None,
            threads: 1,
            seed: 42,
            top_n: Vec::new(),
            repeats: 3,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Attribute every data row with one method.
    Explain,
    /// Check the algorithms against the brute-force oracle.
    Verify,
    /// Time the algorithms and count state operations.
    Bench(BenchArgs),
    /// Compare two attribution tables.
    Compare(CompareArgs),
    /// Global impacts of a Boolean function under several weightings.
    Hypercube(HypercubeArgs),
    /// Write a synthetic instance with a known exact answer.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Benchmark synthetic instances instead of --model.
    #[arg(long, value_parser = parse_kind)]
    pub kind: Option<SyntheticKind>,
    #[arg(long, value_delimiter = ',')]
    pub depths: Vec<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    pub first: PathBuf,
    pub second: PathBuf,
    /// Also write the per-feature table as CSV.
    #[arg(long)]
    pub tables: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct HypercubeArgs {
    /// JSON document `{"k": .., "table": [..]}`.
    #[arg(long)]
    pub function: PathBuf,
    /// Named schemes: shapley, banzhaf.
    #[arg(long, value_delimiter = ',', default_values_t = vec!["shapley".to_string(), "banzhaf".to_string()])]
    pub schemes: Vec<String>,
    /// Additional random per-size schemes drawn from --seed.
    #[arg(long, default_value_t = 0)]
    pub random_schemes: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, value_parser = parse_kind)]
    pub kind: SyntheticKind,
    #[arg(long)]
    pub depth: usize,
    /// Also write an error-vs-depth CSV over these depths.
    #[arg(long, value_delimiter = ',')]
    pub curve: Vec<usize>,
}

fn parse_kind(s: &str) -> std::result::Result<SyntheticKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_methods(names: &[String], default: &[Method]) -> Result<Vec<Method>> {
    if names.is_empty() {
        return Ok(default.to_vec());
    }
    names.iter().map(|n| n.parse()).collect()
}

fn require<'a>(path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    path.as_deref().ok_or_else(|| Error::Invalid(format!("--{flag} is required")))
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    if threads == 0 {
        return Err(Error::Invalid("--threads must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Invalid(format!("thread pool: {e}")))
}

/// Runs `method` on every row in parallel; output order follows the input.
fn explain_rows<T: Scalar>(
    method: Method,
    model: &TreeEnsemble,
    rows: &[FeatureVector],
    threads: usize,
) -> Result<Vec<(Attribution<T>, OpCounter)>> {
    pool(threads)?.install(|| rows.par_iter().map(|x| crate::explain::<T>(method, model, x)).collect())
}

/// Attribution CSV for every row of `--data`.
pub fn cmd_explain(cfg: &RunConfig) -> Result<String> {
    let model = TreeEnsemble::load(require(&cfg.model, "model")?)?;
    let rows = io::read_dataset(require(&cfg.data, "data")?, model.num_features())?;
    let methods = parse_methods(&cfg.method, &[Method::ShapleyFast])?;
    let [method] = methods[..] else {
        return Err(Error::Invalid("explain takes exactly one --method".into()));
    };
    let n = model.num_features();
    Ok(match cfg.mode {
        Mode::Float64 => {
            let out = explain_rows::<f64>(method, &model, &rows, cfg.threads)?;
            io::attribution_csv(&out.into_iter().map(|(a, _)| a).collect::<Vec<_>>(), n)
        }
        Mode::Rational => {
            let out = explain_rows::<BigRational>(method, &model, &rows, cfg.threads)?;
            io::attribution_csv(&out.into_iter().map(|(a, _)| a).collect::<Vec<_>>(), n)
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodCheck {
    pub method: String,
    /// `max |a − oracle| / max(1, max |oracle|)` over points.
    pub max_rel_deviation: f64,
    pub pass: bool,
    /// `holds` or `violated`: whether the values sum to `f(x) − E[f]`.
    pub efficiency: String,
    pub max_efficiency_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityCheck {
    pub unused_features: Vec<usize>,
    /// Largest `|φ|` any method gave an unused feature.
    pub max_abs: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub points: usize,
    pub relevant_features: usize,
    pub oracle_mode: Mode,
    pub tolerance: f64,
    pub methods: Vec<MethodCheck>,
    pub sensitivity: SensitivityCheck,
    pub pass: bool,
}

fn rel_deviation(a: &[f64], oracle: &[f64]) -> f64 {
    let scale = oracle.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    a.iter().zip(oracle).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

fn oracles<T: Scalar>(model: &TreeEnsemble, x: &FeatureVector) -> Result<(Attribution<f64>, Attribution<f64>, f64)> {
    let mut both = oracle_values_many::<T>(model, x, &[WeightScheme::Shapley, WeightScheme::Banzhaf])?;
    let b = both.pop().expect("two schemes");
    let s = both.pop().expect("two schemes");
    let gap = model.predict_as::<T>(x) - s.expected_value.clone();
    Ok((s.to_f64(), b.to_f64(), gap.to_f64()))
}

/// Sum of values minus `f(x) − E[f]`, computed in `T`.
fn efficiency_gap<T: Scalar>(model: &TreeEnsemble, x: &FeatureVector, a: &Attribution<T>) -> f64 {
    (a.sum() - (model.predict_as::<T>(x) - a.expected_value.clone())).to_f64().abs()
}

/// Verification model and points: from `--model`/`--data`, or a random
/// ensemble drawn from `--seed` with five random points.
fn verify_inputs(cfg: &RunConfig) -> Result<(TreeEnsemble, Vec<FeatureVector>)> {
    match &cfg.model {
        Some(path) => {
            let model = TreeEnsemble::load(path)?;
            let rows = io::read_dataset(require(&cfg.data, "data")?, model.num_features())?;
            Ok((model, rows))
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let spec = RandomEnsembleSpec {
                max_trees: 3,
                max_leaves: 16,
                max_relevant: 8,
                dead_features: 0,
                threshold_range: 8,
            };
            let model = synth::random_ensemble(&mut rng, &spec)?;
            let rows = (0..5).map(|_| synth::random_point(&mut rng, model.num_features(), 8)).collect();
            Ok((model, rows))
        }
    }
}

/// Runs the four algorithms and both oracles on every point.
pub fn cmd_verify(cfg: &RunConfig) -> Result<VerifyReport> {
    let (model, rows) = verify_inputs(cfg)?;
    let relevant = model.relevant_features();
    if relevant.len() > crate::pathdep::ORACLE_CAP {
        return Err(Error::OracleCap { count: relevant.len(), cap: crate::pathdep::ORACLE_CAP });
    }
    let exact_possible = model.check_integer_coverages().is_ok();
    let oracle_mode = if exact_possible { Mode::Rational } else { Mode::Float64 };
    let methods = parse_methods(&cfg.method, &Method::ALGORITHMS)?;
    let unused: Vec<usize> = (0..model.num_features()).filter(|f| relevant.binary_search(f).is_err()).collect();

    let mut checks: Vec<MethodCheck> = methods
        .iter()
        .map(|m| MethodCheck {
            method: m.name().to_string(),
            max_rel_deviation: 0.0,
            pass: true,
            efficiency: "holds".into(),
            max_efficiency_gap: 0.0,
        })
        .collect();
    let mut sensitivity_max = 0.0f64;
    for x in &rows {
        let (os, ob, _) = match oracle_mode {
            Mode::Rational => oracles::<BigRational>(&model, x)?,
            Mode::Float64 => oracles::<f64>(&model, x)?,
        };
        for (check, &method) in checks.iter_mut().zip(&methods) {
            let (values, gap) = match cfg.mode {
                Mode::Float64 => {
                    let (a, _) = crate::explain::<f64>(method, &model, x)?;
                    (a.values.clone(), efficiency_gap(&model, x, &a))
                }
                Mode::Rational => {
                    let (a, _) = crate::explain::<BigRational>(method, &model, x)?;
                    (a.to_f64().values, efficiency_gap(&model, x, &a))
                }
            };
            let oracle = if method.is_shapley() { &os } else { &ob };
            check.max_rel_deviation = check.max_rel_deviation.max(rel_deviation(&values, &oracle.values));
            check.max_efficiency_gap = check.max_efficiency_gap.max(gap);
            for &f in &unused {
                sensitivity_max = sensitivity_max.max(values[f].abs());
            }
        }
    }
    let efficiency_tol = if cfg.mode == Mode::Rational { 0.0 } else { VERIFY_TOLERANCE };
    for check in &mut checks {
        check.pass = check.max_rel_deviation <= VERIFY_TOLERANCE;
        if check.max_efficiency_gap > efficiency_tol {
            check.efficiency = "violated".into();
        }
    }
    let shapley_efficient =
        checks.iter().zip(&methods).filter(|(_, m)| m.is_shapley()).all(|(c, _)| c.efficiency == "holds");
    let sensitivity =
        SensitivityCheck { unused_features: unused, max_abs: sensitivity_max, pass: sensitivity_max == 0.0 };
    let pass = checks.iter().all(|c| c.pass) && shapley_efficient && sensitivity.pass;
    Ok(VerifyReport {
        points: rows.len(),
        relevant_features: relevant.len(),
        oracle_mode,
        tolerance: VERIFY_TOLERANCE,
        methods: checks,
        sensitivity,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchRow {
    pub method: Method,
    pub depth: usize,
    pub leaves: usize,
    pub wall_ns: u128,
    pub ops: OpCounter,
}

fn bench_one(method: Method, model: &TreeEnsemble, rows: &[FeatureVector], repeats: usize) -> Result<BenchRow> {
    let mut best = u128::MAX;
    let mut ops = OpCounter::default();
    for _ in 0..repeats {
        let start = Instant::now();
        let mut total = OpCounter::default();
        for x in rows {
            let (_, c) = crate::explain::<f64>(method, model, x)?;
            total.add_count += c.add_count;
            total.del_count += c.del_count;
            total.scale_count += c.scale_count;
            total.add_ops += c.add_ops;
            total.del_ops += c.del_ops;
            total.scale_ops += c.scale_ops;
        }
        best = best.min(start.elapsed().as_nanos());
        ops = total;
    }
    Ok(BenchRow { method, depth: model.max_depth(), leaves: model.total_leaves(), wall_ns: best, ops })
}

/// Minimum wall time over `--repeats` runs and the operation counts, per
/// method and instance.
pub fn bench_rows(cfg: &RunConfig, args: &BenchArgs) -> Result<Vec<BenchRow>> {
    if cfg.repeats == 0 {
        return Err(Error::Invalid("--repeats must be at least 1".into()));
    }
    let methods = parse_methods(&cfg.method, &Method::ALGORITHMS)?;
    let mut instances = Vec::new();
    match args.kind {
        Some(kind) => {
            if args.depths.is_empty() {
                return Err(Error::Invalid("--depths is required with --kind".into()));
            }
            for &d in &args.depths {
                let inst = synth::gen_synthetic(SyntheticSpec::new(kind, d)?)?;
                instances.push((inst.model, vec![inst.x]));
            }
        }
        None => {
            let model = TreeEnsemble::load(require(&cfg.model, "model")?)?;
            let rows = io::read_dataset(require(&cfg.data, "data")?, model.num_features())?;
            instances.push((model, rows));
        }
    }
    let mut out = Vec::new();
    for (model, rows) in &instances {
        for &m in &methods {
            out.push(bench_one(m, model, rows, cfg.repeats)?);
        }
    }
    Ok(out)
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut s = String::from("method,depth,L,wall_ns,add_ops,del_ops,scale_ops\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.method, r.depth, r.leaves, r.wall_ns, r.ops.add_ops, r.ops.del_ops, r.ops.scale_ops
        ));
    }
    s
}

pub fn cmd_bench(cfg: &RunConfig, args: &BenchArgs) -> Result<String> {
    Ok(bench_csv(&bench_rows(cfg, args)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSummary {
    pub label: String,
    pub global_impact: Vec<f64>,
    pub mean_impact: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CayleyEntry {
    pub top_n: usize,
    pub mean_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub rows: usize,
    pub features: usize,
    pub tables: [TableSummary; 2],
    pub mae: Vec<f64>,
    pub rmse: Vec<f64>,
    pub cayley: Vec<CayleyEntry>,
}

pub fn compare_tables(a: &AttributionTable, b: &AttributionTable, top_n: &[usize]) -> Result<CompareReport> {
    let metrics = error_metrics(a, b)?;
    let summary = |t: &AttributionTable| -> Result<TableSummary> {
        let g = global_impact(t)?;
        Ok(TableSummary { label: t.method.clone(), mean_impact: g.mean(), global_impact: g.totals })
    };
    let top_n: Vec<usize> = if top_n.is_empty() { vec![a.num_features().min(5)] } else { top_n.to_vec() };
    let cayley = top_n
        .iter()
        .map(|&n| Ok(CayleyEntry { top_n: n, mean_distance: mean_cayley(a, b, n)? }))
        .collect::<Result<Vec<_>>>()?;
    Ok(CompareReport {
        rows: a.num_rows(),
        features: a.num_features(),
        tables: [summary(a)?, summary(b)?],
        mae: metrics.iter().map(|m| m.mae).collect(),
        rmse: metrics.iter().map(|m| m.rmse).collect(),
        cayley,
    })
}

/// `feature,impact_a,impact_b,mae,rmse` rows of a comparison.
pub fn compare_csv(r: &CompareReport) -> String {
    let mut s = String::from("feature,impact_a,impact_b,mae,rmse\n");
    for i in 0..r.features {
        s.push_str(&format!(
            "{i},{},{},{},{}\n",
            r.tables[0].global_impact[i], r.tables[1].global_impact[i], r.mae[i], r.rmse[i]
        ));
    }
    s
}

pub fn cmd_compare(cfg: &RunConfig, args: &CompareArgs) -> Result<CompareReport> {
    let a = io::read_attribution_table(&args.first)?;
    let b = io::read_attribution_table(&args.second)?;
    compare_tables(&a, &b, &cfg.top_n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypercubeDoc {
    pub k: usize,
    pub table: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeImpact {
    pub scheme: String,
    pub weights: Vec<f64>,
    pub omega: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypercubeReport {
    pub k: usize,
    pub monotone: Vec<bool>,
    pub all_monotone: bool,
    /// `½ Σ_x |f(x) − f(x with bit i flipped)|`.
    pub flip_impact: Vec<f64>,
    pub schemes: Vec<SchemeImpact>,
    /// Largest `|Ω_i(w) − Ω_i(w')|` over scheme pairs and features.
    pub max_cross_scheme_deviation: f64,
}

pub fn hypercube_report(f: &HypercubeFunction, schemes: &[(String, WeightScheme)]) -> Result<HypercubeReport> {
    let monotone = is_monotone(f);
    let mut impacts = Vec::new();
    for (name, scheme) in schemes {
        let weights = crate::pathdep::subset_weights::<f64>(scheme, f.k().max(1))?;
        impacts.push(SchemeImpact { scheme: name.clone(), weights, omega: hypercube_impacts(f, scheme)? });
    }
    let mut dev = 0.0f64;
    for a in &impacts {
        for b in &impacts {
            for (x, y) in a.omega.iter().zip(&b.omega) {
                dev = dev.max((x - y).abs());
            }
        }
    }
    Ok(HypercubeReport {
        k: f.k(),
        all_monotone: monotone.iter().all(|&m| m),
        monotone,
        flip_impact: flip_impacts(f),
        schemes: impacts,
        max_cross_scheme_deviation: dev,
    })
}

pub fn cmd_hypercube(cfg: &RunConfig, args: &HypercubeArgs) -> Result<HypercubeReport> {
    let text = std::fs::read(&args.function).map_err(|source| Error::Io { path: args.function.clone(), source })?;
    let doc: HypercubeDoc =
        serde_json::from_slice(&text).map_err(|e| Error::Invalid(format!("hypercube function: {e}")))?;
    let f = HypercubeFunction::new(doc.k, doc.table)?;
    let mut schemes = Vec::new();
    for name in &args.schemes {
        let scheme = match name.as_str() {
            "shapley" => WeightScheme::Shapley,
            "banzhaf" => WeightScheme::Banzhaf,
            other => return Err(Error::Invalid(format!("unknown scheme `{other}` (shapley|banzhaf)"))),
        };
        schemes.push((name.clone(), scheme));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for j in 0..args.random_schemes {
        schemes.push((format!("random_{j}"), synth::random_per_size_weights(&mut rng, f.k().max(1))));
    }
    hypercube_report(&f, &schemes)
}

/// Exact answer file for a synthetic instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactDoc {
    pub kind: String,
    pub d: usize,
    pub expected_value: String,
    /// `f{j}` to `p/q`.
    pub phi: std::collections::BTreeMap<String, String>,
}

/// Files written by `synth`, as (file name, contents).
pub fn synth_files(args: &SynthArgs) -> Result<Vec<(String, String)>> {
    let inst = synth::gen_synthetic(SyntheticSpec::new(args.kind, args.depth)?)?;
    let d = args.depth;
    let exact = ExactDoc {
        kind: args.kind.name().to_string(),
        d,
        expected_value: inst.exact.expected_value.to_text(),
        phi: inst.exact.values.iter().enumerate().map(|(j, v)| (format!("f{j}"), v.to_text())).collect(),
    };
    let mut files = vec![
        ("model.json".to_string(), inst.model.to_json()),
        ("data.csv".to_string(), io::dataset_csv(std::slice::from_ref(&inst.x), d)),
        ("exact.json".to_string(), serde_json::to_string_pretty(&exact).expect("serializable") + "\n"),
    ];
    if !args.curve.is_empty() {
        let pts = synth::error_curve(args.kind, &args.curve, &Method::ALGORITHMS)?;
        files.push(("error_curve.csv".to_string(), synth::error_curve_csv(&pts)));
    }
    Ok(files)
}

pub fn cmd_synth(cfg: &RunConfig, args: &SynthArgs) -> Result<Vec<PathBuf>> {
    let dir = require(&cfg.output, "output")?;
    let files = synth_files(args)?;
    std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_owned(), source })?;
    let mut written = Vec::new();
    for (name, contents) in files {
        let path = dir.join(name);
        io::emit(Some(&path), &contents)?;
        written.push(path);
    }
    Ok(written)
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

/// Dispatches a parsed command line. Returns `false` when a verification
/// ran but did not pass.
pub fn run(cli: &Cli) -> Result<bool> {
    let cfg = &cli.config;
    let out = cfg.output.as_deref();
    match &cli.command {
        Command::Explain => io::emit(out, &cmd_explain(cfg)?)?,
        Command::Verify => {
            let report = cmd_verify(cfg)?;
            io::emit(out, &json(&report))?;
            return Ok(report.pass);
        }
        Command::Bench(args) => io::emit(out, &cmd_bench(cfg, args)?)?,
        Command::Compare(args) => {
            let report = cmd_compare(cfg, args)?;
            if let Some(path) = &args.tables {
                io::emit(Some(path), &compare_csv(&report))?;
            }
            io::emit(out, &json(&report))?;
        }
        Command::Hypercube(args) => io::emit(out, &json(&cmd_hypercube(cfg, args)?))?,
        Command::Synth(args) => {
            for path in cmd_synth(cfg, args)? {
                eprintln!("wrote {}", path.display());
            }
        }
    }
    Ok(true)
}
