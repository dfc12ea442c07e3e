//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tree_attrib::analysis::{
    error_metrics, flip_impacts, global_impact, hypercube_impacts, modified_cayley, AttributionTable, ErrorMetric,
};
use tree_attrib::pathdep::oracle_values_many;
use tree_attrib::synth::{
    error_curve, gen_synthetic, random_ensemble, random_monotone, random_per_size_weights, random_point,
    RandomEnsembleSpec, SyntheticKind, SyntheticSpec,
};
use tree_attrib::{explain, FeatureVector, Method, Scalar, TreeEnsemble, WeightScheme};

const ENSEMBLES: usize = 500;
const POINTS: usize = 20;
const SUITE_SEED: u64 = 20240601;

struct Instance {
    model: TreeEnsemble,
    points: Vec<FeatureVector>,
}

struct SuiteStats {
    runtime: Duration,
    max_rel: [f64; 4],
    basic_fast_shapley: f64,
    basic_fast_banzhaf: f64,
    efficiency_float: f64,
    unused_max_abs: f64,
    unused_checked: usize,
}

fn instances() -> &'static [Instance] {
    static CELL: OnceLock<Vec<Instance>> = OnceLock::new();
    CELL.get_or_init(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED);
        (0..ENSEMBLES)
            .map(|_| {
                let spec = RandomEnsembleSpec { dead_features: rng.gen_range(0..=2), ..Default::default() };
                let model = random_ensemble(&mut rng, &spec).unwrap();
                let points =
                    (0..POINTS).map(|_| random_point(&mut rng, model.num_features(), spec.threshold_range)).collect();
                Instance { model, points }
            })
            .collect()
    })
}

fn rel(a: &[f64], oracle: &[f64]) -> f64 {
    let scale = oracle.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    a.iter().zip(oracle).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// The criterion-1 workload, timed: rational oracles plus the four float
/// algorithms on every instance and point.
fn suite() -> &'static SuiteStats {
    static CELL: OnceLock<SuiteStats> = OnceLock::new();
    CELL.get_or_init(|| {
        let insts = instances();
        let start = Instant::now();
        let mut s = SuiteStats {
            runtime: Duration::ZERO,
            max_rel: [0.0; 4],
            basic_fast_shapley: 0.0,
            basic_fast_banzhaf: 0.0,
            efficiency_float: 0.0,
            unused_max_abs: 0.0,
            unused_checked: 0,
        };
        for inst in insts {
            let m = &inst.model;
            let relevant = m.relevant_features();
            let unused: Vec<usize> = (0..m.num_features()).filter(|f| !relevant.contains(f)).collect();
            for x in &inst.points {
                let both =
                    oracle_values_many::<BigRational>(m, x, &[WeightScheme::Shapley, WeightScheme::Banzhaf]).unwrap();
                let (os, ob) = (both[0].to_f64(), both[1].to_f64());
                let runs: Vec<Vec<f64>> =
                    Method::ALGORITHMS.iter().map(|&method| explain::<f64>(method, m, x).unwrap().0.values).collect();
                for (j, (values, method)) in runs.iter().zip(Method::ALGORITHMS).enumerate() {
                    let oracle = if method.is_shapley() { &os } else { &ob };
                    s.max_rel[j] = s.max_rel[j].max(rel(values, &oracle.values));
                    for &f in &unused {
                        s.unused_max_abs = s.unused_max_abs.max(values[f].abs());
                    }
                }
                for &f in &unused {
                    s.unused_max_abs = s.unused_max_abs.max(os.values[f].abs()).max(ob.values[f].abs());
                }
                s.unused_checked += unused.len();
                s.basic_fast_shapley = s.basic_fast_shapley.max(max_abs_diff(&runs[0], &runs[1]));
                s.basic_fast_banzhaf = s.basic_fast_banzhaf.max(max_abs_diff(&runs[2], &runs[3]));
                let gap = m.predict(x) - os.expected_value;
                for values in &runs[..2] {
                    let sum: f64 = values.iter().sum();
                    s.efficiency_float = s.efficiency_float.max((sum - gap).abs());
                }
            }
        }
        s.runtime = start.elapsed();
        s
    })
}

fn criterion_1() -> (bool, String) {
    let s = suite();
    let worst = s.max_rel.iter().cloned().fold(0.0, f64::max);
    let ok = worst <= 1e-9 && s.runtime < Duration::from_secs(120);
    let detail = format!(
        "max rel error {:.3e} (shapley_basic {:.2e}, shapley_fast {:.2e}, banzhaf_basic {:.2e}, banzhaf_fast {:.2e}) \
         over {} ensembles x {} points in {:.1}s",
        worst,
        s.max_rel[0],
        s.max_rel[1],
        s.max_rel[2],
        s.max_rel[3],
        ENSEMBLES,
        POINTS,
        s.runtime.as_secs_f64()
    );
    (ok, detail)
}

fn criterion_2() -> (bool, String) {
    let s = suite();
    let ok = s.basic_fast_shapley <= 1e-9 && s.basic_fast_banzhaf <= 1e-12;
    (ok, format!("shapley basic/fast {:.3e}, banzhaf basic/fast {:.3e}", s.basic_fast_shapley, s.basic_fast_banzhaf))
}

fn criterion_3() -> (bool, String) {
    let s = suite();
    let mut exact_failures = 0usize;
    let mut checked = 0usize;
    for inst in instances() {
        let m = &inst.model;
        for x in &inst.points {
            let prediction: BigRational = m.predict_as(x);
            for method in [Method::ShapleyBasic, Method::ShapleyFast] {
                let (a, _) = explain::<BigRational>(method, m, x).unwrap();
                if a.sum() != prediction.clone() - a.expected_value.clone() {
                    exact_failures += 1;
                }
                checked += 1;
            }
        }
    }
    let ok = exact_failures == 0 && s.efficiency_float <= 1e-9;
    (
        ok,
        format!(
            "rational: {exact_failures} inexact of {checked}; float max |sum - (f(x) - E)| = {:.3e}",
            s.efficiency_float
        ),
    )
}

fn criterion_4() -> (bool, String) {
    let s = suite();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    // exact runs on models with several unused columns
    let mut exact_max = 0.0f64;
    for _ in 0..50 {
        let spec = RandomEnsembleSpec { dead_features: 3, ..Default::default() };
        let m = random_ensemble(&mut rng, &spec).unwrap();
        let x = random_point(&mut rng, m.num_features(), spec.threshold_range);
        let relevant = m.relevant_features();
        for method in Method::ALGORITHMS {
            let (a, _) = explain::<BigRational>(method, &m, &x).unwrap();
            for f in (0..m.num_features()).filter(|f| !relevant.contains(f)) {
                exact_max = exact_max.max(a.values[f].to_f64().abs());
            }
        }
    }
    let ok = s.unused_checked > 0 && s.unused_max_abs == 0.0 && exact_max == 0.0;
    (
        ok,
        format!(
            "{} unused-feature checks in float, max |phi| = {}; rational max |phi| = {}",
            s.unused_checked, s.unused_max_abs, exact_max
        ),
    )
}

fn criterion_5() -> (bool, String) {
    let mut mismatches = Vec::new();
    let mut runs = 0;
    for kind in [SyntheticKind::Dense, SyntheticKind::Sparse] {
        for d in 2..=12 {
            let inst = gen_synthetic(SyntheticSpec::new(kind, d).unwrap()).unwrap();
            let mut expected = vec![BigRational::from_usize(0); d];
            expected[d - 1] = BigRational::new(777.into(), 2.into());
            for method in Method::ALGORITHMS {
                let (a, _) = explain::<BigRational>(method, &inst.model, &inst.x).unwrap();
                runs += 1;
                if a.values != expected {
                    mismatches.push(format!("{} d={d} {method}", kind.name()));
                }
            }
        }
    }
    (mismatches.is_empty(), format!("{runs} rational runs, mismatches: {mismatches:?}"))
}

fn criterion_6() -> (bool, String) {
    let start = Instant::now();
    let shap = [Method::ShapleyBasic, Method::ShapleyFast];
    let pts = error_curve(SyntheticKind::Sparse, &[40, 50, 60], &shap).unwrap();
    let err = |d: usize, m: Method| pts.iter().find(|p| p.depth == d && p.method == m).unwrap().max_abs_error;
    let mut shapley_ok = false;
    let mut parts = Vec::new();
    for m in shap {
        let (e40, e50, e60) = (err(40, m), err(50, m), err(60, m));
        let ok = e40.max(e50).max(e60) >= 0.1 && e40 < e50 && e50 < e60 && e60 >= 10.0 * e40;
        shapley_ok |= ok;
        parts.push(format!("{m}: {e40:.2e} / {e50:.2e} / {e60:.2e}"));
    }
    let depths: Vec<usize> = (1..=60).collect();
    let banzhaf = error_curve(SyntheticKind::Sparse, &depths, &[Method::BanzhafFast]).unwrap();
    let banzhaf_max = banzhaf.iter().map(|p| p.max_abs_error).fold(0.0, f64::max);
    let elapsed = start.elapsed();
    let ok = shapley_ok && banzhaf_max <= 1e-6 && elapsed < Duration::from_secs(10);
    (
        ok,
        format!(
            "errors at depth 40/50/60: {}; banzhaf_fast max over depths 1..60 = {banzhaf_max:.2e}; {:.2}s",
            parts.join(", "),
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_7() -> (bool, String) {
    let start = Instant::now();
    let depths = [10usize, 20, 40, 80];
    let targets = [(Method::ShapleyBasic, 8.0), (Method::ShapleyFast, 4.0), (Method::BanzhafFast, 2.0)];
    let insts: Vec<_> =
        depths.iter().map(|&d| gen_synthetic(SyntheticSpec::new(SyntheticKind::Sparse, d).unwrap()).unwrap()).collect();
    let mut ok = true;
    let mut parts = Vec::new();
    for (method, target) in targets {
        let ops: Vec<u64> =
            insts.iter().map(|i| explain::<f64>(method, &i.model, &i.x).unwrap().1.total_ops()).collect();
        let ratios: Vec<f64> = ops.windows(2).map(|w| w[1] as f64 / w[0] as f64).collect();
        ok &= ratios.iter().all(|r| (r / target - 1.0).abs() <= 0.3);
        parts.push(format!(
            "{method} (target {target}x): {}",
            ratios.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>().join(", ")
        ));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(30);
    (ok, format!("per-doubling op ratios {}; {:.2}s", parts.join("; "), elapsed.as_secs_f64()))
}

fn criterion_8() -> (bool, String) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst_pair = 0.0f64;
    let mut worst_closed = 0.0f64;
    for _ in 0..100 {
        let k = rng.gen_range(2..=8);
        let f = random_monotone(&mut rng, k).unwrap();
        let mut schemes = vec![WeightScheme::Shapley, WeightScheme::Banzhaf];
        schemes.extend((0..5).map(|_| random_per_size_weights(&mut rng, k)));
        let omegas: Vec<Vec<f64>> = schemes.iter().map(|s| hypercube_impacts(&f, s).unwrap()).collect();
        let closed = flip_impacts(&f);
        for a in &omegas {
            worst_closed = worst_closed.max(max_abs_diff(a, &closed));
            for b in &omegas {
                worst_pair = worst_pair.max(max_abs_diff(a, b));
            }
        }
    }
    let elapsed = start.elapsed();
    let ok = worst_pair <= 1e-9 && worst_closed <= 1e-9 && elapsed < Duration::from_secs(60);
    (
        ok,
        format!(
            "100 functions x 7 schemes: max pairwise {worst_pair:.2e}, max vs closed form {worst_closed:.2e}; {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn table(rows: &[&[f64]]) -> AttributionTable {
    AttributionTable::from_rows("t", rows.iter().map(|r| r.to_vec()).collect()).unwrap()
}

fn criterion_9() -> (bool, String) {
    let mut failed = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            failed.push(name.to_string());
        }
    };
    check("impact single row", global_impact(&table(&[&[1.0, -2.0, 0.0]])).unwrap().totals == [1.0, 2.0, 0.0]);
    check("impact cancelling rows", global_impact(&table(&[&[1.0, 0.0], &[-1.0, 0.0]])).unwrap().totals == [2.0, 0.0]);
    check("impact two rows", global_impact(&table(&[&[0.5, 0.5], &[0.5, -1.5]])).unwrap().totals == [1.0, 2.0]);
    let a = table(&[&[1.0], &[3.0]]);
    check("metrics identical", error_metrics(&a, &a).unwrap() == [ErrorMetric { mae: 0.0, rmse: 0.0 }]);
    check(
        "metrics two rows",
        error_metrics(&a, &table(&[&[0.0], &[0.0]])).unwrap() == [ErrorMetric { mae: 2.0, rmse: 5f64.sqrt() }],
    );
    check(
        "metrics single row",
        error_metrics(&table(&[&[2.0]]), &table(&[&[-2.0]])).unwrap() == [ErrorMetric { mae: 4.0, rmse: 4.0 }],
    );
    let v = [4.0, 3.0, 2.0, 1.0];
    check("cayley identical", modified_cayley(&v, &v, 3).unwrap() == 0);
    check("cayley transposition", modified_cayley(&v, &[3.0, 4.0, 2.0, 1.0], 3).unwrap() == 1);
    check("cayley swapped in/out", modified_cayley(&v, &[4.0, 3.0, 1.0, 2.0], 3).unwrap() == 1);
    (failed.is_empty(), format!("9 metric examples, failed: {failed:?}"))
}

fn criterion_10() -> (bool, String) {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let spec = RandomEnsembleSpec { dead_features: 1, ..Default::default() };
    let model = random_ensemble(&mut rng, &spec).unwrap();
    let rows: Vec<FeatureVector> =
        (0..300).map(|_| random_point(&mut rng, model.num_features(), spec.threshold_range)).collect();
    let model_path = dir.path().join("model.json");
    let data_path = dir.path().join("data.csv");
    std::fs::write(&model_path, model.to_json()).unwrap();
    std::fs::write(&data_path, tree_attrib::io::dataset_csv(&rows, model.num_features())).unwrap();
    let mut identical = true;
    let mut sizes = Vec::new();
    for method in Method::ALGORITHMS {
        let run = |threads: &str| {
            let out = Command::new(env!("CARGO_BIN_EXE_tree-attrib"))
                .args(["explain", "--method", method.name(), "--threads", threads])
                .arg("--model")
                .arg(&model_path)
                .arg("--data")
                .arg(&data_path)
                .output()
                .unwrap();
            assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
            out.stdout
        };
        let (one, eight) = (run("1"), run("8"));
        identical &= one == eight && !one.is_empty();
        sizes.push(one.len());
    }
    (identical, format!("4 methods x 300 rows, --threads 1 vs 8 byte-identical: {identical} (sizes {sizes:?})"))
}

type Criterion = fn() -> (bool, String);

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 10] = [
        ("oracle equivalence", criterion_1),
        ("basic/fast consistency", criterion_2),
        ("efficiency", criterion_3),
        ("sensitivity", criterion_4),
        ("synthetic exactness", criterion_5),
        ("numerical breakdown", criterion_6),
        ("operation-count scaling", criterion_7),
        ("monotone hypercube", criterion_8),
        ("metric examples", criterion_9),
        ("determinism", criterion_10),
    ];
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let (ok, detail) = match catch_unwind(AssertUnwindSafe(f)) {
            Ok(r) => r,
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                (false, format!("panicked: {msg}"))
            }
        };
        failures += usize::from(!ok);
        println!("criterion {:>2} {:<24} {}  {detail}", i + 1, name, if ok { "PASS" } else { "FAIL" });
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
