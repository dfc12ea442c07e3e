//! Generated models: the single-tree instances with a known exact answer,
//! random ensembles for oracle checks, and random hypercube functions.

use std::fmt::Write as _;

use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::analysis::HypercubeFunction;
use crate::attribution::{Attribution, Method};
use crate::error::{Error, Result};
use crate::model::{Aggregation, Tree, TreeEnsemble, TreeNode};
use crate::pathdep::{binomial, WeightScheme};
use crate::FeatureVector;

pub const LEAF_COVERAGE: f64 = 33.0;
pub const RIGHT_VALUE: f64 = 777.0;
pub const DENSE_MAX_DEPTH: usize = 24;
pub const SPARSE_MAX_DEPTH: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SyntheticKind {
    /// Complete binary tree with `2^d` leaves.
    Dense,
    /// Root over two caterpillars; `2d` leaves.
    Sparse,
}

impl SyntheticKind {
    pub fn name(self) -> &'static str {
        match self {
            SyntheticKind::Dense => "dense",
            SyntheticKind::Sparse => "sparse",
        }
    }

    pub fn max_depth(self) -> usize {
        match self {
            SyntheticKind::Dense => DENSE_MAX_DEPTH,
            SyntheticKind::Sparse => SPARSE_MAX_DEPTH,
        }
    }
}

impl std::str::FromStr for SyntheticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense" => Ok(SyntheticKind::Dense),
            "sparse" => Ok(SyntheticKind::Sparse),
            other => Err(Error::Invalid(format!("unknown synthetic kind `{other}` (dense|sparse)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticSpec {
    pub kind: SyntheticKind,
    /// Tree depth, which is also the number of features.
    pub d: usize,
}

impl SyntheticSpec {
    pub fn new(kind: SyntheticKind, d: usize) -> Result<Self> {
        if d == 0 || d > kind.max_depth() {
            return Err(Error::Invalid(format!("{} depth must be in 1..={}, got {d}", kind.name(), kind.max_depth())));
        }
        Ok(SyntheticSpec { kind, d })
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticInstance {
    pub model: TreeEnsemble,
    pub x: FeatureVector,
    /// The attribution every method must return: `777/2` on the root feature.
    pub exact: Attribution<BigRational>,
}

/// Builds the subtree of a node at `depth`, appending nodes in preorder.
/// Returns the coverage of the subtree root.
fn build(nodes: &mut Vec<TreeNode>, kind: SyntheticKind, d: usize, depth: usize, value: f64) -> f64 {
    let me = nodes.len();
    if depth == d {
        nodes.push(TreeNode::Leaf { value, coverage: LEAF_COVERAGE });
        return LEAF_COVERAGE;
    }
    nodes.push(TreeNode::Leaf { value, coverage: 0.0 });
    let left = nodes.len();
    let (lc, right, rc) = match kind {
        SyntheticKind::Dense => {
            let lc = build(nodes, kind, d, depth + 1, value);
            let right = nodes.len();
            (lc, right, build(nodes, kind, d, depth + 1, value))
        }
        SyntheticKind::Sparse if depth > 0 => {
            nodes.push(TreeNode::Leaf { value, coverage: LEAF_COVERAGE });
            let right = nodes.len();
            (LEAF_COVERAGE, right, build(nodes, kind, d, depth + 1, value))
        }
        SyntheticKind::Sparse => {
            let lc = build(nodes, kind, d, 1, 0.0);
            let right = nodes.len();
            (lc, right, build(nodes, kind, d, 1, RIGHT_VALUE))
        }
    };
    let coverage = lc + rc;
    nodes[me] = TreeNode::Split { feature: d - 1 - depth, threshold: 1.0, left, right, coverage };
    coverage
}

pub fn gen_synthetic(spec: SyntheticSpec) -> Result<SyntheticInstance> {
    let SyntheticSpec { kind, d } = SyntheticSpec::new(spec.kind, spec.d)?;
    let mut nodes = Vec::new();
    match kind {
        SyntheticKind::Dense => {
            // root children carry different constants
            nodes.push(TreeNode::Leaf { value: 0.0, coverage: 0.0 });
            let left = nodes.len();
            let lc = build(&mut nodes, kind, d, 1, 0.0);
            let right = nodes.len();
            let rc = build(&mut nodes, kind, d, 1, RIGHT_VALUE);
            nodes[0] = TreeNode::Split { feature: d - 1, threshold: 1.0, left, right, coverage: lc + rc };
        }
        SyntheticKind::Sparse => {
            build(&mut nodes, kind, d, 0, 0.0);
        }
    }
    let model = TreeEnsemble::from_nodes(vec![nodes], d, Aggregation::Average)?;
    let x = FeatureVector::new(vec![1.0; d])?;
    let half = BigRational::new(777.into(), 2.into());
    let mut values = vec![BigRational::from_integer(0.into()); d];
    values[d - 1] = half.clone();
    let exact = Attribution { values, expected_value: half, method: Method::OracleShapley };
    Ok(SyntheticInstance { model, x, exact })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorCurvePoint {
    pub depth: usize,
    pub method: Method,
    pub max_abs_error: f64,
}

/// Runs each method in `f64` on each synthetic instance and reports the
/// largest absolute deviation from the exact attribution.
pub fn error_curve(kind: SyntheticKind, depths: &[usize], methods: &[Method]) -> Result<Vec<ErrorCurvePoint>> {
    let mut out = Vec::with_capacity(depths.len() * methods.len());
    for &d in depths {
        let inst = gen_synthetic(SyntheticSpec::new(kind, d)?)?;
        let exact = inst.exact.to_f64();
        for &method in methods {
            let (a, _) = crate::explain::<f64>(method, &inst.model, &inst.x)?;
            let max_abs_error = a.values.iter().zip(&exact.values).map(|(v, e)| (v - e).abs()).fold(0.0, f64::max);
            out.push(ErrorCurvePoint { depth: d, method, max_abs_error });
        }
    }
    Ok(out)
}

pub fn error_curve_csv(points: &[ErrorCurvePoint]) -> String {
    let mut s = String::from("depth,method,max_abs_error\n");
    for p in points {
        writeln!(s, "{},{},{}", p.depth, p.method, p.max_abs_error).expect("write to string");
    }
    s
}

/// Shape of the random ensembles drawn by [`random_ensemble`].
#[derive(Debug, Clone, PartialEq)]
pub struct RandomEnsembleSpec {
    pub max_trees: usize,
    pub max_leaves: usize,
    /// Features that split nodes may use.
    pub max_relevant: usize,
    /// Extra feature columns that no split uses.
    pub dead_features: usize,
    /// Thresholds are drawn from `1..threshold_range` so points can hit them exactly.
    pub threshold_range: u32,
}

impl Default for RandomEnsembleSpec {
    fn default() -> Self {
        RandomEnsembleSpec { max_trees: 5, max_leaves: 32, max_relevant: 10, dead_features: 0, threshold_range: 8 }
    }
}

fn random_tree<R: Rng>(
    rng: &mut R,
    spec: &RandomEnsembleSpec,
    features: &[usize],
    num_features: usize,
) -> Result<Tree> {
    let target = rng.gen_range(1..=spec.max_leaves);
    let root_cov = rng.gen_range(target as u32..=(target as u32 * 20).max(2));
    let mut nodes = vec![TreeNode::Leaf { value: 0.0, coverage: root_cov as f64 }];
    let mut leaves = vec![0usize];
    while leaves.len() < target {
        let splittable: Vec<usize> = leaves.iter().copied().filter(|&v| nodes[v].coverage() >= 2.0).collect();
        let Some(&v) = splittable.choose(rng) else { break };
        let cov = nodes[v].coverage() as u32;
        let lc = rng.gen_range(1..cov);
        let (left, right) = (nodes.len(), nodes.len() + 1);
        nodes.push(TreeNode::Leaf { value: 0.0, coverage: lc as f64 });
        nodes.push(TreeNode::Leaf { value: 0.0, coverage: (cov - lc) as f64 });
        nodes[v] = TreeNode::Split {
            feature: *features.choose(rng).expect("nonempty feature pool"),
            threshold: rng.gen_range(1..spec.threshold_range) as f64,
            left,
            right,
            coverage: cov as f64,
        };
        leaves.retain(|&l| l != v);
        leaves.extend([left, right]);
    }
    for node in &mut nodes {
        if let TreeNode::Leaf { value, .. } = node {
            // quarter steps keep exact arithmetic cheap
            *value = rng.gen_range(-400i32..=400) as f64 / 4.0;
        }
    }
    Tree::new(nodes, num_features, 0)
}

/// A random ensemble with integer coverages. Dead features are interleaved
/// with the relevant ones at random column positions.
pub fn random_ensemble<R: Rng>(rng: &mut R, spec: &RandomEnsembleSpec) -> Result<TreeEnsemble> {
    if spec.max_trees == 0 || spec.max_leaves == 0 || spec.max_relevant == 0 || spec.threshold_range < 2 {
        return Err(Error::Invalid(format!("degenerate random ensemble spec {spec:?}")));
    }
    let relevant = rng.gen_range(1..=spec.max_relevant);
    let num_features = relevant + spec.dead_features;
    let mut columns: Vec<usize> = (0..num_features).collect();
    columns.shuffle(rng);
    let pool = &columns[..relevant];
    let trees = (0..rng.gen_range(1..=spec.max_trees))
        .map(|_| random_tree(rng, spec, pool, num_features))
        .collect::<Result<Vec<_>>>()?;
    let aggregation = if rng.gen_bool(0.5) { Aggregation::Average } else { Aggregation::Sum };
    TreeEnsemble::new(trees, num_features, aggregation)
}

/// A point whose coordinates are drawn from half-integer steps over the
/// threshold range, so equality with thresholds is common.
pub fn random_point<R: Rng>(rng: &mut R, num_features: usize, threshold_range: u32) -> FeatureVector {
    let hi = 2 * threshold_range as i32 + 2;
    FeatureVector::new((0..num_features).map(|_| rng.gen_range(0..=hi) as f64 / 2.0).collect())
        .expect("finite coordinates")
}

/// A random function monotone in every coordinate: a nonnegative sum of
/// monomials in the bits, with a random subset of inputs negated.
pub fn random_monotone<R: Rng>(rng: &mut R, k: usize) -> Result<HypercubeFunction> {
    let terms: Vec<(usize, f64)> = (0..rng.gen_range(1..=2 * k.max(1)))
        .map(|_| (rng.gen_range(0..1usize << k), rng.gen_range(0.0..1.0)))
        .collect();
    let flip = rng.gen_range(0..1usize << k);
    HypercubeFunction::from_fn(k, |x| {
        let y = x ^ flip;
        terms.iter().filter(|(t, _)| y & t == *t).map(|(_, c)| c).sum()
    })
}

/// Random nonnegative per-size weights normalized for `n` players.
pub fn random_per_size_weights<R: Rng>(rng: &mut R, n: usize) -> WeightScheme {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..1.0)).collect();
    let norm: f64 = raw.iter().enumerate().map(|(k, w)| binomial(n - 1, k) as f64 * w).sum();
    WeightScheme::PerSize(raw.iter().map(|w| w / norm).collect())
}
