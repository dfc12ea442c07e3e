//! Binary tree ensembles: loading, validation and prediction.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Relative slack allowed when checking `r_v == r_left + r_right`.
pub const COVERAGE_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TreeNode {
    Split { feature: usize, threshold: f64, left: usize, right: usize, coverage: f64 },
    Leaf { value: f64, coverage: f64 },
}

impl TreeNode {
    pub fn coverage(&self) -> f64 {
        match *self {
            TreeNode::Split { coverage, .. } | TreeNode::Leaf { coverage, .. } => coverage,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, TreeNode::Leaf { .. })
    }
}

/// Which child of a split node a traversal moves into.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    #[default]
    Average,
    Sum,
}

/// A validated tree. Node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<TreeNode>,
    depth: usize,
    num_leaves: usize,
}

impl Tree {
    /// Validates structure and coverages. `index` is only used in error messages.
    pub fn new(nodes: Vec<TreeNode>, num_features: usize, index: usize) -> Result<Self> {
        let structure = |reason: String| Error::Structure { tree: index, reason };
        if nodes.is_empty() {
            return Err(structure("tree has no nodes".into()));
        }
        let mut parent_count = vec![0usize; nodes.len()];
        for (i, node) in nodes.iter().enumerate() {
            let coverage = node.coverage();
            if !(coverage.is_finite() && coverage > 0.0) {
                return Err(Error::NonPositiveCoverage { tree: index, node: i, coverage });
            }
            match *node {
                TreeNode::Leaf { value, .. } => {
                    if !value.is_finite() {
                        return Err(Error::NonFinite { tree: index, node: i, what: "leaf value" });
                    }
                }
                TreeNode::Split { feature, threshold, left, right, coverage } => {
                    if feature >= num_features {
                        return Err(Error::FeatureOutOfRange { tree: index, node: i, feature, num_features });
                    }
                    if threshold.is_nan() {
                        return Err(Error::NonFinite { tree: index, node: i, what: "threshold" });
                    }
                    for child in [left, right] {
                        if child >= nodes.len() {
                            return Err(structure(format!("node {i} references missing child {child}")));
                        }
                        if child == 0 {
                            return Err(structure(format!("node {i} points back to the root")));
                        }
                        parent_count[child] += 1;
                    }
                    if left == right {
                        return Err(structure(format!("node {i} has identical children")));
                    }
                    let (l, r) = (nodes[left].coverage(), nodes[right].coverage());
                    if (coverage - (l + r)).abs() > COVERAGE_RTOL * coverage {
                        return Err(Error::CoverageMismatch {
                            tree: index,
                            node: i,
                            parent: coverage,
                            left: l,
                            right: r,
                        });
                    }
                }
            }
        }
        if let Some(i) = parent_count.iter().skip(1).position(|&c| c != 1) {
            let i = i + 1;
            return Err(structure(format!("node {i} has {} parents (orphan or shared node)", parent_count[i])));
        }

        // Every non-root node has one parent and the root has none, so the
        // reachable part is a tree; anything unreachable sits on a cycle.
        let mut depth = 0;
        let mut num_leaves = 0;
        let mut visited = 0;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((v, d)) = stack.pop() {
            visited += 1;
            depth = depth.max(d);
            match nodes[v] {
                TreeNode::Leaf { .. } => num_leaves += 1,
                TreeNode::Split { left, right, .. } => {
                    stack.push((right, d + 1));
                    stack.push((left, d + 1));
                }
            }
        }
        if visited != nodes.len() {
            return Err(structure(format!("{} nodes unreachable from the root (cycle)", nodes.len() - visited)));
        }
        Ok(Tree { nodes, depth, num_leaves })
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &TreeNode {
        &self.nodes[i]
    }

    /// Number of edges on the longest root-leaf path.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn num_leaves(&self) -> usize {
        self.num_leaves
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut v = 0;
        loop {
            match self.nodes[v] {
                TreeNode::Leaf { value, .. } => return value,
                TreeNode::Split { feature, threshold, left, right, .. } => {
                    v = if x[feature] < threshold { left } else { right };
                }
            }
        }
    }

    /// Coverage-weighted mean of the leaf values.
    pub fn expected_value<T: Scalar>(&self) -> T {
        fn walk<T: Scalar>(tree: &Tree, v: usize) -> T {
            match tree.nodes[v] {
                TreeNode::Leaf { value, .. } => T::from_f64(value),
                TreeNode::Split { left, right, coverage, .. } => {
                    let rl = T::from_f64(tree.nodes[left].coverage());
                    let rr = T::from_f64(tree.nodes[right].coverage());
                    (rl * walk::<T>(tree, left) + rr * walk::<T>(tree, right)) / T::from_f64(coverage)
                }
            }
        }
        walk(self, 0)
    }

    /// Features used by at least one split node, ascending.
    pub fn split_features(&self) -> Vec<usize> {
        let mut f: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|n| match *n {
                TreeNode::Split { feature, .. } => Some(feature),
                TreeNode::Leaf { .. } => None,
            })
            .collect();
        f.sort_unstable();
        f.dedup();
        f
    }
}

/// A validated ensemble of binary trees.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeEnsemble {
    trees: Vec<Tree>,
    num_features: usize,
    aggregation: Aggregation,
}

#[derive(Serialize, Deserialize)]
struct TreeDoc {
    nodes: Vec<TreeNode>,
}

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    format_version: u64,
    num_features: usize,
    #[serde(default)]
    aggregation: Aggregation,
    trees: Vec<TreeDoc>,
}

impl TreeEnsemble {
    pub fn new(trees: Vec<Tree>, num_features: usize, aggregation: Aggregation) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::Invalid("ensemble has no trees".into()));
        }
        Ok(TreeEnsemble { trees, num_features, aggregation })
    }

    /// Builds and validates an ensemble from raw node arrays.
    pub fn from_nodes(trees: Vec<Vec<TreeNode>>, num_features: usize, aggregation: Aggregation) -> Result<Self> {
        let trees = trees
            .into_iter()
            .enumerate()
            .map(|(i, nodes)| Tree::new(nodes, num_features, i))
            .collect::<Result<Vec<_>>>()?;
        Self::new(trees, num_features, aggregation)
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let doc: ModelDoc = serde_json::from_slice(bytes).map_err(|e| Error::Parse(e.to_string()))?;
        if doc.format_version != 1 {
            return Err(Error::FormatVersion(doc.format_version));
        }
        Self::from_nodes(doc.trees.into_iter().map(|t| t.nodes).collect(), doc.num_features, doc.aggregation)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|source| Error::Io { path: path.into(), source })?;
        Self::from_json(&bytes)
    }

    pub fn to_json(&self) -> String {
        let doc = ModelDoc {
            format_version: 1,
            num_features: self.num_features,
            aggregation: self.aggregation,
            trees: self.trees.iter().map(|t| TreeDoc { nodes: t.nodes.clone() }).collect(),
        };
        serde_json::to_string_pretty(&doc).expect("model serialization cannot fail")
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn aggregation(&self) -> Aggregation {
        self.aggregation
    }

    pub fn max_depth(&self) -> usize {
        self.trees.iter().map(Tree::depth).max().unwrap_or(0)
    }

    pub fn total_leaves(&self) -> usize {
        self.trees.iter().map(Tree::num_leaves).sum()
    }

    /// Features appearing in any split node, ascending.
    pub fn relevant_features(&self) -> Vec<usize> {
        let mut f: Vec<usize> = self.trees.iter().flat_map(Tree::split_features).collect();
        f.sort_unstable();
        f.dedup();
        f
    }

    /// Combines per-tree quantities according to the aggregation mode.
    pub fn aggregate<T: Scalar>(&self, total: T) -> T {
        match self.aggregation {
            Aggregation::Average => total / T::from_usize(self.trees.len()),
            Aggregation::Sum => total,
        }
    }

    pub fn predict(&self, x: &FeatureVector) -> f64 {
        self.predict_as(x)
    }

    /// Prediction with the aggregation carried out in `T`.
    pub fn predict_as<T: Scalar>(&self, x: &FeatureVector) -> T {
        let total = self.trees.iter().fold(T::zero(), |acc, t| acc + T::from_f64(t.predict(x.values())));
        self.aggregate(total)
    }

    /// Expected model output with no feature fixed (coverage-weighted leaf mean).
    pub fn expected_value<T: Scalar>(&self) -> T {
        let total = self.trees.iter().fold(T::zero(), |acc, t| acc + t.expected_value::<T>());
        self.aggregate(total)
    }

    /// Exact arithmetic requires integer coverages everywhere.
    pub fn check_integer_coverages(&self) -> Result<()> {
        for (t, tree) in self.trees.iter().enumerate() {
            for (i, node) in tree.nodes.iter().enumerate() {
                let coverage = node.coverage();
                if coverage.fract() != 0.0 {
                    return Err(Error::NonIntegerCoverage { tree: t, node: i, coverage });
                }
            }
        }
        Ok(())
    }

    /// Checks that `x` matches the model dimension.
    pub fn check_point(&self, x: &FeatureVector) -> Result<()> {
        if x.len() != self.num_features {
            return Err(Error::Dimension { expected: self.num_features, got: x.len() });
        }
        Ok(())
    }
}

/// One data point to explain.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| v.is_nan()) {
            return Err(Error::Invalid(format!("feature {i} is NaN")));
        }
        Ok(FeatureVector(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::ops::Index<usize> for FeatureVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}
