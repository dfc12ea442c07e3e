//! Ground truth: the coverage-based set function `g(S)` and brute-force
//! Shapley/Banzhaf values obtained by summing over every subset.
//!
//! `g(S)` is evaluated by the recursive descent that follows `x` at splits on
//! features in `S` and averages both children, weighted by coverage, at every
//! other split. Subsets are enumerated over the features that actually occur
//! in split nodes; every other feature leaves `g` unchanged and gets zero.

use crate::attribution::{Attribution, Method};
use crate::error::{Error, Result};
use crate::model::{Tree, TreeEnsemble, TreeNode};
use crate::scalar::Scalar;
use crate::FeatureVector;

/// Largest relevant-feature count the brute-force oracle accepts.
pub const ORACLE_CAP: usize = 25;

/// Subset of `U` given as a membership flag per feature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSet(Vec<bool>);

impl FeatureSet {
    pub fn empty(n: usize) -> Self {
        FeatureSet(vec![false; n])
    }

    pub fn full(n: usize) -> Self {
        FeatureSet(vec![true; n])
    }

    pub fn from_features(n: usize, features: &[usize]) -> Self {
        let mut s = Self::empty(n);
        for &f in features {
            s.0[f] = true;
        }
        s
    }

    pub fn contains(&self, f: usize) -> bool {
        self.0[f]
    }

    pub fn insert(&mut self, f: usize) {
        self.0[f] = true;
    }

    pub fn remove(&mut self, f: usize) {
        self.0[f] = false;
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Bitmask over the relevant feature list `R` (bit `j` = `R[j]`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FeatureSubset(pub u32);

impl FeatureSubset {
    pub fn size(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn to_set(self, relevant: &[usize], n: usize) -> FeatureSet {
        let mut s = FeatureSet::empty(n);
        for (j, &f) in relevant.iter().enumerate() {
            if self.0 >> j & 1 == 1 {
                s.insert(f);
            }
        }
        s
    }
}

/// Weights on marginal contributions, by coalition size.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightScheme {
    Shapley,
    Banzhaf,
    /// `w[k]` applies to every coalition of size `k` (`k = 0..n-1`).
    PerSize(Vec<f64>),
}

/// `C(n, k)`; zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Per-size weights for `n` players, indexed by coalition size `0..n`.
pub fn subset_weights<T: Scalar>(scheme: &WeightScheme, n: usize) -> Result<Vec<T>> {
    if n == 0 {
        return Err(Error::Weights("need at least one feature".into()));
    }
    match scheme {
        WeightScheme::Shapley => {
            Ok((0..n).map(|k| T::one() / (T::from_usize(n) * T::from_usize(binomial(n - 1, k) as usize))).collect())
        }
        WeightScheme::Banzhaf => {
            let w = (0..n - 1).fold(T::one(), |acc, _| acc / T::from_usize(2));
            Ok(vec![w; n])
        }
        WeightScheme::PerSize(w) => {
            validate_per_size(w, n)?;
            Ok(w.iter().map(|&v| T::from_f64(v)).collect())
        }
    }
}

/// Checks `w_k >= 0` and `Σ_k C(n-1,k)·w_k = 1` (to 1e-9).
pub fn validate_per_size(w: &[f64], n: usize) -> Result<()> {
    if w.len() != n {
        return Err(Error::Weights(format!("expected {n} per-size weights, got {}", w.len())));
    }
    if let Some(k) = w.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::Weights(format!("weight for size {k} is negative or non-finite")));
    }
    let total: f64 = w.iter().enumerate().map(|(k, v)| binomial(n - 1, k) as f64 * v).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Weights(format!("coalition weights sum to {total}, not 1")));
    }
    Ok(())
}

fn desc<T: Scalar>(tree: &Tree, x: &[f64], fixed: &FeatureSet, v: usize) -> T {
    match *tree.node(v) {
        TreeNode::Leaf { value, .. } => T::from_f64(value),
        TreeNode::Split { feature, threshold, left, right, coverage } => {
            if fixed.contains(feature) {
                let next = if x[feature] < threshold { left } else { right };
                desc(tree, x, fixed, next)
            } else {
                let rl = T::from_f64(tree.node(left).coverage());
                let rr = T::from_f64(tree.node(right).coverage());
                (rl * desc::<T>(tree, x, fixed, left) + rr * desc::<T>(tree, x, fixed, right)) / T::from_f64(coverage)
            }
        }
    }
}

fn check_inputs<T: Scalar>(model: &TreeEnsemble, x: &FeatureVector) -> Result<()> {
    model.check_point(x)?;
    if T::EXACT {
        model.check_integer_coverages()?;
    }
    Ok(())
}

/// `g(S)` for a single tree.
pub fn eval_tree_g<T: Scalar>(tree: &Tree, x: &FeatureVector, fixed: &FeatureSet) -> T {
    desc(tree, x.values(), fixed, 0)
}

/// `g(S)` for the ensemble, aggregated over trees.
pub fn eval_g<T: Scalar>(model: &TreeEnsemble, x: &FeatureVector, fixed: &FeatureSet) -> Result<T> {
    check_inputs::<T>(model, x)?;
    if fixed.len() != model.num_features() {
        return Err(Error::Dimension { expected: model.num_features(), got: fixed.len() });
    }
    let total = model.trees().iter().fold(T::zero(), |acc, t| acc + eval_tree_g::<T>(t, x, fixed));
    Ok(model.aggregate(total))
}

/// Memoized `g` over subsets of one tree's split features.
///
/// A node's value depends only on the fixed features inside its subtree, so
/// each node caches by the subset restricted to those features.
struct TreeTable<'a, T> {
    tree: &'a Tree,
    x: &'a [f64],
    /// Local bit of each node's split feature (unused for leaves).
    bit: Vec<u32>,
    /// Local features occurring in each node's subtree.
    below: Vec<u32>,
    /// Coverage ratios `r_left/r_v`, `r_right/r_v`.
    ratio: Vec<(T, T)>,
    memo: Vec<std::collections::HashMap<u32, T>>,
}

impl<'a, T: Scalar> TreeTable<'a, T> {
    fn new(tree: &'a Tree, x: &'a [f64], local: &[usize]) -> Self {
        fn fill<T: Scalar>(
            tree: &Tree,
            local: &[usize],
            v: usize,
            bit: &mut [u32],
            below: &mut [u32],
            ratio: &mut [(T, T)],
        ) {
            if let TreeNode::Split { feature, left, right, coverage, .. } = *tree.node(v) {
                fill(tree, local, left, bit, below, ratio);
                fill(tree, local, right, bit, below, ratio);
                bit[v] = 1 << local.binary_search(&feature).expect("split feature is local");
                below[v] = bit[v] | below[left] | below[right];
                let c = T::from_f64(coverage);
                ratio[v] =
                    (T::from_f64(tree.node(left).coverage()) / c.clone(), T::from_f64(tree.node(right).coverage()) / c);
            }
        }
        let n = tree.nodes().len();
        let mut bit = vec![0; n];
        let mut below = vec![0; n];
        let mut ratio = vec![(T::zero(), T::zero()); n];
        fill(tree, local, 0, &mut bit, &mut below, &mut ratio);
        TreeTable { tree, x, bit, below, ratio, memo: vec![Default::default(); n] }
    }

    fn value(&mut self, v: usize, sub: u32) -> T {
        let key = sub & self.below[v];
        if let Some(hit) = self.memo[v].get(&key) {
            return hit.clone();
        }
        let out = match *self.tree.node(v) {
            TreeNode::Leaf { value, .. } => T::from_f64(value),
            TreeNode::Split { feature, threshold, left, right, .. } => {
                if key & self.bit[v] != 0 {
                    self.value(if self.x[feature] < threshold { left } else { right }, key)
                } else {
                    let (wl, wr) = self.ratio[v].clone();
                    wl * self.value(left, key) + wr * self.value(right, key)
                }
            }
        };
        self.memo[v].insert(key, out.clone());
        out
    }
}

/// `g` for every subset of the relevant features, indexed by bitmask.
pub fn subset_table<T: Scalar>(model: &TreeEnsemble, x: &FeatureVector) -> Result<(Vec<usize>, Vec<T>)> {
    check_inputs::<T>(model, x)?;
    let relevant = model.relevant_features();
    let r = relevant.len();
    if r > ORACLE_CAP {
        return Err(Error::OracleCap { count: r, cap: ORACLE_CAP });
    }
    let mut g = vec![T::zero(); 1 << r];
    for tree in model.trees() {
        // A tree's g only sees the features it splits on; evaluate it on
        // those subsets and scatter into the full table.
        let local = tree.split_features();
        let positions: Vec<usize> =
            local.iter().map(|f| relevant.binary_search(f).expect("split feature is relevant")).collect();
        let mut table = TreeTable::<T>::new(tree, x.values(), &local);
        let values: Vec<T> = (0u32..1 << local.len()).map(|sub| table.value(0, sub)).collect();
        for (mask, slot) in g.iter_mut().enumerate() {
            let sub = positions.iter().enumerate().fold(0usize, |acc, (j, &p)| acc | ((mask >> p & 1) << j));
            *slot = slot.clone() + values[sub].clone();
        }
    }
    let g = g.into_iter().map(|v| model.aggregate(v)).collect();
    Ok((relevant, g))
}

fn oracle_method(scheme: &WeightScheme) -> Method {
    match scheme {
        WeightScheme::Shapley => Method::OracleShapley,
        WeightScheme::Banzhaf => Method::OracleBanzhaf,
        WeightScheme::PerSize(_) => Method::OracleCustom,
    }
}

/// Brute-force attributions for several schemes from one subset table.
///
/// For each feature `i` of `R` (the features used by split nodes), sums
/// `w(|S|)·(g(S ∪ {i}) − g(S))` over every `S ⊆ R ∖ {i}` with the weights for
/// `|R|` players. Features outside `R` get exactly zero.
pub fn oracle_values_many<T: Scalar>(
    model: &TreeEnsemble,
    x: &FeatureVector,
    schemes: &[WeightScheme],
) -> Result<Vec<Attribution<T>>> {
    let (relevant, g) = subset_table::<T>(model, x)?;
    let r = relevant.len();
    let mut out: Vec<Attribution<T>> = schemes
        .iter()
        .map(|s| Attribution {
            values: vec![T::zero(); model.num_features()],
            expected_value: g[0].clone(),
            method: oracle_method(s),
        })
        .collect();
    if r == 0 {
        return Ok(out);
    }
    let weights = schemes.iter().map(|s| subset_weights::<T>(s, r)).collect::<Result<Vec<_>>>()?;
    for (j, &feature) in relevant.iter().enumerate() {
        let bit = 1usize << j;
        // Marginal contributions of `feature`, summed by coalition size.
        let mut by_size = vec![T::zero(); r];
        for mask in (0..g.len()).filter(|m| m & bit == 0) {
            let k = mask.count_ones() as usize;
            by_size[k] = by_size[k].clone() + (g[mask | bit].clone() - g[mask].clone());
        }
        for (a, w) in out.iter_mut().zip(&weights) {
            a.values[feature] = by_size.iter().zip(w).fold(T::zero(), |acc, (d, w)| acc + d.clone() * w.clone());
        }
    }
    Ok(out)
}

/// Brute-force attribution under `scheme`; see [`oracle_values_many`].
pub fn oracle_values<T: Scalar>(
    model: &TreeEnsemble,
    x: &FeatureVector,
    scheme: &WeightScheme,
) -> Result<Attribution<T>> {
    let mut all = oracle_values_many(model, x, std::slice::from_ref(scheme))?;
    Ok(all.pop().expect("one scheme in, one attribution out"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Aggregation;
    use num_rational::BigRational;

    fn q(p: i64, d: i64) -> BigRational {
        BigRational::new(p.into(), d.into())
    }

    fn two_feature() -> TreeEnsemble {
        TreeEnsemble::from_nodes(
            vec![vec![
                TreeNode::Split { feature: 0, threshold: 5.0, left: 1, right: 2, coverage: 4.0 },
                TreeNode::Leaf { value: 0.0, coverage: 2.0 },
                TreeNode::Split { feature: 1, threshold: 3.0, left: 3, right: 4, coverage: 2.0 },
                TreeNode::Leaf { value: 10.0, coverage: 1.0 },
                TreeNode::Leaf { value: 30.0, coverage: 1.0 },
            ]],
            2,
            Aggregation::Average,
        )
        .unwrap()
    }

    fn stump() -> TreeEnsemble {
        TreeEnsemble::from_nodes(
            vec![vec![
                TreeNode::Split { feature: 0, threshold: 5.0, left: 1, right: 2, coverage: 4.0 },
                TreeNode::Leaf { value: 10.0, coverage: 3.0 },
                TreeNode::Leaf { value: 20.0, coverage: 1.0 },
            ]],
            1,
            Aggregation::Average,
        )
        .unwrap()
    }

    #[test]
    fn g_on_stump() {
        let m = stump();
        let x = FeatureVector::new(vec![7.0]).unwrap();
        assert_eq!(eval_g::<f64>(&m, &x, &FeatureSet::empty(1)).unwrap(), 12.5);
        assert_eq!(eval_g::<f64>(&m, &x, &FeatureSet::full(1)).unwrap(), 20.0);
    }

    #[test]
    fn g_on_two_feature_tree() {
        let m = two_feature();
        let x = FeatureVector::new(vec![7.0, 4.0]).unwrap();
        let g = |fs: &[usize]| eval_g::<BigRational>(&m, &x, &FeatureSet::from_features(2, fs)).unwrap();
        assert_eq!(g(&[]), q(10, 1));
        assert_eq!(g(&[0]), q(20, 1));
        assert_eq!(g(&[1]), q(15, 1));
        assert_eq!(g(&[0, 1]), q(30, 1));
    }

    #[test]
    fn oracle_on_two_feature_tree() {
        let m = two_feature();
        let x = FeatureVector::new(vec![7.0, 4.0]).unwrap();
        for scheme in [WeightScheme::Shapley, WeightScheme::Banzhaf] {
            let a = oracle_values::<BigRational>(&m, &x, &scheme).unwrap();
            assert_eq!(a.values, vec![q(25, 2), q(15, 2)]);
            assert_eq!(a.expected_value, q(10, 1));
        }
    }

    #[test]
    fn oracle_on_single_leaf() {
        let m = TreeEnsemble::from_nodes(
            vec![vec![TreeNode::Leaf { value: 5.0, coverage: 10.0 }]],
            3,
            Aggregation::Average,
        )
        .unwrap();
        let x = FeatureVector::new(vec![0.0; 3]).unwrap();
        let a = oracle_values::<f64>(&m, &x, &WeightScheme::Shapley).unwrap();
        assert_eq!(a.values, vec![0.0; 3]);
        assert_eq!(a.expected_value, 5.0);
    }

    #[test]
    fn weights_by_size() {
        assert_eq!(subset_weights::<BigRational>(&WeightScheme::Shapley, 1).unwrap(), vec![q(1, 1)]);
        assert_eq!(subset_weights::<BigRational>(&WeightScheme::Shapley, 3).unwrap(), vec![q(1, 3), q(1, 6), q(1, 3)]);
        assert_eq!(subset_weights::<BigRational>(&WeightScheme::Banzhaf, 3).unwrap(), vec![q(1, 4); 3]);
        // per-size weights that reproduce Banzhaf for n = 3
        assert!(subset_weights::<f64>(&WeightScheme::PerSize(vec![0.25; 3]), 3).is_ok());
        assert!(subset_weights::<f64>(&WeightScheme::PerSize(vec![0.5; 3]), 3).is_err());
        assert!(subset_weights::<f64>(&WeightScheme::PerSize(vec![1.0, -0.0, -1.0]), 3).is_err());
        assert!(subset_weights::<f64>(&WeightScheme::PerSize(vec![1.0]), 3).is_err());
    }

    #[test]
    fn exact_mode_rejects_fractional_coverage() {
        let m = TreeEnsemble::from_nodes(
            vec![vec![
                TreeNode::Split { feature: 0, threshold: 1.0, left: 1, right: 2, coverage: 1.5 },
                TreeNode::Leaf { value: 0.0, coverage: 1.0 },
                TreeNode::Leaf { value: 1.0, coverage: 0.5 },
            ]],
            1,
            Aggregation::Average,
        )
        .unwrap();
        let x = FeatureVector::new(vec![0.0]).unwrap();
        assert!(matches!(eval_g::<BigRational>(&m, &x, &FeatureSet::empty(1)), Err(Error::NonIntegerCoverage { .. })));
        assert!(eval_g::<f64>(&m, &x, &FeatureSet::empty(1)).is_ok());
    }

    #[test]
    fn oracle_cap_enforced() {
        let n = ORACLE_CAP + 1;
        // chain: each split has a leaf on the left and continues right
        let mut chain = Vec::new();
        for f in 0..n {
            let base = chain.len();
            let cov = (n - f + 1) as f64;
            chain.push(TreeNode::Split { feature: f, threshold: 0.0, left: base + 1, right: base + 2, coverage: cov });
            chain.push(TreeNode::Leaf { value: 1.0, coverage: 1.0 });
        }
        chain.push(TreeNode::Leaf { value: 2.0, coverage: 1.0 });
        let m = TreeEnsemble::from_nodes(vec![chain], n, Aggregation::Average).unwrap();
        let x = FeatureVector::new(vec![0.0; n]).unwrap();
        assert!(matches!(oracle_values::<f64>(&m, &x, &WeightScheme::Shapley), Err(Error::OracleCap { .. })));
    }
}
