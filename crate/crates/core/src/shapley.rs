//! Shapley values under the coverage-based set function.
//!
//! The state for a node `v` and feature set `G` (with `m = |G|`) is the
//! vector `Ψ_k = 1/(m+1) · Σ_{S ⊆ G, |S| = k} C(m,k)^{-1} · P[v,S]` for
//! `k = 0..=m`, where `P[v,S]` is the weight the set-function recursion puts
//! on the subtree of `v` when the features in `S` are fixed. Adding a feature
//! with multiplier `δ` is a two-term linear recurrence; deleting one runs
//! the recurrence backwards.
//!
//! [`explain_basic`] removes every path feature at every leaf (`O(LD²)` per
//! tree). [`explain_fast`] pads each path with artificial features up to the
//! tree depth so all leaf states have the same length, then aggregates leaf
//! states bottom-up and removes each feature once per node (`O(LD)`).

use crate::attribution::{Attribution, Method};
use crate::error::Result;
use crate::model::TreeEnsemble;
use crate::scalar::Scalar;
use crate::traversal::{explain_basic_with, explain_fast_with, OpCounter, PathState};
use crate::FeatureVector;

/// Size-stratified state vector `(Ψ_0, …, Ψ_m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapState<T>(pub Vec<T>);

impl<T: Scalar> ShapState<T> {
    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    /// Number of features the state accounts for.
    pub fn num_features(&self) -> usize {
        self.0.len() - 1
    }

    fn push_feature(&mut self, delta: &T) {
        // in place, high index first: out_k reads psi_k and psi_{k-1}
        let m = self.0.len() - 1;
        let denom = T::from_usize(m + 2);
        self.0.push(T::zero());
        for k in (0..=m + 1).rev() {
            let keep = T::from_usize(m + 1 - k) * self.0[k].clone();
            let gain = if k > 0 { T::from_usize(k) * delta.clone() * self.0[k - 1].clone() } else { T::zero() };
            self.0[k] = (keep + gain) / denom.clone();
        }
    }

    fn pop_feature(&mut self, delta: &T) {
        let m = self.0.len() - 1;
        assert!(m >= 1, "cannot delete a feature from an empty set");
        if *delta >= T::one() {
            self.pop_downward(delta);
        } else {
            self.pop_upward(delta);
        }
    }

    /// Solves for `b_0, b_1, …` in turn. Each step multiplies the error of
    /// the previous entry by `kδ/(m−k)`, so this is only used for `δ < 1`.
    fn pop_upward(&mut self, delta: &T) {
        let m = self.0.len() - 1;
        let scale = T::from_usize(m + 1);
        for k in 0..m {
            let carried = if k > 0 { T::from_usize(k) * delta.clone() * self.0[k - 1].clone() } else { T::zero() };
            self.0[k] = (scale.clone() * self.0[k].clone() - carried) / T::from_usize(m - k);
        }
        self.0.pop();
    }

    /// Solves for `b_{m−1}, b_{m−2}, …` in turn. Each step multiplies the
    /// error of the previous entry by `(m−k)/(kδ)`; with `δ ≥ 1` the product
    /// over any run of steps is at most 1.
    fn pop_downward(&mut self, delta: &T) {
        let m = self.0.len() - 1;
        let scale = T::from_usize(m + 1);
        // b_k overwrites psi_{k+1}, which is no longer needed
        let mut above = T::zero();
        for k in (1..=m).rev() {
            let keep = T::from_usize(m - k) * above;
            above = (scale.clone() * self.0[k].clone() - keep) / (T::from_usize(k) * delta.clone());
            self.0[k] = above.clone();
        }
        self.0.remove(0);
    }
}

/// Returns the state with one more feature whose multiplier is `delta`.
pub fn add_feature<T: Scalar>(psi: &ShapState<T>, delta: &T) -> ShapState<T> {
    let mut out = psi.clone();
    out.push_feature(delta);
    out
}

/// Inverse of [`add_feature`]: the unique state `b` with `add_feature(b, delta) == psi`.
///
/// # Panics
/// If `psi` has a single entry (no feature to remove).
pub fn del_feature<T: Scalar>(psi: &ShapState<T>, delta: &T) -> ShapState<T> {
    let mut out = psi.clone();
    out.pop_feature(delta);
    out
}

impl<T: Scalar> PathState<T> for ShapState<T> {
    fn root() -> Self {
        ShapState(vec![T::one()])
    }

    fn add_feature(&mut self, delta: &T, ops: &mut OpCounter) {
        self.push_feature(delta);
        ops.add(self.0.len());
    }

    fn del_feature(&mut self, delta: &T, ops: &mut OpCounter) {
        self.pop_feature(delta);
        ops.del(self.0.len());
    }

    fn add_dummy(&mut self, ops: &mut OpCounter) {
        PathState::add_feature(self, &T::one(), ops);
    }

    fn del_dummy(&mut self, ops: &mut OpCounter) {
        PathState::del_feature(self, &T::one(), ops);
    }

    fn scale(&mut self, factor: &T, ops: &mut OpCounter) {
        for v in &mut self.0 {
            *v = v.clone() * factor.clone();
        }
        ops.scale(self.0.len());
    }

    fn total(&self) -> T {
        self.0.iter().fold(T::zero(), |acc, v| acc + v.clone())
    }

    fn weighted(&self, value: &T) -> Self {
        ShapState(self.0.iter().map(|v| v.clone() * value.clone()).collect())
    }

    fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a = a.clone() + b.clone();
        }
    }

    fn sub_assign(&mut self, other: &Self) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a = a.clone() - b.clone();
        }
    }
}

/// Shapley values, removing each path feature at every leaf.
pub fn explain_basic<T: Scalar>(model: &TreeEnsemble, x: &FeatureVector) -> Result<(Attribution<T>, OpCounter)> {
    explain_basic_with::<T, ShapState<T>>(model, x, Method::ShapleyBasic)
}

/// Shapley values with dummy padding and bottom-up aggregation.
pub fn explain_fast<T: Scalar>(model: &TreeEnsemble, x: &FeatureVector) -> Result<(Attribution<T>, OpCounter)> {
    explain_fast_with::<T, ShapState<T>>(model, x, Method::ShapleyFast)
}
