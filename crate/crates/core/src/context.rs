//! Per-traversal bookkeeping of the feature intervals and coverage products
//! along the current root-to-node path.
//!
//! For a node `v` and feature `y` the context holds the interval `I[y]` that
//! `x_y` must lie in for evaluation to reach `v`, and the product `c[y]` of
//! the coverage ratios `r_u / r_parent(u)` over path edges that split on `y`.
//! The split rule sends `x < t` left, so every interval has the form
//! `[lo, hi)`: right turns raise the inclusive lower bound and left turns
//! lower the exclusive upper bound.

use crate::error::{Error, Result};
use crate::model::Side;
use crate::scalar::Scalar;

/// Half-open interval `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const FULL: Interval = Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY };

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x < self.hi
    }

    fn restrict(self, threshold: f64, side: Side) -> Interval {
        match side {
            Side::Left => Interval { lo: self.lo, hi: self.hi.min(threshold) },
            Side::Right => Interval { lo: self.lo.max(threshold), hi: self.hi },
        }
    }
}

/// What `descend` reports about the edge it crossed.
#[derive(Debug, Clone, PartialEq)]
pub struct Step<T> {
    /// Split feature of the parent.
    pub feature: usize,
    /// `δ` of `feature` at the parent, if the feature was already on the path.
    pub delta_old: Option<T>,
    /// `δ` of `feature` at the child.
    pub delta_new: T,
    /// `r_child / r_parent`.
    pub ratio: T,
}

#[derive(Debug, Clone, PartialEq)]
struct Saved<T> {
    feature: usize,
    interval: Interval,
    cov: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathContext<'x, T> {
    x: &'x [f64],
    intervals: Vec<Interval>,
    cov: Vec<T>,
    /// How many path edges split on each feature.
    uses: Vec<u32>,
    /// Distinct features on the path, in first-use order.
    on_path: Vec<usize>,
    saved: Vec<Saved<T>>,
}

impl<'x, T: Scalar> PathContext<'x, T> {
    pub fn new(x: &'x [f64]) -> Self {
        let n = x.len();
        PathContext {
            x,
            intervals: vec![Interval::FULL; n],
            cov: vec![T::one(); n],
            uses: vec![0; n],
            on_path: Vec::new(),
            saved: Vec::new(),
        }
    }

    pub fn interval(&self, feature: usize) -> Interval {
        self.intervals[feature]
    }

    pub fn coverage_product(&self, feature: usize) -> &T {
        &self.cov[feature]
    }

    /// `[x_y ∈ I[y]] / c[y]`.
    pub fn delta(&self, feature: usize) -> T {
        if self.intervals[feature].contains(self.x[feature]) {
            T::one() / self.cov[feature].clone()
        } else {
            T::zero()
        }
    }

    pub fn on_path(&self, feature: usize) -> bool {
        self.uses[feature] > 0
    }

    /// Distinct features split on along the current path.
    pub fn path_features(&self) -> &[usize] {
        &self.on_path
    }

    pub fn depth(&self) -> usize {
        self.saved.len()
    }

    /// Moves from a split node into one of its children.
    ///
    /// `delta_old` is read before anything changes, so it describes the
    /// parent; `delta_new` describes the child.
    pub fn descend(
        &mut self,
        feature: usize,
        threshold: f64,
        parent_coverage: f64,
        child_coverage: f64,
        side: Side,
    ) -> Step<T> {
        let delta_old = self.on_path(feature).then(|| self.delta(feature));
        let ratio = T::from_f64(child_coverage) / T::from_f64(parent_coverage);
        self.saved.push(Saved { feature, interval: self.intervals[feature], cov: self.cov[feature].clone() });
        self.intervals[feature] = self.intervals[feature].restrict(threshold, side);
        self.cov[feature] = self.cov[feature].clone() * ratio.clone();
        if self.uses[feature] == 0 {
            self.on_path.push(feature);
        }
        self.uses[feature] += 1;
        Step { feature, delta_old, delta_new: self.delta(feature), ratio }
    }

    /// Undoes the most recent `descend`, restoring the saved values verbatim.
    pub fn ascend(&mut self) -> Result<()> {
        let saved = self.saved.pop().ok_or(Error::AscendUnderflow)?;
        let f = saved.feature;
        self.intervals[f] = saved.interval;
        self.cov[f] = saved.cov;
        self.uses[f] -= 1;
        if self.uses[f] == 0 {
            let last = self.on_path.pop();
            debug_assert_eq!(last, Some(f));
        }
        Ok(())
    }
}
