//! Depth-first traversals shared by the Shapley and Banzhaf explainers.
//!
//! Both algorithms walk every root-leaf path once while keeping a *state*
//! that summarizes the weighted subset sums for the current node and the set
//! of features split on above it. They differ only in what a state is (a
//! vector stratified by coalition size for Shapley, a single number for
//! Banzhaf), which is captured by [`PathState`].

use crate::attribution::{Attribution, Method};
use crate::context::PathContext;
use crate::error::Result;
use crate::model::{Side, Tree, TreeEnsemble, TreeNode};
use crate::scalar::Scalar;
use crate::FeatureVector;

/// Counts of state transitions performed by one explanation call.
///
/// `*_count` fields count calls; `*_ops` fields count scalar entries
/// written, which is the work measure used for complexity comparisons.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounter {
    pub add_count: u64,
    pub del_count: u64,
    pub scale_count: u64,
    pub add_ops: u64,
    pub del_ops: u64,
    pub scale_ops: u64,
}

impl OpCounter {
    pub fn total_ops(&self) -> u64 {
        self.add_ops + self.del_ops + self.scale_ops
    }

    pub fn total_calls(&self) -> u64 {
        self.add_count + self.del_count + self.scale_count
    }

    pub(crate) fn add(&mut self, written: usize) {
        self.add_count += 1;
        self.add_ops += written as u64;
    }

    pub(crate) fn del(&mut self, written: usize) {
        self.del_count += 1;
        self.del_ops += written as u64;
    }

    pub(crate) fn scale(&mut self, written: usize) {
        self.scale_count += 1;
        self.scale_ops += written as u64;
    }
}

/// Dynamic-programming state carried along a root-leaf path.
pub trait PathState<T: Scalar>: Clone {
    /// State of the root with no features.
    fn root() -> Self;

    /// Adds a feature whose `δ` at the current node is `delta`.
    fn add_feature(&mut self, delta: &T, ops: &mut OpCounter);

    /// Inverse of [`PathState::add_feature`] with the same `delta`.
    fn del_feature(&mut self, delta: &T, ops: &mut OpCounter);

    /// Adds a feature that never occurs in the tree (`δ = 1`).
    fn add_dummy(&mut self, ops: &mut OpCounter);

    fn del_dummy(&mut self, ops: &mut OpCounter);

    /// Multiplies every entry by `factor`.
    fn scale(&mut self, factor: &T, ops: &mut OpCounter);

    /// Sum of the entries.
    fn total(&self) -> T;

    /// `value · self`, used to seed subtree sums at leaves.
    fn weighted(&self, value: &T) -> Self;

    fn add_assign(&mut self, other: &Self);

    fn sub_assign(&mut self, other: &Self);
}

fn split_parts(node: &TreeNode) -> Option<(usize, f64, usize, usize, f64)> {
    match *node {
        TreeNode::Split { feature, threshold, left, right, coverage } => {
            Some((feature, threshold, left, right, coverage))
        }
        TreeNode::Leaf { .. } => None,
    }
}

/// Leaf-by-leaf traversal: every leaf removes each path feature in turn.
struct BasicWalk<'a, T: Scalar, S> {
    tree: &'a Tree,
    ctx: PathContext<'a, T>,
    state: S,
    phi: &'a mut [T],
    ops: OpCounter,
}

impl<T: Scalar, S: PathState<T>> BasicWalk<'_, T, S> {
    fn visit(&mut self, parent: usize, side: Side) -> Result<()> {
        let (feature, threshold, left, right, parent_cov) =
            split_parts(self.tree.node(parent)).expect("parent is a split");
        let v = if side == Side::Left { left } else { right };
        let node = self.tree.node(v);
        let step = self.ctx.descend(feature, threshold, parent_cov, node.coverage(), side);

        if let Some(old) = &step.delta_old {
            self.state.del_feature(old, &mut self.ops);
        }
        self.state.scale(&step.ratio, &mut self.ops);
        self.state.add_feature(&step.delta_new, &mut self.ops);

        match *node {
            TreeNode::Split { .. } => {
                self.visit(v, Side::Left)?;
                self.visit(v, Side::Right)?;
            }
            TreeNode::Leaf { value, .. } => {
                let value = T::from_f64(value);
                for idx in 0..self.ctx.path_features().len() {
                    let i = self.ctx.path_features()[idx];
                    let delta = self.ctx.delta(i);
                    self.state.del_feature(&delta, &mut self.ops);
                    let contribution = self.state.total() * value.clone() * (delta.clone() - T::one());
                    self.phi[i] = self.phi[i].clone() + contribution;
                    self.state.add_feature(&delta, &mut self.ops);
                }
            }
        }

        self.state.del_feature(&step.delta_new, &mut self.ops);
        let inverse = T::from_f64(parent_cov) / T::from_f64(node.coverage());
        self.state.scale(&inverse, &mut self.ops);
        if let Some(old) = &step.delta_old {
            self.state.add_feature(old, &mut self.ops);
        }
        self.ctx.ascend()
    }
}

/// Traversal with dummy padding and bottom-up subtree sums.
struct FastWalk<'a, T: Scalar, S> {
    tree: &'a Tree,
    ctx: PathContext<'a, T>,
    state: S,
    phi: &'a mut [T],
    /// Per feature: subtree sums of nodes still waiting for their nearest
    /// same-feature ancestor to finish.
    stacks: &'a mut [Vec<S>],
    ops: OpCounter,
}

impl<T: Scalar, S: PathState<T>> FastWalk<'_, T, S> {
    /// Returns the subtree sum `S(v)` of the child on `side`.
    fn visit(&mut self, parent: usize, side: Side) -> Result<S> {
        let (feature, threshold, left, right, parent_cov) =
            split_parts(self.tree.node(parent)).expect("parent is a split");
        let v = if side == Side::Left { left } else { right };
        let node = self.tree.node(v);
        let step = self.ctx.descend(feature, threshold, parent_cov, node.coverage(), side);

        match &step.delta_old {
            Some(old) => self.state.del_feature(old, &mut self.ops),
            None => self.state.del_dummy(&mut self.ops),
        }
        self.state.scale(&step.ratio, &mut self.ops);
        self.state.add_feature(&step.delta_new, &mut self.ops);

        let entry_height = self.stacks[feature].len();
        let subtree = match *node {
            TreeNode::Split { .. } => {
                let mut s = self.visit(v, Side::Left)?;
                s.add_assign(&self.visit(v, Side::Right)?);
                s
            }
            TreeNode::Leaf { value, .. } => self.state.weighted(&T::from_f64(value)),
        };

        // Entries pushed above the entry height are exactly the descendants
        // whose nearest same-feature ancestor is v.
        let mut gamma = subtree.clone();
        while self.stacks[feature].len() > entry_height {
            let w = self.stacks[feature].pop().expect("height checked");
            gamma.sub_assign(&w);
        }
        gamma.del_feature(&step.delta_new, &mut self.ops);
        let contribution = gamma.total() * (step.delta_new.clone() - T::one());
        self.phi[feature] = self.phi[feature].clone() + contribution;

        self.state.del_feature(&step.delta_new, &mut self.ops);
        let inverse = T::from_f64(parent_cov) / T::from_f64(node.coverage());
        self.state.scale(&inverse, &mut self.ops);
        match &step.delta_old {
            Some(old) => {
                self.state.add_feature(old, &mut self.ops);
                self.stacks[feature].push(subtree.clone());
            }
            None => self.state.add_dummy(&mut self.ops),
        }
        self.ctx.ascend()?;
        Ok(subtree)
    }
}

fn check_inputs<T: Scalar>(model: &TreeEnsemble, x: &FeatureVector) -> Result<()> {
    model.check_point(x)?;
    if T::EXACT {
        model.check_integer_coverages()?;
    }
    Ok(())
}

fn finish<T: Scalar>(model: &TreeEnsemble, phi: Vec<T>, method: Method) -> Attribution<T> {
    Attribution {
        values: phi.into_iter().map(|v| model.aggregate(v)).collect(),
        expected_value: model.expected_value::<T>(),
        method,
    }
}

/// Runs the leaf-by-leaf traversal over every tree.
pub fn explain_basic_with<T: Scalar, S: PathState<T>>(
    model: &TreeEnsemble,
    x: &FeatureVector,
    method: Method,
) -> Result<(Attribution<T>, OpCounter)> {
    check_inputs::<T>(model, x)?;
    let mut phi = vec![T::zero(); model.num_features()];
    let mut ops = OpCounter::default();
    for tree in model.trees() {
        if tree.node(0).is_leaf() {
            continue;
        }
        let mut walk = BasicWalk { tree, ctx: PathContext::new(x.values()), state: S::root(), phi: &mut phi, ops };
        walk.visit(0, Side::Left)?;
        walk.visit(0, Side::Right)?;
        ops = walk.ops;
    }
    Ok((finish(model, phi, method), ops))
}

/// Runs the padded traversal with subtree aggregation over every tree.
pub fn explain_fast_with<T: Scalar, S: PathState<T>>(
    model: &TreeEnsemble,
    x: &FeatureVector,
    method: Method,
) -> Result<(Attribution<T>, OpCounter)> {
    check_inputs::<T>(model, x)?;
    let mut phi = vec![T::zero(); model.num_features()];
    let mut stacks: Vec<Vec<S>> = vec![Vec::new(); model.num_features()];
    let mut ops = OpCounter::default();
    for tree in model.trees() {
        if tree.node(0).is_leaf() {
            continue;
        }
        let mut state = S::root();
        for _ in 0..tree.depth() {
            state.add_dummy(&mut ops);
        }
        let mut walk =
            FastWalk { tree, ctx: PathContext::new(x.values()), state, phi: &mut phi, stacks: &mut stacks, ops };
        walk.visit(0, Side::Left)?;
        walk.visit(0, Side::Right)?;
        ops = walk.ops;
        debug_assert!(stacks.iter().all(Vec::is_empty), "unbalanced feature stacks");
    }
    Ok((finish(model, phi, method), ops))
}
