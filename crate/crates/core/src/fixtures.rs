//! Small hand-built models shared by unit tests.

use crate::model::{Aggregation, TreeEnsemble, TreeNode};

pub(crate) fn leaf(value: f64, coverage: f64) -> TreeNode {
    TreeNode::Leaf { value, coverage }
}

pub(crate) fn split(feature: usize, threshold: f64, left: usize, right: usize, coverage: f64) -> TreeNode {
    TreeNode::Split { feature, threshold, left, right, coverage }
}

/// `x0 < 5 → 0`, else `x1 < 3 → 10`, else `30`; coverages 4 / 2 / 2 / 1 / 1.
pub(crate) fn two_feature() -> TreeEnsemble {
    TreeEnsemble::from_nodes(
        vec![vec![
            split(0, 5.0, 1, 2, 4.0),
            leaf(0.0, 2.0),
            split(1, 3.0, 3, 4, 2.0),
            leaf(10.0, 1.0),
            leaf(30.0, 1.0),
        ]],
        2,
        Aggregation::Average,
    )
    .unwrap()
}

/// Complete depth-3 tree on features 0, 1, 2 (threshold 1, coverage 8 at the
/// root) whose only nonzero leaf is the all-right one with value 1.
pub(crate) fn and3() -> TreeEnsemble {
    let mut nodes = Vec::new();
    // heap layout: children of i are 2i+1, 2i+2
    for i in 0..15usize {
        let depth = (usize::BITS - (i + 1).leading_zeros() - 1) as usize;
        let coverage = (8 >> depth) as f64;
        if depth < 3 {
            nodes.push(split(depth, 1.0, 2 * i + 1, 2 * i + 2, coverage));
        } else {
            nodes.push(leaf(if i == 14 { 1.0 } else { 0.0 }, coverage));
        }
    }
    TreeEnsemble::from_nodes(vec![nodes], 3, Aggregation::Sum).unwrap()
}
