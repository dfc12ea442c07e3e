//! Banzhaf values under the coverage-based set function.
//!
//! The state for a node `v` and feature set `G` is the single number
//! `β(v,G) = 2^{-|G|} · Σ_{S ⊆ G} P[v,S]`. Adding a feature with multiplier
//! `δ` multiplies it by `(1+δ)/2`, so artificial features (`δ = 1`) leave it
//! unchanged and the padded traversal needs no padding work.

use crate::attribution::{Attribution, Method};
use crate::error::Result;
use crate::model::TreeEnsemble;
use crate::scalar::Scalar;
use crate::traversal::{explain_basic_with, explain_fast_with, OpCounter, PathState};
use crate::FeatureVector;

#[derive(Debug, Clone, PartialEq)]
pub struct BanState<T>(pub T);

/// `β · (1+δ)/2`.
pub fn add_feature_b<T: Scalar>(beta: &T, delta: &T) -> T {
    (T::one() + delta.clone()) * beta.clone() / T::from_usize(2)
}

/// `2β / (1+δ)`, the inverse of [`add_feature_b`]. `1+δ ≥ 1` for every valid `δ`.
pub fn del_feature_b<T: Scalar>(beta: &T, delta: &T) -> T {
    T::from_usize(2) * beta.clone() / (T::one() + delta.clone())
}

impl<T: Scalar> PathState<T> for BanState<T> {
    fn root() -> Self {
        BanState(T::one())
    }

    fn add_feature(&mut self, delta: &T, ops: &mut OpCounter) {
        self.0 = add_feature_b(&self.0, delta);
        ops.add(1);
    }

    fn del_feature(&mut self, delta: &T, ops: &mut OpCounter) {
        self.0 = del_feature_b(&self.0, delta);
        ops.del(1);
    }

    fn add_dummy(&mut self, _ops: &mut OpCounter) {}

    fn del_dummy(&mut self, _ops: &mut OpCounter) {}

    fn scale(&mut self, factor: &T, ops: &mut OpCounter) {
        self.0 = self.0.clone() * factor.clone();
        ops.scale(1);
    }

    fn total(&self) -> T {
        self.0.clone()
    }

    fn weighted(&self, value: &T) -> Self {
        BanState(self.0.clone() * value.clone())
    }

    fn add_assign(&mut self, other: &Self) {
        self.0 = self.0.clone() + other.0.clone();
    }

    fn sub_assign(&mut self, other: &Self) {
        self.0 = self.0.clone() - other.0.clone();
    }
}

/// Banzhaf values, removing each path feature at every leaf.
pub fn explain_banzhaf_basic<T: Scalar>(
    model: &TreeEnsemble,
    x: &FeatureVector,
) -> Result<(Attribution<T>, OpCounter)> {
    explain_basic_with::<T, BanState<T>>(model, x, Method::BanzhafBasic)
}

/// Banzhaf values with bottom-up aggregation, linear in the number of leaves.
pub fn explain_banzhaf_fast<T: Scalar>(model: &TreeEnsemble, x: &FeatureVector) -> Result<(Attribution<T>, OpCounter)> {
    explain_fast_with::<T, BanState<T>>(model, x, Method::BanzhafFast)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{and3, two_feature};
    use crate::pathdep::{oracle_values, WeightScheme};
    use crate::shapley;
    use num_rational::BigRational;
    use proptest::prelude::*;

    fn q(p: i64, d: i64) -> BigRational {
        BigRational::new(p.into(), d.into())
    }

    #[test]
    fn state_update_examples() {
        assert_eq!(add_feature_b(&q(1, 1), &q(1, 1)), q(1, 1));
        assert_eq!(add_feature_b(&q(1, 1), &q(0, 1)), q(1, 2));
        assert_eq!(add_feature_b(&q(1, 1), &q(4, 1)), q(5, 2));
        assert_eq!(del_feature_b(&q(1, 1), &q(1, 1)), q(1, 1));
        assert_eq!(del_feature_b(&q(1, 2), &q(0, 1)), q(1, 1));
    }

    proptest! {
        #[test]
        fn del_inverts_add(b in -1000i64..1000, num in 0i64..400, zero in any::<bool>()) {
            let delta = if zero { q(0, 1) } else { q(100 + num, 100) };
            let beta = q(b, 13);
            prop_assert_eq!(del_feature_b(&add_feature_b(&beta, &delta), &delta), beta);
        }
    }

    #[test]
    fn two_feature_tree() {
        let x = FeatureVector::new(vec![7.0, 4.0]).unwrap();
        let m = two_feature();
        let oracle = oracle_values::<BigRational>(&m, &x, &WeightScheme::Banzhaf).unwrap();
        for (a, _) in [explain_banzhaf_basic::<BigRational>(&m, &x).unwrap(), explain_banzhaf_fast(&m, &x).unwrap()] {
            assert_eq!(a.values, vec![q(25, 2), q(15, 2)]);
            assert_eq!(a.values, oracle.values);
            assert_eq!(a.expected_value, q(10, 1));
        }
        let (f, _) = explain_banzhaf_fast::<f64>(&m, &x).unwrap();
        assert_eq!(f.values, vec![12.5, 7.5]);
    }

    #[test]
    fn efficiency_fails_on_three_way_and() {
        let m = and3();
        let x = FeatureVector::new(vec![1.0, 1.0, 1.0]).unwrap();
        let (a, _) = explain_banzhaf_fast::<BigRational>(&m, &x).unwrap();
        let oracle = oracle_values::<BigRational>(&m, &x, &WeightScheme::Banzhaf).unwrap();
        assert_eq!(a.values, oracle.values);
        assert_eq!(a.values, vec![q(9, 32); 3]);
        let gap = m.predict_as::<BigRational>(&x) - a.expected_value.clone();
        assert_eq!(gap, q(7, 8));
        assert_ne!(a.sum(), gap);

        // Shapley keeps efficiency on the same instance
        let (s, _) = shapley::explain_fast::<BigRational>(&m, &x).unwrap();
        assert_eq!(s.sum(), gap);
    }

    #[test]
    fn fast_variant_does_no_padding_work() {
        let m = two_feature();
        let x = FeatureVector::new(vec![7.0, 4.0]).unwrap();
        let (_, ops) = explain_banzhaf_fast::<f64>(&m, &x).unwrap();
        // four edges, one scaling on entry and one on exit; every write is a single entry
        assert_eq!(ops.add_ops, ops.add_count);
        assert_eq!(ops.del_ops, ops.del_count);
        assert_eq!(ops.scale_count, 8);
    }
}
