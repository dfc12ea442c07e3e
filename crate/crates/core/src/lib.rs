//! Exact Shapley and Banzhaf attributions for binary decision-tree ensembles.
//!
//! The set function fixes the features in a coalition to the explained point
//! and averages the remaining splits by training coverage. Four traversal
//! algorithms compute the attributions ([`shapley`], [`banzhaf`]); a
//! brute-force oracle ([`pathdep`]) evaluates the definitions directly.
//! Every algorithm is generic over [`Scalar`], so the same code runs in
//! `f64`, `f32` or exact rational arithmetic.
//!
//! ```
//! use tree_attrib::{explain, FeatureVector, Method, TreeEnsemble};
//!
//! let json = br#"{"format_version": 1, "num_features": 1, "trees": [{"nodes": [
//!     {"kind": "split", "feature": 0, "threshold": 5.0, "left": 1, "right": 2, "coverage": 4},
//!     {"kind": "leaf", "value": 10.0, "coverage": 3},
//!     {"kind": "leaf", "value": 20.0, "coverage": 1}]}]}"#;
//! let model = TreeEnsemble::from_json(json).unwrap();
//! let x = FeatureVector::new(vec![7.0]).unwrap();
//! let (phi, _) = explain::<f64>(Method::ShapleyFast, &model, &x).unwrap();
//! assert_eq!(phi.values, vec![7.5]);
//! assert_eq!(phi.expected_value, 12.5);
//! ```

pub mod analysis;
pub mod attribution;
pub mod banzhaf;
pub mod cli;
pub mod context;
pub mod error;
pub mod io;
pub mod model;
pub mod pathdep;
pub mod scalar;
pub mod shapley;
pub mod synth;
pub mod traversal;

#[cfg(test)]
mod fixtures;

use num_rational::BigRational;

pub use attribution::{Attribution, Method};
pub use error::{Error, Result};
pub use model::{Aggregation, FeatureVector, Tree, TreeEnsemble, TreeNode};
pub use pathdep::{oracle_values, oracle_values_many, WeightScheme};
pub use scalar::Scalar;
pub use traversal::OpCounter;

/// Exact rational scalar used for verification runs.
pub type Exact = BigRational;
pub type ExactAttribution = Attribution<Exact>;
pub type F64Attribution = Attribution<f64>;

/// Runs `method` on one point.
///
/// Oracle methods report an empty [`OpCounter`].
pub fn explain<T: Scalar>(
    method: Method,
    model: &TreeEnsemble,
    x: &FeatureVector,
) -> Result<(Attribution<T>, OpCounter)> {
    match method {
        Method::ShapleyBasic => shapley::explain_basic(model, x),
        Method::ShapleyFast => shapley::explain_fast(model, x),
        Method::BanzhafBasic => banzhaf::explain_banzhaf_basic(model, x),
        Method::BanzhafFast => banzhaf::explain_banzhaf_fast(model, x),
        Method::OracleShapley => Ok((oracle_values(model, x, &WeightScheme::Shapley)?, OpCounter::default())),
        Method::OracleBanzhaf => Ok((oracle_values(model, x, &WeightScheme::Banzhaf)?, OpCounter::default())),
        Method::OracleCustom => {
            Err(Error::Invalid("oracle_custom needs explicit weights; call pathdep::oracle_values".into()))
        }
    }
}
