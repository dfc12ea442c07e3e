use std::fmt;
use std::str::FromStr;

use crate::error::Error;
use crate::scalar::Scalar;

/// The algorithm that produced an [`Attribution`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    ShapleyBasic,
    ShapleyFast,
    BanzhafBasic,
    BanzhafFast,
    OracleShapley,
    OracleBanzhaf,
    /// Brute force with caller-supplied per-size weights.
    OracleCustom,
}

impl Method {
    /// The four traversal algorithms, in reporting order.
    pub const ALGORITHMS: [Method; 4] =
        [Method::ShapleyBasic, Method::ShapleyFast, Method::BanzhafBasic, Method::BanzhafFast];

    pub fn name(self) -> &'static str {
        match self {
            Method::ShapleyBasic => "shapley_basic",
            Method::ShapleyFast => "shapley_fast",
            Method::BanzhafBasic => "banzhaf_basic",
            Method::BanzhafFast => "banzhaf_fast",
            Method::OracleShapley => "oracle_shapley",
            Method::OracleBanzhaf => "oracle_banzhaf",
            Method::OracleCustom => "oracle_custom",
        }
    }

    pub fn is_shapley(self) -> bool {
        matches!(self, Method::ShapleyBasic | Method::ShapleyFast | Method::OracleShapley)
    }

    pub fn is_banzhaf(self) -> bool {
        matches!(self, Method::BanzhafBasic | Method::BanzhafFast | Method::OracleBanzhaf)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Ok(match s.trim() {
            "shapley_basic" => Method::ShapleyBasic,
            "shapley_fast" => Method::ShapleyFast,
            "banzhaf_basic" => Method::BanzhafBasic,
            "banzhaf_fast" => Method::BanzhafFast,
            "oracle_shapley" => Method::OracleShapley,
            "oracle_banzhaf" => Method::OracleBanzhaf,
            other => return Err(Error::Invalid(format!("unknown method {other:?}"))),
        })
    }
}

/// Per-feature attribution for one data point.
#[derive(Debug, Clone, PartialEq)]
pub struct Attribution<T> {
    pub values: Vec<T>,
    /// Model output with no feature fixed.
    pub expected_value: T,
    pub method: Method,
}

impl<T: Scalar> Attribution<T> {
    pub fn sum(&self) -> T {
        self.values.iter().fold(T::zero(), |acc, v| acc + v.clone())
    }

    pub fn to_f64(&self) -> Attribution<f64> {
        Attribution {
            values: self.values.iter().map(Scalar::to_f64).collect(),
            expected_value: self.expected_value.to_f64(),
            method: self.method,
        }
    }
}
