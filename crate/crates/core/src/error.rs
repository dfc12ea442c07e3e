use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed model: {0}")]
    Parse(String),
    #[error("unsupported format_version {0} (expected 1)")]
    FormatVersion(u64),
    #[error("tree {tree}, node {node}: coverage {parent} != {left} + {right}")]
    CoverageMismatch { tree: usize, node: usize, parent: f64, left: f64, right: f64 },
    #[error("tree {tree}, node {node}: coverage must be positive and finite, got {coverage}")]
    NonPositiveCoverage { tree: usize, node: usize, coverage: f64 },
    #[error("tree {tree}, node {node}: feature {feature} out of range (num_features = {num_features})")]
    FeatureOutOfRange { tree: usize, node: usize, feature: usize, num_features: usize },
    #[error("tree {tree}: {reason}")]
    Structure { tree: usize, reason: String },
    #[error("tree {tree}, node {node}: non-finite {what}")]
    NonFinite { tree: usize, node: usize, what: &'static str },
    #[error("tree {tree}, node {node}: exact mode needs integer coverage, got {coverage}")]
    NonIntegerCoverage { tree: usize, node: usize, coverage: f64 },
    #[error("feature vector has {got} values, model expects {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("{count} relevant features exceeds the oracle cap of {cap}")]
    OracleCap { count: usize, cap: usize },
    #[error("invalid weights: {0}")]
    Weights(String),
    #[error("context save stack underflow: ascend without matching descend")]
    AscendUnderflow,
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("{0}")]
    Csv(String),
}

impl Error {
    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Dimension { .. } => 2,
            Error::OracleCap { .. } => 3,
            _ => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
