use thiserror::Error;

use crate::spec::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid capability distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid code specification ({} violation(s)): {}", .0.len(), join_violations(.0))]
    InvalidSpec(Vec<Violation>),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("no threshold bracket found in [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },

    #[error("branching tree exceeded {0} nodes")]
    TreeTooLarge(usize),

    #[error("simplex exceeded {0} pivots without terminating")]
    PivotLimit(usize),

    #[error("simplex lost feasibility: {0}")]
    Numerical(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
