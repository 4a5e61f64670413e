use std::fmt;

use crate::partition::PartitionViolation;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not symmetric at ({i}, {j})")]
    NotSymmetric { i: usize, j: usize },

    #[error("non-finite matrix entry at ({i}, {j})")]
    NonFinite { i: usize, j: usize },

    #[error("invalid variance profile: {0}")]
    InvalidProfile(String),

    #[error("symmetric eigensolver did not converge (n = {n})")]
    NoConvergence { n: usize },

    #[error("near-degenerate spectrum at alpha = {alpha}: gap {gap:.3e} below tolerance {tol:.3e}")]
    NearDegenerate { alpha: usize, gap: f64, tol: f64 },

    #[error("near-degenerate spectrum along path at s = {s}: {source}")]
    DegenerateAlongPath {
        s: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("infeasible tiling: no equal-nu block arrangement for n = {n}, width = {width}")]
    InfeasibleTiling { n: usize, width: usize },

    #[error("invalid partition: {0}")]
    InvalidPartition(PartitionViolation),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("time t = {t} exceeds the admissible cap {cap} for (tau, eta)")]
    TimeCap { t: f64, cap: f64 },

    #[error("partition too large for exact enumeration: m = {m} > {max}")]
    EnumerationTooLarge { m: usize, max: usize },

    #[error("too many degenerate draws: {count} of {trials} trials")]
    DegenerateBudget { count: u64, trials: u64 },

    #[error("config not found: {0}")]
    ConfigNotFound(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl fmt::Display) -> Self {
        Error::InvalidArgument(msg.to_string())
    }
}
