use thiserror::Error;

use crate::Complex;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed arrangement file: {0}")]
    Json(#[from] serde_json::Error),

    #[error("invalid weight {0:?}: expected a rational string like \"2/3\" or a number")]
    BadWeight(String),

    #[error("arrangement must contain at least one hyperplane")]
    NoHyperplanes,

    #[error("ambient dimension must be positive")]
    ZeroDimension,

    #[error("hyperplane {0} has a zero linear part")]
    ZeroLinearPart(usize),

    #[error("hyperplanes {0} and {1} define the same zero set")]
    DuplicateHyperplane(usize, usize),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("dimension mismatch: expected a point of C^{expected}, got length {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("hyperplane index {index} out of range for {len} hyperplanes")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("point lies on hyperplane {hyperplane} (|xi| = {modulus:e})")]
    PointOnArrangement { hyperplane: usize, modulus: f64 },

    #[error("arrangement of rank {rank} in C^{dim} is not essential")]
    NotEssential { rank: usize, dim: usize },

    #[error("weights must be strictly positive")]
    NonPositiveWeights,

    #[error("found {found} of {target} critical points: alpha possibly non-generic or budget too small")]
    BudgetExhausted {
        found: usize,
        target: usize,
    },

    #[error("critical point is degenerate: min |eigenvalue| {min_abs:e} vs max {max_abs:e}")]
    DegenerateCritical { min_abs: f64, max_abs: f64 },

    #[error("point is not critical: residual {residual:e} exceeds tolerance {tolerance:e}")]
    NotCritical { residual: f64, tolerance: f64 },

    #[error("arrangement is not central: the hyperplanes have no common point")]
    NonCentral,

    #[error("weights have rank {0}; a circle-valued map needs rank one")]
    WeightRankNotOne(usize),

    #[error("unknown vector field {0:?}")]
    UnknownField(String),

    #[error("integration step underflow at t = {t} near the arrangement")]
    StepUnderflow { t: f64, last: Vec<Complex> },

    #[error("sampling near flat {flat} at distance {shell} exhausted its rejection budget")]
    RejectionBudget { flat: usize, shell: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
