use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("algebra mismatch: blocks {left:?} vs {right:?}")]
    DescriptorMismatch { left: Vec<usize>, right: Vec<usize> },

    #[error("invalid algebra descriptor: {0}")]
    InvalidDescriptor(String),

    #[error("invalid element: {0}")]
    InvalidElement(String),

    #[error("element is singular: smallest singular value {smallest:e} <= threshold {threshold:e}")]
    SingularInput { smallest: f64, threshold: f64 },

    #[error("unitary has an eigenvalue within {distance:e} of -1 (branch gap {gap:e})")]
    BranchCut { distance: f64, gap: f64 },

    #[error("element is not positive invertible")]
    NotPositive,

    #[error("element is not self-adjoint (defect {defect:e})")]
    NotSelfAdjoint { defect: f64 },

    #[error("element is not unitary (defect {defect:e})")]
    NotUnitary { defect: f64 },

    #[error("parameter {t} outside path domain [{lo}, {hi}]")]
    OutOfDomain { t: f64, lo: f64, hi: f64 },

    #[error("path value is singular at t = {t}")]
    SingularValueOnPath { t: f64 },

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("quadrature did not converge: last change {last_change:e} after {steps} steps")]
    NoConvergence { last_change: f64, steps: usize },

    #[error("path is not a loop at the identity (endpoint defect {defect:e})")]
    NotALoop { defect: f64 },

    #[error("path is not unitary-valued at t = {t} (defect {defect:e})")]
    NotUnitaryPath { t: f64, defect: f64 },

    #[error("exponential splitting needs more than {limit} steps")]
    PartitionOverflow { limit: usize },

    #[error("block {block} has determinant {re} + {im}i, expected 1")]
    DeterminantNotOne { block: usize, re: f64, im: f64 },

    #[error("element is not in the closure of products of positives (block determinant phases {phases:?})")]
    NotInClosure { phases: Vec<f64> },

    #[error("factorization did not reach target: best relative residual {best_relative_residual:e}")]
    FactorizationNoConvergence {
        best_relative_residual: f64,
        best: Box<crate::factorization::PositiveFactorization>,
    },

    #[error("expected rank {expected}, got {got}")]
    RankMismatch { expected: usize, got: usize },

    #[error("density of the pairing range can only be decided for rank 1 (got rank {rank}); assert it instead")]
    RankTooHighForDensity { rank: usize },

    #[error("inconsistent descriptor: {0}")]
    InconsistentFlags(String),

    #[error("invalid rational {0:?}")]
    InvalidRational(String),
}
