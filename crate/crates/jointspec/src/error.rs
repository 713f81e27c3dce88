//! Shared error type for all analysis modules.

use thiserror::Error;

/// Errors surfaced by matrix plumbing, certification, enumeration and
/// simulation routines. One flat enum because higher-level operations
/// propagate lower-level failures unchanged.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is numerically singular (|det| below threshold)")]
    SingularMatrix,
    #[error("iterative decomposition failed to converge: {0}")]
    NumericalFailure(String),
    #[error("unsupported representation or frame for this operation")]
    UnsupportedRep,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("elements at indices {0:?} are not proximal")]
    NotProximalMember(Vec<usize>),
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("budget exceeded: needs {needed} units, budget {budget}")]
    BudgetExceeded { needed: u64, budget: u64 },
    #[error("invalid enumeration mode: {0}")]
    InvalidMode(String),
    #[error("hull contains the origin in its interior; cone undefined")]
    OriginInterior,
    #[error("polygon is degenerate (no interior point in the open chamber)")]
    DegeneratePolygon,
    #[error("no Schottky-certified witness words could be produced")]
    NoSchottkyWitnesses,
    #[error("target point is not interior to the hull with the required margin")]
    NotInterior,
    #[error("realization verification failed: {0}")]
    Unachieved(String),
    #[error("generator set is not certified dominated")]
    NotDominated,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix determinant is not 1 within tolerance")]
    NotUnimodular,
    #[error("isometry is not hyperbolic")]
    NotHyperbolic,
    #[error("n*alpha is not integral within tolerance; no balanced class exists")]
    NotBalancedRatio,
    #[error("axes are not disjoint and coherently oriented")]
    NotSameDirection,
}

pub type Result<T> = std::result::Result<T, Error>;
