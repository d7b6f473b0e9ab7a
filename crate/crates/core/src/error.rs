use thiserror::Error;

use crate::simplex::LpStatus;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("constraint matrix has rank {rank} < {rows} rows")]
    RankDeficient { rank: usize, rows: usize },
    #[error("more constraints ({rows}) than variables ({cols})")]
    TooManyRows { rows: usize, cols: usize },
    #[error("invalid basis: {0}")]
    InvalidBasis(String),
    #[error("basis matrix is singular")]
    SingularBasis,
    #[error("instance too large: {count} candidate subsets exceed cap {cap}")]
    InstanceTooLarge { count: u128, cap: u128 },
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("point is not a Slater point: {0}")]
    NotSlater(String),
    #[error("polytope has no vertices")]
    EmptyPolytope,
    #[error("min-norm-point iteration did not converge in {iterations} iterations (gap {gap:e})")]
    NoConvergence { iterations: usize, gap: f64 },
    #[error("target solution is not unique ({vertices} optimal vertices)")]
    NotUnique { vertices: usize },
    #[error("right-hand sides coincide; ratio undefined")]
    DegenerateDenominator,
    #[error("covariance matrix is singular")]
    SingularCovariance,
    #[error("instance mismatch: {0}")]
    InstanceMismatch(String),
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("simplex iteration limit of {0} reached")]
    IterationLimit(usize),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// Solver outcome carried by this error, if it is one.
    pub fn lp_status(&self) -> Option<LpStatus> {
        match self {
            Error::Infeasible => Some(LpStatus::Infeasible),
            Error::Unbounded => Some(LpStatus::Unbounded),
            _ => None,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
