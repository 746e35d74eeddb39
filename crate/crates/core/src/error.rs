use thiserror::Error;

/// Errors raised by the cone, barrier, verifier and solver routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("power exponent {0} is outside (0, 1) ∪ [1, 2]")]
    InvalidExponent(f64),

    #[error("derivative order {0} is not one of 1, 2, 3")]
    InvalidOrder(u8),

    #[error("argument outside the open domain: {0}")]
    Domain(String),

    #[error("symmetric eigensolver failed to converge")]
    ConvergenceFailure,

    #[error("point is not in the interior of the cone: {0}")]
    NotInterior(String),

    #[error("invalid direction: {0}")]
    InvalidDirection(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("barrier Hessian factorization failed")]
    SingularHessian,

    #[error("KKT system is singular")]
    SingularKkt,

    #[error("constraint matrix does not have full row rank")]
    RankDeficient,

    #[error("initial point is not feasible: {0}")]
    InfeasibleStart(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
