use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max |A - A^H| = {deviation:e})")]
    NonHermitianInput { deviation: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("trace {trace} is not 1 within tolerance")]
    NotNormalized { trace: f64 },

    #[error("eigensolver failed to converge")]
    EigensolverFailed,

    #[error("integral diverges: {0}")]
    IntegralDiverges(String),

    #[error("quadrature did not converge (estimated error {estimate:e}, requested {requested:e})")]
    QuadratureNotConverged { estimate: f64, requested: f64 },

    #[error("ambiguous clustering: values {a} and {b} are {separation:e} apart, within the guard band of tolerance {tol:e}")]
    AmbiguousGapClustering {
        a: f64,
        b: f64,
        separation: f64,
        tol: f64,
    },

    #[error("ground state is degenerate (gap {gap:e})")]
    DegenerateGroundState { gap: f64 },

    #[error("total dimension {dim} exceeds the cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("unsupported combination: {0}")]
    UnsupportedCombination(String),
}

pub type Result<T> = std::result::Result<T, Error>;
