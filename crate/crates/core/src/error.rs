use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is singular or not invertible")]
    Singular,
    #[error("determinant {0} is not positive")]
    NonPositiveDeterminant(f64),
    #[error("metric must be symmetric positive-definite")]
    InvalidMetric,
    #[error("element has mixed parity")]
    MixedParity,
    #[error("twisted adjoint leaves V+V* (residual {residual:.3e})")]
    NotInCpin { residual: f64 },
    #[error("degenerate spinor: annihilator has dimension {found}, expected {expected}")]
    Degenerate { expected: usize, found: usize },
    #[error("zero covector")]
    ZeroCovector,
    #[error("generalized complex structures do not commute (residual {0:.3e})")]
    NonCommuting(f64),
    #[error("eigenvalue clustering failed: {0}")]
    Clustering(String),
    #[error("form is not closed (residual {0:.3e})")]
    NotClosed(f64),
    #[error("obstructed at order {order}: harmonic part {norm:.3e}")]
    Obstructed { order: usize, norm: f64 },
    #[error("truncation {trunc} too small, need {needed}")]
    TruncationTooSmall { needed: u32, trunc: u32 },
    #[error("tolerance failure in {what}: {value:.3e} > {tol:.1e}")]
    Tolerance { what: String, value: f64, tol: f64 },
    #[error("invalid structure: {0}")]
    InvalidStructure(String),
}

pub type Result<T> = core::result::Result<T, Error>;
