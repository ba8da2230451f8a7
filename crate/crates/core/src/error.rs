use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SteeringError {
    #[error("unsupported operator order {0} (expected 1, 2 or 3)")]
    UnsupportedOrder(usize),
    #[error("atom number {n} outside supported range {min}..={max}")]
    AtomNumber { n: usize, min: usize, max: usize },
    #[error("matrix is not Hermitian: deviation {deviation:e}")]
    NotHermitian { deviation: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("density block for N_B = {n_b} is not positive semidefinite (eigenvalue {eigenvalue:e})")]
    NotPositive { n_b: usize, eigenvalue: f64 },
    #[error("commutator matrix leaves the covariance support (residual {residual:e}, scale {scale:e})")]
    SupportViolation { residual: f64, scale: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("numerical assertion failed: {0}")]
    Numerical(String),
}

pub type Result<T, E = SteeringError> = std::result::Result<T, E>;
