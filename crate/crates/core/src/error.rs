use thiserror::Error;

/// Errors raised by the numerical layer and the test harness.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum LabError {
    #[error("matrix is not Hermitian: max asymmetry {max_asymmetry:.3e} exceeds {tolerance:.3e}")]
    NotHermitian { max_asymmetry: f64, tolerance: f64 },

    #[error("matrix is not positive definite: smallest eigenvalue {min_eigenvalue:.6e}")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("scalar function is not finite at eigenvalue {eigenvalue:.6e}")]
    NonFiniteFunction { eigenvalue: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("map is not strictly positive: lambda_min(Phi(I)) = {min_eigenvalue:.3e}, lambda_max = {max_eigenvalue:.3e}")]
    NotStrictlyPositive {
        min_eigenvalue: f64,
        max_eigenvalue: f64,
    },

    #[error("inversion failed: Phi(A^-1) has eigenvalue {min_eigenvalue:.3e} below floor {floor:.3e}")]
    RegularizationFailure { min_eigenvalue: f64, floor: f64 },

    #[error("unitality premise violated: ||Phi(I) + Psi(I) - I||_max = {deviation:.3e}")]
    UnitalityViolation { deviation: f64 },

    #[error("inner matrix is indefinite: lambda_min = {min_eigenvalue:.6e}, lambda_max = {max_eigenvalue:.6e}")]
    IndefiniteInner {
        min_eigenvalue: f64,
        max_eigenvalue: f64,
    },

    #[error("descent budget exhausted after {iterations} iterations: best {best:.15e}, target {target:.15e}, relative gap {gap:.3e}")]
    BudgetExhausted {
        iterations: usize,
        best: f64,
        target: f64,
        gap: f64,
    },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("unknown theorem id `{0}`")]
    UnknownTheorem(String),

    #[error("empty scan range: {0}")]
    EmptyRange(String),

    #[error("serialization: {0}")]
    Serialization(String),
}

impl From<serde_json::Error> for LabError {
    fn from(err: serde_json::Error) -> Self {
        LabError::Serialization(err.to_string())
    }
}

impl LabError {
    /// Caller-side failures: bad inputs, off-region parameters, unmet premises.
    pub fn is_precondition(&self) -> bool {
        !matches!(self, LabError::BudgetExhausted { .. } | LabError::Serialization(_))
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
