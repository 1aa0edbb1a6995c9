use thiserror::Error;

/// Errors produced by the simulation kernel.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("Pauli index {0} out of range 0..=3")]
    PauliIndex(usize),

    #[error("matrix is not Hermitian (max |m - m^dagger| = {violation:e})")]
    NonHermitian { violation: f64 },

    #[error("matrix trace deviates from one by {violation:e}")]
    NonUnitTrace { violation: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("function undefined at eigenvalue {eigenvalue:e}")]
    FunctionUndefined { eigenvalue: f64 },

    #[error("invalid Bell-diagonal coefficients ({c1}, {c2}, {c3}): eigenvalue {min_eigenvalue:e} < 0")]
    InvalidCConfig {
        c1: f64,
        c2: f64,
        c3: f64,
        min_eigenvalue: f64,
    },

    #[error("Gram determinant {gram:e} is degenerate")]
    DegenerateGram { gram: f64 },

    #[error("step rejected at t = {time}: PSD violation {violation:e}")]
    StepRejected { time: f64, violation: f64 },

    #[error("no constraint root found from any start")]
    NoRootFound,

    #[error("none of the {roots} constraint roots yields a valid state")]
    AllRootsInvalid { roots: usize },

    #[error("zero variance in correlation input")]
    ZeroVariance,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
