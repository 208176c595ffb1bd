use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian (asymmetry {asymmetry:.3e} relative to Frobenius norm)")]
    NotHermitian { asymmetry: f64 },
    #[error("matrix is not positive definite (pivot {pivot} = {value:.3e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("triangular matrix is singular (diagonal entry {index} = {value:.3e})")]
    Singular { index: usize, value: f64 },
    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal mass {off_diagonal:.3e})")]
    NonConvergence { sweeps: usize, off_diagonal: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("index subset is empty")]
    EmptySubset,
    #[error("index {index} out of range for dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("index {index} appears more than once")]
    DuplicateIndex { index: usize },
    #[error("exact search too large: n = {n} exceeds the cap {cap} for r = {r}; use a heuristic method")]
    TooLarge { n: usize, r: usize, cap: usize },
    #[error("need at least {needed} samples, got {samples}")]
    InsufficientSamples { samples: usize, needed: usize },
    #[error("symbol is not strictly positive (grid minimum {min:.3e})")]
    NotPositive { min: f64 },
    #[error("factor has a root on the unit circle (modulus {modulus})")]
    RootOnCircle { modulus: f64 },
    #[error("symbol is not real-valued")]
    NotRealSymbol,
    #[error("matrix is not strictly upper triangular")]
    NotStrictlyUpper,
    #[error("symbol is not analytic (negative Fourier coefficients present)")]
    NotAnalytic,
    #[error("symbol has nonzero mean coefficient")]
    NonzeroMean,
    #[error("band limits must satisfy 0 < a < 1 < b (got a = {a}, b = {b})")]
    InvalidBand { a: f64, b: f64 },
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}
