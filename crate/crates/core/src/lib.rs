//! Finite-dimensional laboratory for Anderson-style matrix paving.
//!
//! The crate is organised bottom-up:
//!
//! * [`linalg`] – dense Hermitian linear algebra (Jacobi eigensolver, Cholesky,
//!   triangular inverse, block completion, principal compressions).
//! * [`ensembles`] – random matrix families, Toeplitz sections of trigonometric
//!   symbols and Fejér–Riesz factorization.
//! * [`paving`] – partitions in restricted-growth form and exact / heuristic
//!   paving searches for the norm and positive-certificate objectives.
//! * [`extension`] – extensions of diagonal states to density matrices and the
//!   primal/dual bounds on their values.
//! * [`equivalence`] – reductions between paving problems (triangular to
//!   Hermitian, Toeplitz real/imaginary split) and identity checks.

pub mod ensembles;
pub mod equivalence;
pub mod error;
pub mod extension;
pub mod linalg;
pub mod paving;
pub mod rng;

pub use error::{Error, Result};
pub use linalg::{CMatrix, HermitianMatrix, Spectrum, UpperTriangularMatrix};
pub use num_complex::Complex64;
