//! Spectral machinery for Jacobi-type operators.
//!
//! The crate is layered bottom-up:
//!
//! * [`trisolve`]: symmetric tridiagonal eigensolver, Gauss rules, block quadrature.
//! * [`opcore`]: scalar three-term recurrences, second-kind solutions, Markov
//!   approximants, Christoffel–Darboux kernels.
//! * [`qkernel`]: q-series primitives and the continuous q⁻¹-Hermite operator on ℓ²(ℤ).
//! * [`mvop`]: matrix-valued recurrences, Liouville–Ostrogradsky, matrix Gegenbauer
//!   family, commutants.
//! * [`jmatrix`]: Morse potential, the Jacobi differential operator `T`, the
//!   five-term operator and its 2×2 folding.
//! * [`cli`]: run configuration, reports and verification suites behind the binary.

pub mod cli;
pub mod error;
pub mod jmatrix;
pub mod mvop;
pub mod opcore;
pub mod qkernel;
pub mod special;
pub mod trisolve;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Dense complex matrix used throughout the matrix-valued code.
pub type CMat = nalgebra::DMatrix<Complex64>;
