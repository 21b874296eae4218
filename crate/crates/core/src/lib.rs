//! Exact partition sums of normal factor graphs over Z_q, chain complexes of
//! lattices, Fourier dualization with exact scale bookkeeping, and
//! finite-size Kramers-Wannier duality checks for Ising and Potts models.

pub mod algebra;
pub mod bridge;
pub mod complex;
pub mod error;
pub mod fourier;
pub mod models;
pub mod nfg;
pub mod parallel;

pub use error::{Error, Result};
pub use parallel::EvalConfig;
