//! Quantum dynamics of Bose-Hubbard lattices: exact few-mode propagation,
//! truncated Wigner and positive-P sampling, Gaussian-state entropies and a
//! multi-configuration coherent-state variational method.

pub mod error;
pub mod fewmode;
pub mod gaussian;
pub mod field;
pub mod lattice;
pub mod linalg;
pub mod plusp;
pub mod spin;
pub mod stochastic;
pub mod variational;
pub mod wigner;

pub use error::{Error, Result};
pub use num_complex::Complex64;
