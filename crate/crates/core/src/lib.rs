//! Kernelized Bayesian matrix factorization with component-wise multiple
//! kernel learning, plus the tooling around it: kernel views built from
//! feature matrices and gene sets, a synthetic recovery benchmark, a
//! cross-validation harness and association extraction.

pub mod associations;
pub mod error;
pub mod evaluation;
pub mod inference;
pub mod io;
pub mod kernelviews;
pub mod linalg;
pub mod rng;
mod serde_matrix;
pub mod synthetic;

pub use error::{Error, Result};
