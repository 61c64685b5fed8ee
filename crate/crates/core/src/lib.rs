//! Sublinear-query spectrum estimation for large symmetric matrices.
//!
//! The estimators read a small, randomly chosen part of a matrix through a
//! query-counted [`SymmetricMatrixOracle`](matrix::SymmetricMatrixOracle):
//!
//! | module | input model | guarantee |
//! |--------|-------------|-----------|
//! | [`uniform`] | entries bounded by 1 | all eigenvalues to `eps * n` |
//! | [`rownorm`] | squared row-norm sampling | all eigenvalues to `eps * ||A||_F` |
//! | [`eigvec`] | PSD, entries bounded by 1 | unit `u` with `u^T A u >= lambda_1 - eps * n` |
//! | [`hadamard`] | dense input | bilinear sketch decoded to `eps * ||A||_F` |
//!
//! [`analysis`] measures the structural conditions (subspace embedding
//! distortion, incoherence, middle-part operator norms) that the guarantees
//! rest on, and [`harness`] runs seeded multi-trial experiments to CSV.

// `!(x > 0.0)` deliberately rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod config;
pub mod eigvec;
pub mod error;
pub mod hadamard;
pub mod harness;
pub mod matrix;
pub mod par;
pub mod rng;
pub mod rownorm;
pub mod uniform;

pub use config::EstimatorConfig;
pub use error::{Error, Result};
pub use matrix::{SpectrumEstimate, SymmetricMatrixOracle};
