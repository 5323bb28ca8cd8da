//! Estimation and coordinate-wise inference for high-dimensional
//! single-index models `E[y | x] = g(beta^T x)` with unknown monotone `g`.
//!
//! The estimator runs in four steps:
//! a pilot fit with observable adjustments, a debiased index, a deconvolution
//! estimate of the link, and a surrogate-loss fit of the coefficients, followed
//! by estimation of the inferential parameters.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod deconv;
pub mod error;
pub mod experiment;
pub mod index;
pub mod inference;
pub mod io;
pub mod linalg;
pub mod model;
pub mod monotonize;
pub mod pilot;
pub mod pipeline;
pub mod quadrature;
pub mod seed;
pub mod stats;
pub mod surrogate;

pub use error::{Error, Result};
