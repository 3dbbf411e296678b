//! Reconstruction of the initial spectral density behind a Dyson Brownian
//! motion observed at a single time.
//!
//! The estimator runs in two stages. A free-deconvolution step solves the
//! empirical subordination fixed point on the observed eigenvalues, turning
//! the spectrum at time t into the density of (initial law) * Cauchy(gamma).
//! A classical Fourier deconvolution against that Cauchy distribution, with
//! a band-limited kernel and bandwidth selection, then recovers the initial
//! density itself. Simulation backends, closed-form oracles, and replicated
//! study harnesses surround the estimator so every step can be checked
//! against something independent.

// Parameter guards are written as `!(x > 0.0)` on purpose: the negated form
// rejects NaN, which `x <= 0.0` would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bandwidth;
pub mod dbm;
pub mod deconv;
pub mod error;
pub mod harness;
pub mod seeding;
pub mod stats;
pub mod subordination;
pub mod transforms;

pub use error::{Error, Result};
