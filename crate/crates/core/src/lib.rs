//! Sampling-set design for bandlimited graph signals observed under noise.
//!
//! The pipeline:
//!
//! 1. build a weighted graph and its Laplacian ([`graph`]),
//! 2. eigendecompose it and take the first `K` eigenvectors as the signal
//!    subspace ([`spectral`]),
//! 3. solve the relaxed experimental-design problem over the probability
//!    simplex and quantize the fractional design to integer per-node sample
//!    quotas ([`design`]),
//! 4. sample with noise and reconstruct with the best linear unbiased
//!    estimator ([`estimation`]),
//! 5. compare against distinct-node baselines ([`baselines`]) in seeded
//!    Monte Carlo runs ([`bench`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod bench;
pub mod design;
pub mod error;
pub mod estimation;
pub mod graph;
pub mod linalg;
pub mod rng;
pub mod spectral;

pub use error::{Error, Result};
