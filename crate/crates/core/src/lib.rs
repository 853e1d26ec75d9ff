//! Permutation-based SGD laboratory.
//!
//! The crate is organized around the life cycle of an experiment:
//!
//! * [`problems`] holds the finite-sum data model ([`problems::QuadraticSum`],
//!   the [`problems::FiniteSum`] trait) and instance statistics.
//! * [`instances`] builds the constructed problem families (mean computation,
//!   lower-bound families, logistic data, Hessian-smooth 1-D sums).
//! * [`schedulers`] emits one permutation per epoch (IGD, Single Shuffle,
//!   Random Reshuffle, optionally wrapped by FlipFlop).
//! * [`engine`] runs epochs, records trajectories and exposes the exact affine
//!   epoch maps of quadratics.
//! * [`search`] enumerates or greedily constructs permutation sequences.
//! * [`analysis`] fits convergence rates and checks the supporting lemmas
//!   numerically.
//!
//! Component indices are 0-based throughout the API; permutations are
//! reported 1-based when serialized.

// `!(x > 0.0)` deliberately rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod engine;
mod error;
pub mod instances;
pub mod linalg;
pub mod problems;
pub mod rng;
pub mod schedulers;
pub mod search;

pub use error::{Error, Result};

/// Dense column vector used for iterates, gradients and linear terms.
pub type Vector = nalgebra::DVector<f64>;
/// Dense matrix used for Hessians and epoch maps.
pub type Matrix = nalgebra::DMatrix<f64>;
