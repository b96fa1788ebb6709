//! Simulation and large-deviation analysis of one-dimensional SDEs driven by heavy-tailed
//! Lévy noise.

// Negated comparisons deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cadlag;
pub mod cluster;
pub mod error;
pub mod experiments;
pub mod levy;
pub mod rate;
pub mod rng;
pub mod sets;
pub mod solution;
pub mod stats;

pub use error::{Error, Result};
