//! Quadratically regularised optimal transport on sampled manifolds.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod graph;
pub mod pme;
pub mod rng;
pub mod scaling;
pub mod solver;
pub mod sparse;
pub mod stats;

pub use error::{Error, Result};
