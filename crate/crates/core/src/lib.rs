//! Interface crack on a partially debonded inclusion with curvature-dependent surface tension.

// NaN inputs are rejected with negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod cli;
pub mod config;
pub mod error;
pub mod geometry;
pub mod kernels;
pub mod model;
pub mod postprocess;
pub mod quadrature;
pub mod scenario;
pub mod solver;
pub mod validation;

pub use error::{Error, Result};
