//! Expected L2 discrepancy of two-point jittered sampling on the unit
//! square, and a collocation solver for the optimal decreasing,
//! diagonal-symmetric partition boundary at a given area split.

pub mod cli;
pub mod discrepancy;
pub mod error;
pub mod integral_equation;
pub mod mc_oracle;
pub mod poly;
pub mod quadrature;
pub mod regions;
pub mod solver;

pub use error::{Error, Result};
