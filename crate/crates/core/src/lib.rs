//! Dense one-dimensional laboratory for nonlocal Dirichlet problems.
//!
//! Restricted, spectral and censored fractional Laplacians on an interval,
//! their Green operators, boundary-rate analysis, a quadrature oracle for the
//! model kernels, and the Martin-kernel machinery for large solutions.

pub mod boundary;
pub mod discrete;
pub mod error;
pub mod green;
pub mod grid;
pub mod linalg;
pub mod martin;
pub mod operator;
pub mod oracle;
pub mod quad;

pub use error::{Error, Result};
pub use grid::{delta, power_data, Grid, GridFunction};
pub use operator::{gamma_of, OperatorKind, OperatorSpec};
