//! Sparse recovery by Pareto-curve root finding.
//!
//! The solvers in this crate recover a sparse `x` from `y = Ax + e`,
//! `‖e‖₂ ≤ ε`, by solving a sequence of (weighted) LASSO subproblems with a
//! spectral projected-gradient method and moving the ℓ1 radius `τ` with
//! Newton's method until the residual reaches `ε`.
//!
//! ```no_run
//! use wspgl1::{drivers, linop};
//!
//! let op = linop::MeasurementOperator::gaussian(100, 400, 1)?;
//! let x = linop::SparseSignal::random(400, 20, 2)?;
//! let meas = linop::Measurement::noiseless(&op, &x, 1e-6)?;
//! let result = drivers::solve_wspgl1(&op, &meas, &drivers::DriverConfig::default())?;
//! assert!(result.converged);
//! # Ok::<(), wspgl1::Error>(())
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod config;
pub mod drivers;
pub mod error;
pub mod harness;
pub mod linop;
pub mod norms;
pub mod spg_lasso;
pub mod vecops;

pub use error::{Error, Result};
