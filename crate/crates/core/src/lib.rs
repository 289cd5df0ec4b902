//! Data-driven design of adaptive suboptimal second-order sliding-mode
//! (ASSOSM) controllers for perturbed strict-feedback plants.
//!
//! The workflow is:
//!
//! 1. [`data::collect`] runs a finite experiment on the (hidden) plant and
//!    assembles the state, virtual-input and derivative data matrices.
//! 2. [`design::solve_design`] turns that data and a noise-energy bound into a
//!    semidefinite program whose solution yields the virtual controller
//!    `phi(x_r) = K P x_r` and hence the sliding variable.
//! 3. [`sosm`] implements the adaptive second-order sliding-mode loop
//!    (Levant differentiator, extremum detection, adaptive amplitude).
//! 4. [`harness`] wires the stages together, runs the closed loop and
//!    computes run metrics.
//!
//! The plant model in [`plant`] is only ever used by the simulator and by
//! diagnostic oracles; the designer sees data only.

// `!(x > 0.0)` style guards deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use openblas_src as _;

pub mod data;
pub mod design;
mod error;
pub mod harness;
pub mod linalg;
pub mod plant;
pub mod sosm;

pub use error::{Error, Result};

/// Dense column vector used throughout the crate.
pub type Vector = nalgebra::DVector<f64>;
/// Dense row vector (gains, sliding-variable coefficients).
pub type RowVector = nalgebra::RowDVector<f64>;
/// Dense matrix.
pub type Matrix = nalgebra::DMatrix<f64>;
