//! Generalized Heisenberg algebras for two exactly solvable 1D systems, the
//! infinite square well and the Morse oscillator, and their isotropic 2D
//! products.
//!
//! - [`model`]: parameters, spectra, closed orbits and 2D degeneracy classes.
//! - [`classical`]: trajectories, ladder functions and Poisson-bracket checks.
//! - [`quantum`]: truncated ladder operators, su(1,1) closure, the
//!   2D `I` operators and their commutators.
//! - [`susy`]: grid supercharges for the 2D Morse system and the operator `R`
//!   whose eigenvalue separates arithmetical degeneracies.
//!
//! The `parallel` feature (on by default) runs sample sweeps and grid
//! stencils on rayon; without it the same kernels run sequentially.

// NaN must fail range checks, so they are written as `!(a < b)`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classical;
pub mod error;
pub mod fd;
pub mod model;
pub mod par;
pub mod quantum;
pub mod report;
pub mod susy;

pub use error::{GhaError, Result};
