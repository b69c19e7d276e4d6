//! Numerical toolkit for optimal boundary control of elliptic problems on a
//! box whose interior carries a thin layer of small Robin particles at
//! critical scaling, together with the effective (homogenized) limit problem
//! in which the layer collapses onto the controlled face as extra boundary
//! coefficients.
//!
//! The crate is organized along the pipeline:
//!
//! * [`model`] — problem configuration, effective-coefficient formulas,
//!   particle lattice and the closed-form cell function;
//! * [`grid`] — structured-grid finite differences: assembly, a
//!   preconditioned CG solver, quadrature and weighted stiffness forms;
//! * [`limit`] — the homogenized state/adjoint/optimality solves and the
//!   uncontrolled energy problem;
//! * [`perforated`] — the fine-scale solver with a point-particle closure of
//!   the Robin spheres, its exact discrete adjoint and cost evaluation;
//! * [`verify`] — independent oracles (radial cell solve, shell-sum trace
//!   identity, finite-difference gradients) and the epsilon-sweep studies.

pub mod error;
pub mod grid;
pub mod limit;
pub mod model;
pub mod perforated;
pub mod verify;

pub use error::{Error, Result};
