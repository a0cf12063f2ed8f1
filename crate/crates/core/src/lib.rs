//! Prescribed-mean-curvature graphs over a half-space with a capillary
//! contact-angle condition: lattice geometry, the capillary energy, a
//! Newton solver, the closed-form gradient-estimate constants, and an
//! experiment harness.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capillary;
pub mod error;
pub mod estimates;
pub mod geometry;
pub mod harness;
pub mod numeric;
pub mod solver;

pub use capillary::{CapillaryAngle, GradientField, ScalarField};
pub use error::{Error, Result};
pub use geometry::{build_grid, EllipsoidRegion, HalfSpaceGrid, NodeClass};
pub use solver::{newton_solve, ProblemSpec, SolveReport, SolveStatus, SolverConfig};
