//! Finite-volume discretization of `div(Du / W) = H` on a truncated
//! half-space, with the capillary condition on `x1 = 0` and Dirichlet data
//! on the remaining faces, solved by damped Newton iteration.
//!
//! The discrete operator is the exact gradient of the lattice energy
//! `sum_cells A_cell(u) + sum_k m_k H_k u_k`, so a converged solution is a
//! stationary point of the discrete capillary energy.

mod assemble;
mod linear;
mod newton;
mod sparse;

use std::fmt;
use std::sync::Arc;

pub use assemble::{assemble_jacobian, assemble_residual, discrete_gradient, energy_system, ghost_closure};
pub use linear::linear_solve;
pub use newton::{default_initial_guess, newton_solve};
pub use sparse::{CsrMatrix, SparseSystem};

use crate::capillary::{CapillaryAngle, ScalarField};
use crate::error::{Error, Result};
use crate::geometry::{EllipsoidRegion, HalfSpaceGrid, NodeClass};

pub type CurvatureFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Prescribed mean curvature.
#[derive(Clone)]
pub enum MeanCurvature {
    Constant(f64),
    /// A coordinate function with a user-declared bound on `|H| + |DH|`.
    Field { f: CurvatureFn, bound: f64 },
}

impl fmt::Debug for MeanCurvature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeanCurvature::Constant(h) => write!(f, "Constant({h})"),
            MeanCurvature::Field { bound, .. } => write!(f, "Field {{ bound: {bound} }}"),
        }
    }
}

impl MeanCurvature {
    pub fn zero() -> Self {
        MeanCurvature::Constant(0.0)
    }

    pub fn at(&self, x: &[f64]) -> f64 {
        match self {
            MeanCurvature::Constant(h) => *h,
            MeanCurvature::Field { f, .. } => f(x),
        }
    }

    /// The recorded `C_H`; for a constant this is `|H|`.
    pub fn bound(&self) -> f64 {
        match self {
            MeanCurvature::Constant(h) => h.abs(),
            MeanCurvature::Field { bound, .. } => *bound,
        }
    }
}

/// A boundary-value problem on a lattice.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub grid: Arc<HalfSpaceGrid>,
    pub theta: CapillaryAngle,
    pub mean_curvature: MeanCurvature,
    dirichlet: Vec<(usize, f64)>,
    pub initial: Option<ScalarField>,
    /// Regions whose `sup |Du|` is reported after a solve.
    pub report_regions: Vec<EllipsoidRegion>,
}

impl ProblemSpec {
    pub fn new(
        grid: Arc<HalfSpaceGrid>,
        theta: CapillaryAngle,
        mean_curvature: MeanCurvature,
        mut dirichlet: Vec<(usize, f64)>,
    ) -> Result<Self> {
        dirichlet.sort_by_key(|&(k, _)| k);
        let expected = grid.nodes_of(NodeClass::DirichletBoundary);
        let given: Vec<usize> = dirichlet.iter().map(|&(k, _)| k).collect();
        if given != expected {
            return Err(Error::DirichletCoverage(format!(
                "{} values given for {} dirichlet nodes",
                given.len(),
                expected.len()
            )));
        }
        if let Some(&(k, _)) = dirichlet.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite(k));
        }
        if let Some(k) = (0..grid.node_count()).find(|&k| !mean_curvature.at(&grid.point(k)).is_finite()) {
            return Err(Error::NonFinite(k));
        }
        Ok(ProblemSpec { grid, theta, mean_curvature, dirichlet, initial: None, report_regions: Vec::new() })
    }

    /// Dirichlet values sampled from `f` at the Dirichlet nodes.
    pub fn with_boundary_fn(
        grid: Arc<HalfSpaceGrid>,
        theta: CapillaryAngle,
        mean_curvature: MeanCurvature,
        f: impl Fn(&[f64]) -> f64,
    ) -> Result<Self> {
        let data = grid
            .nodes_of(NodeClass::DirichletBoundary)
            .into_iter()
            .map(|k| (k, f(&grid.point(k))))
            .collect();
        Self::new(grid, theta, mean_curvature, data)
    }

    pub fn with_initial(mut self, initial: ScalarField) -> Self {
        self.initial = Some(initial);
        self
    }

    pub fn with_report_regions(mut self, regions: Vec<EllipsoidRegion>) -> Self {
        self.report_regions = regions;
        self
    }

    pub fn dirichlet(&self) -> &[(usize, f64)] {
        &self.dirichlet
    }

    pub fn impose_dirichlet(&self, u: &mut ScalarField) {
        let values = u.values_mut();
        for &(k, v) in &self.dirichlet {
            values[k] = v;
        }
    }

    pub fn curvature_bound(&self) -> f64 {
        self.mean_curvature.bound()
    }
}

/// Newton and inner-solver settings.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Relative infinity-norm residual tolerance.
    pub tol_residual: f64,
    pub max_newton: usize,
    /// Backtracking factor in `(0, 1)`.
    pub damping: f64,
    pub min_step: f64,
    pub linear_tol: f64,
    pub linear_max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol_residual: 1e-10,
            max_newton: 50,
            damping: 0.5,
            min_step: 1e-6,
            linear_tol: 1e-12,
            linear_max_iter: 20_000,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = self.tol_residual > 0.0
            && self.max_newton > 0
            && self.min_step > 0.0
            && self.linear_tol > 0.0
            && self.linear_max_iter > 0;
        if !positive || !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(Error::InvalidParameter(format!("bad solver config {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIter,
    Diverged,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIter => "max_iter",
            SolveStatus::Diverged => "diverged",
        };
        f.write_str(s)
    }
}

/// Outcome of a Newton solve.
#[derive(Clone, Debug)]
pub struct SolveReport {
    pub iterations: usize,
    /// Infinity norm of the residual at every accepted iterate, starting with the initial guess.
    pub residual_history: Vec<f64>,
    /// Final residual relative to `max(1, |R(u0)|_inf)`.
    pub relative_residual: f64,
    pub sup_grad_inner: Vec<f64>,
    pub v_min: f64,
    pub energy: f64,
    pub status: SolveStatus,
    pub curvature_bound: f64,
}

impl SolveReport {
    pub fn final_residual(&self) -> f64 {
        *self.residual_history.last().unwrap_or(&f64::NAN)
    }
}
