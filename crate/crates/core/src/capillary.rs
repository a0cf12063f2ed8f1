//! Pointwise capillary algebra: area elements, the capillary gauge, the
//! graph normal and boundary conormal, the discrete capillary energy and the
//! affine capillary family used as exact solutions.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{HalfSpaceGrid, NodeClass};
use crate::numeric::{dot, norm, pairwise_sum};

/// Default lower bound on `sin(theta)` for admissible contact angles.
pub const DEFAULT_SIN_MIN: f64 = 0.05;

/// Contact angle in `(0, pi)` with cached trigonometric values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CapillaryAngle {
    theta: f64,
    cos_t: f64,
    sin_t: f64,
    cot_t: f64,
}

impl CapillaryAngle {
    pub fn new(theta: f64) -> Result<Self> {
        Self::with_floor(theta, DEFAULT_SIN_MIN)
    }

    pub fn with_floor(theta: f64, sin_min: f64) -> Result<Self> {
        if !theta.is_finite() || theta <= 0.0 || theta >= PI || theta.sin() < sin_min {
            return Err(Error::InvalidAngle { theta, sin_min });
        }
        let (sin_t, mut cos_t) = theta.sin_cos();
        // The float nearest pi/2 has cosine ~6e-17; treat it as the exact right angle.
        if cos_t.abs() < 2.0 * f64::EPSILON {
            cos_t = 0.0;
        }
        Ok(CapillaryAngle { theta, cos_t, sin_t, cot_t: cos_t / sin_t })
    }

    pub fn radians(&self) -> f64 {
        self.theta
    }

    pub fn cos(&self) -> f64 {
        self.cos_t
    }

    pub fn sin(&self) -> f64 {
        self.sin_t
    }

    pub fn cot(&self) -> f64 {
        self.cot_t
    }

    /// The angle `pi - theta`.
    pub fn supplement(&self) -> Self {
        CapillaryAngle { theta: PI - self.theta, cos_t: -self.cos_t, sin_t: self.sin_t, cot_t: -self.cot_t }
    }
}

/// Nodal values of the height function on a lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Arc<HalfSpaceGrid>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Arc<HalfSpaceGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::ShapeMismatch);
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(k));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn from_fn(grid: Arc<HalfSpaceGrid>, mut f: impl FnMut(&[f64]) -> f64) -> Result<Self> {
        let values = (0..grid.node_count()).map(|k| f(&grid.point(k))).collect();
        Self::new(grid, values)
    }

    pub fn zeros(grid: Arc<HalfSpaceGrid>) -> Self {
        let n = grid.node_count();
        ScalarField { grid, values: vec![0.0; n] }
    }

    pub fn grid(&self) -> &HalfSpaceGrid {
        &self.grid
    }

    pub fn grid_arc(&self) -> &Arc<HalfSpaceGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn max_abs_diff(&self, other: &ScalarField) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub(crate) fn same_lattice(&self, grid: &HalfSpaceGrid) -> bool {
        std::ptr::eq(self.grid.as_ref(), grid) || self.grid.as_ref() == grid
    }
}

/// Difference stencil that produced a nodal gradient.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stencil {
    /// Centered differences along every axis.
    Centered,
    /// Centered tangential differences, wall-normal from the closed-form capillary closure.
    GhostClosure,
    /// Second-order one-sided differences along at least one axis.
    OneSided,
}

/// Per-node gradient vectors together with the stencil used at each node.
#[derive(Clone, Debug)]
pub struct GradientField {
    pub(crate) grid: Arc<HalfSpaceGrid>,
    pub(crate) grads: Vec<Vec<f64>>,
    pub(crate) stencils: Vec<Stencil>,
}

impl GradientField {
    pub fn grid(&self) -> &HalfSpaceGrid {
        &self.grid
    }

    pub fn at(&self, k: usize) -> &[f64] {
        &self.grads[k]
    }

    pub fn stencil(&self, k: usize) -> Stencil {
        self.stencils[k]
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }

    /// `max |Du|` over the given nodes.
    pub fn sup_norm_over(&self, nodes: &[usize]) -> f64 {
        nodes.iter().map(|&k| norm(&self.grads[k])).fold(0.0, f64::max)
    }
}

/// `W = sqrt(1 + |g|^2)`.
pub fn area_element_w(g: &[f64]) -> f64 {
    (1.0 + dot(g, g)).sqrt()
}

/// `F(xi) = |xi| - cos(theta) <xi, e1>`.
pub fn capillary_gauge(xi: &[f64], theta: &CapillaryAngle) -> Result<f64> {
    let len = norm(xi);
    if len == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(len - theta.cos() * xi[0])
}

/// `v = sqrt(1 + |g|^2) + cos(theta) g_1`, bounded below by `sin(theta)`.
pub fn capillary_area_element_v(g: &[f64], theta: &CapillaryAngle) -> f64 {
    area_element_w(g) + theta.cos() * g[0]
}

/// Upward unit normal `(-g, 1) / W` of the graph.
pub fn unit_normal(g: &[f64]) -> Vec<f64> {
    let w = area_element_w(g);
    g.iter().map(|gi| -gi / w).chain(std::iter::once(1.0 / w)).collect()
}

/// Outer unit conormal of the boundary of the graph along `x1 = 0`.
///
/// With tangent vectors `tau_i = (e_i, g_i)` the conormal is
/// `-( (1 + |g'|^2) tau_1 - g_1 sum_{i>=2} g_i tau_i ) / (W sqrt(1 + |g'|^2))`,
/// oriented so that `<mu, e1> < 0` (pointing out of the half-space).
pub fn conormal_mu(g: &[f64]) -> Vec<f64> {
    let n = g.len();
    let g1 = g[0];
    let tang_sq: f64 = g[1..].iter().map(|x| x * x).sum();
    let scale = -1.0 / (area_element_w(g) * (1.0 + tang_sq).sqrt());
    let mut mu = vec![0.0; n + 1];
    mu[0] = (1.0 + tang_sq) * scale;
    for i in 1..n {
        mu[i] = -g1 * g[i] * scale;
    }
    // Last component: (1 + |g'|^2) g_1 - g_1 |g'|^2 = g_1.
    mu[n] = g1 * scale;
    mu
}

/// Per-node capillary frame along the wall.
#[derive(Clone, Debug)]
pub struct FrameEntry {
    pub node: usize,
    pub w: f64,
    pub v: f64,
    pub nu: Vec<f64>,
    pub mu: Vec<f64>,
}

/// Area elements, normal and conormal at every capillary node.
#[derive(Clone, Debug)]
pub struct BoundaryFrame {
    pub entries: Vec<FrameEntry>,
}

impl BoundaryFrame {
    pub fn from_gradient(grad: &GradientField, theta: &CapillaryAngle) -> Self {
        let entries = grad
            .grid()
            .nodes_of(NodeClass::CapillaryBoundary)
            .into_iter()
            .map(|k| {
                let g = grad.at(k);
                FrameEntry {
                    node: k,
                    w: area_element_w(g),
                    v: capillary_area_element_v(g, theta),
                    nu: unit_normal(g),
                    mu: conormal_mu(g),
                }
            })
            .collect();
        BoundaryFrame { entries }
    }
}

/// Value of the capillary calibration on the oriented hyperplane with unit
/// normal `plane_normal`: `<nu(g) - cos(theta) e1, plane_normal>`.
pub fn calibration_value(g_sigma: &[f64], plane_normal: &[f64], theta: &CapillaryAngle) -> f64 {
    let mut nu = unit_normal(g_sigma);
    nu[0] -= theta.cos();
    dot(&nu, plane_normal)
}

/// The four corner gradients of a lattice cell (bottom-left, bottom-right,
/// top-left, top-right). Averaging the two diagonal triangulations of the
/// cell gives exactly these four piecewise-constant gradients with weight
/// `h^2 / 4` each.
#[inline]
pub(crate) fn corner_gradients(ua: f64, ub: f64, uc: f64, ud: f64, h: f64) -> [[f64; 2]; 4] {
    let dxb = (ub - ua) / h;
    let dxt = (ud - uc) / h;
    let dyl = (uc - ua) / h;
    let dyr = (ud - ub) / h;
    [[dxb, dyl], [dxb, dyr], [dxt, dyl], [dxt, dyr]]
}

/// Cell-wise discrete capillary energy, in cell order (`i` fastest).
pub fn cell_energies(u: &ScalarField, theta: &CapillaryAngle) -> Vec<f64> {
    let grid = u.grid();
    let h = grid.spacing();
    let (n1, n2) = grid.cells();
    if grid.dim() == 1 {
        return (0..n1)
            .map(|i| {
                let g = (u.at(i + 1, 0) - u.at(i, 0)) / h;
                h * capillary_area_element_v(&[g], theta)
            })
            .collect();
    }
    let mut out = Vec::with_capacity(n1 * n2);
    for j in 0..n2 {
        for i in 0..n1 {
            let corners = corner_gradients(u.at(i, j), u.at(i + 1, j), u.at(i, j + 1), u.at(i + 1, j + 1), h);
            let sum: f64 = corners.iter().map(|g| capillary_area_element_v(g, theta)).sum();
            out.push(0.25 * h * h * sum);
        }
    }
    out
}

/// Discrete `A_theta(u)`: pairwise sum of the cell energies.
pub fn capillary_energy(u: &ScalarField, theta: &CapillaryAngle) -> f64 {
    pairwise_sum(&cell_energies(u, theta))
}

/// `u_1 + cos(theta) W` at every capillary node, with `u_1` from a
/// second-order one-sided difference and tangential derivatives centered.
pub fn capillary_boundary_residual(u: &ScalarField, theta: &CapillaryAngle) -> Vec<(usize, f64)> {
    let grid = u.grid();
    let h = grid.spacing();
    grid.nodes_of(NodeClass::CapillaryBoundary)
        .into_iter()
        .map(|k| {
            let (_, j) = grid.lattice(k);
            let u1 = if grid.nodes_x1() >= 3 {
                (-3.0 * u.at(0, j) + 4.0 * u.at(1, j) - u.at(2, j)) / (2.0 * h)
            } else {
                (u.at(1, j) - u.at(0, j)) / h
            };
            let mut g = vec![u1];
            if grid.dim() == 2 {
                g.push((u.at(0, j + 1) - u.at(0, j - 1)) / (2.0 * h));
            }
            (k, u1 + theta.cos() * area_element_w(&g))
        })
        .collect()
}

/// `u(x) = -cot(theta) sqrt(1 + |b'|^2) x1 + <b', x'> + c`: an affine minimal
/// graph meeting `x1 = 0` at the contact angle.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineCapillary {
    pub theta: CapillaryAngle,
    pub tangential_slope: Vec<f64>,
    pub offset: f64,
}

/// Generator of the affine capillary solution with tangential slope `bprime`.
pub fn affine_capillary_solution(theta: CapillaryAngle, bprime: &[f64], c: f64) -> AffineCapillary {
    AffineCapillary { theta, tangential_slope: bprime.to_vec(), offset: c }
}

impl AffineCapillary {
    pub fn normal_slope(&self) -> f64 {
        -self.theta.cot() * (1.0 + dot(&self.tangential_slope, &self.tangential_slope)).sqrt()
    }

    pub fn gradient(&self) -> Vec<f64> {
        std::iter::once(self.normal_slope()).chain(self.tangential_slope.iter().copied()).collect()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let tang: f64 = x.iter().skip(1).zip(&self.tangential_slope).map(|(a, b)| a * b).sum();
        self.normal_slope() * x[0] + tang + self.offset
    }

    /// Samples the affine function on a lattice; extra tangential slopes are ignored in 1D.
    pub fn on_grid(&self, grid: Arc<HalfSpaceGrid>) -> ScalarField {
        let values = (0..grid.node_count()).map(|k| self.eval(&grid.point(k))).collect();
        ScalarField { grid, values }
    }
}
