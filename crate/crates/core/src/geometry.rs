//! Truncated half-space lattices and the angle-adapted ellipsoid regions.
//!
//! The computational domain is the box `[0, L1] x [-L', L']^(n-1)` with
//! `n` in `{1, 2}`. The face `x1 = 0` carries the capillary condition, every
//! other face is Dirichlet. Where the capillary face meets another face the
//! node is Dirichlet.

use crate::capillary::CapillaryAngle;
use crate::error::{Error, Result};

/// Role of a lattice node for boundary-condition dispatch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeClass {
    Interior,
    CapillaryBoundary,
    DirichletBoundary,
}

/// Uniform lattice on a truncated half-space.
///
/// Nodes are numbered `k = i + (n1 + 1) * j` where `i` counts along `x1`
/// and `j` along `x2` (always `0` in one dimension).
#[derive(Clone, Debug, PartialEq)]
pub struct HalfSpaceGrid {
    dim: usize,
    h: f64,
    n1: usize,
    n2: usize,
    half_width: f64,
    classes: Vec<NodeClass>,
}

fn cells_along(len: f64, h: f64) -> Option<usize> {
    let ratio = len / h;
    let rounded = ratio.round();
    if rounded < 1.0 || (ratio - rounded).abs() > 1e-9 * rounded.max(1.0) {
        None
    } else {
        Some(rounded as usize)
    }
}

/// Builds a lattice; `lp` is ignored when `dim == 1`.
pub fn build_grid(dim: usize, h: f64, l1: f64, lp: f64) -> Result<HalfSpaceGrid> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidParameter(format!("mesh width must be positive, got {h}")));
    }
    let n1 = cells_along(l1, h).ok_or(Error::NonconformingExtent { length: l1, h })?;
    match dim {
        1 => Ok(HalfSpaceGrid::from_counts(1, h, n1, 0)),
        2 => {
            let half = cells_along(lp, h).ok_or(Error::NonconformingExtent { length: lp, h })?;
            Ok(HalfSpaceGrid::from_counts(2, h, n1, 2 * half))
        }
        _ => Err(Error::BadDimension(dim)),
    }
}

impl HalfSpaceGrid {
    pub fn line(h: f64, l1: f64) -> Result<Self> {
        build_grid(1, h, l1, 0.0)
    }

    pub fn plane(h: f64, l1: f64, lp: f64) -> Result<Self> {
        build_grid(2, h, l1, lp)
    }

    /// Lattice with `n1` cells along `x1` and `n2` (even) cells along `x2`.
    pub(crate) fn from_counts(dim: usize, h: f64, n1: usize, n2: usize) -> Self {
        let half_width = if dim == 2 { (n2 / 2) as f64 * h } else { 0.0 };
        let mut grid = HalfSpaceGrid { dim, h, n1, n2, half_width, classes: Vec::new() };
        let count = grid.node_count();
        grid.classes = (0..count)
            .map(|k| {
                let (i, j) = grid.lattice(k);
                let on_side = dim == 2 && (j == 0 || j == n2);
                if i == n1 || on_side {
                    NodeClass::DirichletBoundary
                } else if i == 0 {
                    NodeClass::CapillaryBoundary
                } else {
                    NodeClass::Interior
                }
            })
            .collect();
        grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Cell counts along `x1` and `x2`.
    pub fn cells(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    pub fn length_x1(&self) -> f64 {
        self.n1 as f64 * self.h
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn nodes_x1(&self) -> usize {
        self.n1 + 1
    }

    pub fn nodes_x2(&self) -> usize {
        if self.dim == 2 {
            self.n2 + 1
        } else {
            1
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes_x1() * self.nodes_x2()
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.nodes_x1() * j
    }

    pub fn lattice(&self, k: usize) -> (usize, usize) {
        (k % self.nodes_x1(), k / self.nodes_x1())
    }

    /// Coordinates of node `k`; the slice has `dim` entries.
    pub fn point(&self, k: usize) -> Vec<f64> {
        let (i, j) = self.lattice(k);
        let x1 = i as f64 * self.h;
        if self.dim == 2 {
            vec![x1, -self.half_width + j as f64 * self.h]
        } else {
            vec![x1]
        }
    }

    pub fn class(&self, k: usize) -> NodeClass {
        self.classes[k]
    }

    pub fn classes(&self) -> &[NodeClass] {
        &self.classes
    }

    pub fn nodes_of(&self, class: NodeClass) -> Vec<usize> {
        (0..self.node_count()).filter(|&k| self.classes[k] == class).collect()
    }

    /// Nodes carrying an unknown (everything but Dirichlet), in index order.
    pub fn unknown_nodes(&self) -> Vec<usize> {
        (0..self.node_count())
            .filter(|&k| self.classes[k] != NodeClass::DirichletBoundary)
            .collect()
    }

    /// Lumped nodal volume: `h^n` halved once per boundary face the node sits on.
    pub fn nodal_volume(&self, k: usize) -> f64 {
        let (i, j) = self.lattice(k);
        let mut m = self.h.powi(self.dim as i32);
        if i == 0 || i == self.n1 {
            m *= 0.5;
        }
        if self.dim == 2 && (j == 0 || j == self.n2) {
            m *= 0.5;
        }
        m
    }

    /// Volume of the whole box.
    pub fn measure(&self) -> f64 {
        let mut vol = self.length_x1();
        if self.dim == 2 {
            vol *= 2.0 * self.half_width;
        }
        vol
    }

    /// Whether a point lies in the closed box.
    pub fn contains(&self, p: &[f64]) -> bool {
        let tol = 1e-12 * self.h;
        if p.is_empty() || p[0] < -tol || p[0] > self.length_x1() + tol {
            return false;
        }
        p.iter().skip(1).all(|x| x.abs() <= self.half_width + tol)
    }
}

/// Which of the two nested ellipsoids.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegionKind {
    /// `E_r`
    Outer,
    /// `E_{theta,r}`
    Inner,
}

/// `{x1 > 0, (x1 - |cos t| r)^2 + sin^2 t |x' - p'|^2 < rho^2}` with `rho = r`
/// (outer) or `rho = (1 + |cos t|) r / 2` (inner). The tangential center `p'`
/// defaults to the origin.
#[derive(Clone, Debug, PartialEq)]
pub struct EllipsoidRegion {
    pub r: f64,
    pub theta: CapillaryAngle,
    pub kind: RegionKind,
    pub center: Vec<f64>,
}

impl EllipsoidRegion {
    pub fn new(r: f64, theta: CapillaryAngle, kind: RegionKind) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidParameter(format!("region radius must be positive, got {r}")));
        }
        Ok(EllipsoidRegion { r, theta, kind, center: Vec::new() })
    }

    pub fn centered_at(mut self, center: Vec<f64>) -> Self {
        self.center = center;
        self
    }

    fn tangential_offset_sq(&self, p: &[f64]) -> f64 {
        p.iter()
            .skip(1)
            .enumerate()
            .map(|(i, x)| {
                let d = x - self.center.get(i).copied().unwrap_or(0.0);
                d * d
            })
            .sum()
    }

    pub fn outer(r: f64, theta: CapillaryAngle) -> Result<Self> {
        Self::new(r, theta, RegionKind::Outer)
    }

    pub fn inner(r: f64, theta: CapillaryAngle) -> Result<Self> {
        Self::new(r, theta, RegionKind::Inner)
    }

    pub fn center_x1(&self) -> f64 {
        self.theta.cos().abs() * self.r
    }

    pub fn level_radius(&self) -> f64 {
        match self.kind {
            RegionKind::Outer => self.r,
            RegionKind::Inner => 0.5 * (1.0 + self.theta.cos().abs()) * self.r,
        }
    }

    /// Left-hand side of the defining inequality.
    pub fn quadratic_form(&self, p: &[f64]) -> f64 {
        let d1 = p[0] - self.center_x1();
        d1 * d1 + self.theta.sin().powi(2) * self.tangential_offset_sq(p)
    }

    /// Largest `x1` and `|x' - p'|` reached by the region.
    pub fn extent(&self) -> (f64, f64) {
        let rho = self.level_radius();
        (self.center_x1() + rho, rho / self.theta.sin())
    }

    /// Euclidean distance from `p` (with `x1 >= 0`) to the closed region.
    pub fn distance_to_closure(&self, p: &[f64]) -> f64 {
        let rho = self.level_radius();
        if self.quadratic_form(p) <= rho * rho {
            return 0.0;
        }
        let s = self.theta.sin();
        let c1 = self.center_x1();
        let a1 = rho;
        let a2 = rho / s;
        let d1 = p[0] - c1;
        let tang = self.tangential_offset_sq(p).sqrt();
        // Closest point on the full ellipsoid, via bisection on the multiplier.
        let project = |t: f64| (d1 * a1 * a1 / (a1 * a1 + t), tang * a2 * a2 / (a2 * a2 + t));
        let constraint = |t: f64| {
            let (y1, y2) = project(t);
            (y1 / a1).powi(2) + (y2 / a2).powi(2) - 1.0
        };
        let mut lo = 0.0;
        let mut hi = 1.0_f64.max(a1 * a1).max(a2 * a2);
        while constraint(hi) > 0.0 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if constraint(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (y1, y2) = project(hi);
        if y1 + c1 >= 0.0 {
            ((d1 - y1).powi(2) + (tang - y2).powi(2)).sqrt()
        } else {
            // Closest point lies on the flat face x1 = 0 of the truncated set.
            let face_radius = (rho * rho - c1 * c1).max(0.0).sqrt() / s;
            (p[0].powi(2) + (tang - face_radius).max(0.0).powi(2)).sqrt()
        }
    }
}

/// Strict membership: `x1 > 0` and the region's inequality.
pub fn in_region(p: &[f64], region: &EllipsoidRegion) -> bool {
    let rho = region.level_radius();
    p[0] > 0.0 && region.quadratic_form(p) < rho * rho
}

/// Sorted nodes inside the region or within `h/2` of its closure.
pub fn inner_node_set(grid: &HalfSpaceGrid, region: &EllipsoidRegion) -> Result<Vec<usize>> {
    let tol = 0.5 * grid.spacing() * (1.0 + 1e-9);
    let nodes: Vec<usize> = (0..grid.node_count())
        .filter(|&k| {
            let p = grid.point(k);
            in_region(&p, region) || region.distance_to_closure(&p) <= tol
        })
        .collect();
    if nodes.is_empty() {
        Err(Error::EmptyRegion)
    } else {
        Ok(nodes)
    }
}
