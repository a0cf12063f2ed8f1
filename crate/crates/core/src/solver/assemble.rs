//! Residual, Jacobian and nodal gradients for the lattice capillary energy.
//!
//! Every cell contributes `w * v(G u)` where `G` maps the cell's nodal values
//! to a piecewise-constant gradient (one interval in 1D, four corner
//! triangles in 2D). The nodal residual is `R_k = -(1/m_k) dJ/du_k` with
//! `J = sum_cells w v + sum_k m_k H_k u_k`, i.e. a flux balance of
//! `Du/W + cos(theta) e1` minus `H`. The `cos(theta) e1` part cancels in the
//! interior and leaves the wall flux `-cos(theta)` on `x1 = 0`.

use super::sparse::{CsrMatrix, SparseSystem};
use super::ProblemSpec;
use crate::capillary::{area_element_w, CapillaryAngle, GradientField, ScalarField, Stencil};
use crate::error::{Error, Result};
use crate::geometry::{HalfSpaceGrid, NodeClass};

/// Wall-normal derivative `u1 = -cot(theta) sqrt(1 + |s|^2)` solving the
/// capillary condition for a given tangential gradient `s`.
pub fn ghost_closure(tangential_grad: &[f64], theta: &CapillaryAngle) -> f64 {
    let s2: f64 = tangential_grad.iter().map(|s| s * s).sum();
    -theta.cot() * (1.0 + s2).sqrt()
}

/// Gradient rows of one cell: `(weight, nodes, rows)` where `rows[q][d][a]`
/// is the derivative of component `d` of quadrature gradient `q` with respect
/// to the value at `nodes[a]`.
struct CellStencil {
    weight: f64,
    nodes: Vec<usize>,
    rows: Vec<Vec<Vec<f64>>>,
}

fn cell_stencils(grid: &HalfSpaceGrid) -> Vec<CellStencil> {
    let h = grid.spacing();
    let (n1, n2) = grid.cells();
    let s = 1.0 / h;
    if grid.dim() == 1 {
        return (0..n1)
            .map(|i| CellStencil { weight: h, nodes: vec![i, i + 1], rows: vec![vec![vec![-s, s]]] })
            .collect();
    }
    let bottom = vec![-s, s, 0.0, 0.0];
    let top = vec![0.0, 0.0, -s, s];
    let left = vec![-s, 0.0, s, 0.0];
    let right = vec![0.0, -s, 0.0, s];
    let rows = vec![
        vec![bottom.clone(), left.clone()],
        vec![bottom, right.clone()],
        vec![top.clone(), left],
        vec![top, right],
    ];
    let mut out = Vec::with_capacity(n1 * n2);
    for j in 0..n2 {
        for i in 0..n1 {
            let nodes = vec![grid.index(i, j), grid.index(i + 1, j), grid.index(i, j + 1), grid.index(i + 1, j + 1)];
            out.push(CellStencil { weight: 0.25 * h * h, nodes, rows: rows.clone() });
        }
    }
    out
}

fn quadrature_gradient(rows: &[Vec<f64>], vals: &[f64]) -> Vec<f64> {
    rows.iter().map(|r| r.iter().zip(vals).map(|(a, b)| a * b).sum()).collect()
}

/// Position of every node among the unknowns, `None` on Dirichlet nodes.
fn unknown_positions(grid: &HalfSpaceGrid) -> Vec<Option<usize>> {
    let mut pos = vec![None; grid.node_count()];
    for (p, k) in grid.unknown_nodes().into_iter().enumerate() {
        pos[k] = Some(p);
    }
    pos
}

fn check_shape(u: &ScalarField, spec: &ProblemSpec) -> Result<()> {
    if !u.same_lattice(&spec.grid) {
        return Err(Error::ShapeMismatch);
    }
    Ok(())
}

/// Nodal energy gradient `dJ/du` and, optionally, the Hessian over unknowns.
fn energy_derivatives(u: &ScalarField, spec: &ProblemSpec, with_hessian: bool) -> (Vec<f64>, Vec<(usize, usize, f64)>) {
    let grid = spec.grid.as_ref();
    let cos = spec.theta.cos();
    let vals = u.values();
    let pos = unknown_positions(grid);
    let mut grad: Vec<f64> = (0..grid.node_count())
        .map(|k| grid.nodal_volume(k) * spec.mean_curvature.at(&grid.point(k)))
        .collect();
    let mut triplets = Vec::new();
    for cell in cell_stencils(grid) {
        let local: Vec<f64> = cell.nodes.iter().map(|&k| vals[k]).collect();
        let na = cell.nodes.len();
        for rows in &cell.rows {
            let g = quadrature_gradient(rows, &local);
            let w = area_element_w(&g);
            // dv/dg = g / W + cos e1
            let mut flux: Vec<f64> = g.iter().map(|gi| gi / w).collect();
            flux[0] += cos;
            for a in 0..na {
                let d: f64 = rows.iter().zip(&flux).map(|(r, f)| r[a] * f).sum();
                grad[cell.nodes[a]] += cell.weight * d;
            }
            if !with_hessian {
                continue;
            }
            // d2v/dg2 = (I - g g^T / W^2) / W
            let dim = g.len();
            let w2 = w * w;
            let kmat: Vec<Vec<f64>> = (0..dim)
                .map(|p| (0..dim).map(|q| (if p == q { 1.0 } else { 0.0 } - g[p] * g[q] / w2) / w).collect())
                .collect();
            // Columns of K G.
            let kg: Vec<Vec<f64>> = (0..dim)
                .map(|p| (0..na).map(|b| (0..dim).map(|q| kmat[p][q] * rows[q][b]).sum()).collect())
                .collect();
            for a in 0..na {
                let Some(pa) = pos[cell.nodes[a]] else { continue };
                for b in 0..na {
                    let Some(pb) = pos[cell.nodes[b]] else { continue };
                    let entry: f64 = (0..dim).map(|p| rows[p][a] * kg[p][b]).sum();
                    triplets.push((pa, pb, cell.weight * entry));
                }
            }
        }
    }
    (grad, triplets)
}

fn residual_from_gradient(grid: &HalfSpaceGrid, grad: &[f64]) -> Vec<f64> {
    grid.unknown_nodes().into_iter().map(|k| -grad[k] / grid.nodal_volume(k)).collect()
}

/// Discrete residual `div_h(Du/W) - H` at the unknown nodes, in
/// `grid.unknown_nodes()` order.
pub fn assemble_residual(u: &ScalarField, spec: &ProblemSpec) -> Result<Vec<f64>> {
    check_shape(u, spec)?;
    let (grad, _) = energy_derivatives(u, spec, false);
    Ok(residual_from_gradient(&spec.grid, &grad))
}

/// Exact Jacobian of [`assemble_residual`] with right-hand side `-R(u)`, so
/// that solving the system gives the Newton correction.
pub fn assemble_jacobian(u: &ScalarField, spec: &ProblemSpec) -> Result<SparseSystem> {
    check_shape(u, spec)?;
    let grid = spec.grid.as_ref();
    let (grad, triplets) = energy_derivatives(u, spec, true);
    let n = grid.unknown_nodes().len();
    let mut matrix = CsrMatrix::from_triplets(n, n, triplets);
    let scale: Vec<f64> = grid.unknown_nodes().into_iter().map(|k| -1.0 / grid.nodal_volume(k)).collect();
    matrix.scale_rows(&scale);
    let rhs = residual_from_gradient(grid, &grad).into_iter().map(|r| -r).collect();
    Ok(SparseSystem::new(matrix, rhs))
}

/// The same Newton step in symmetric positive definite form: the energy
/// Hessian over the unknowns with right-hand side `m * R(u)`.
pub fn energy_system(u: &ScalarField, spec: &ProblemSpec) -> Result<(SparseSystem, Vec<f64>)> {
    check_shape(u, spec)?;
    let grid = spec.grid.as_ref();
    let (grad, triplets) = energy_derivatives(u, spec, true);
    let n = grid.unknown_nodes().len();
    let matrix = CsrMatrix::from_triplets(n, n, triplets);
    let residual = residual_from_gradient(grid, &grad);
    let rhs = grid
        .unknown_nodes()
        .into_iter()
        .zip(&residual)
        .map(|(k, r)| grid.nodal_volume(k) * r)
        .collect();
    Ok((SparseSystem { matrix, rhs, symmetric: true }, residual))
}

/// Derivative along one axis at lattice position `i` of `count` nodes, from
/// the values `at(i)`. Returns the stencil kind used.
fn axis_derivative(i: usize, count: usize, h: f64, at: impl Fn(usize) -> f64) -> (f64, bool) {
    if count < 2 {
        return (0.0, false);
    }
    if i > 0 && i + 1 < count {
        return ((at(i + 1) - at(i - 1)) / (2.0 * h), false);
    }
    if count < 3 {
        let d = (at(1) - at(0)) / h;
        return (d, true);
    }
    if i == 0 {
        ((-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h), true)
    } else {
        ((3.0 * at(i) - 4.0 * at(i - 1) + at(i - 2)) / (2.0 * h), true)
    }
}

/// Nodal gradients: centered in the interior, ghost closure for the
/// wall-normal component on the capillary face, second-order one-sided
/// differences on Dirichlet faces.
pub fn discrete_gradient(u: &ScalarField, theta: &CapillaryAngle) -> GradientField {
    let grid = u.grid_arc().clone();
    let h = grid.spacing();
    let (nx, ny) = (grid.nodes_x1(), grid.nodes_x2());
    let mut grads = Vec::with_capacity(grid.node_count());
    let mut stencils = Vec::with_capacity(grid.node_count());
    for k in 0..grid.node_count() {
        let (i, j) = grid.lattice(k);
        let mut one_sided = false;
        let tangential = if grid.dim() == 2 {
            let (d, os) = axis_derivative(j, ny, h, |jj| u.at(i, jj));
            one_sided |= os;
            vec![d]
        } else {
            Vec::new()
        };
        let (normal, stencil) = if grid.class(k) == NodeClass::CapillaryBoundary {
            (ghost_closure(&tangential, theta), Stencil::GhostClosure)
        } else {
            let (d, os) = axis_derivative(i, nx, h, |ii| u.at(ii, j));
            one_sided |= os;
            (d, if one_sided { Stencil::OneSided } else { Stencil::Centered })
        };
        grads.push(std::iter::once(normal).chain(tangential).collect());
        stencils.push(stencil);
    }
    GradientField { grid, grads, stencils }
}
