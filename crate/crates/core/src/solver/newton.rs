use super::assemble::{assemble_residual, discrete_gradient, energy_system};
use super::linear::linear_solve;
use super::{ProblemSpec, SolveReport, SolveStatus, SolverConfig};
use crate::capillary::{affine_capillary_solution, capillary_area_element_v, capillary_energy, corner_gradients, ScalarField};
use crate::error::{Error, Result};
use crate::geometry::inner_node_set;
use crate::numeric::{norm_inf, solve3};

/// Affine capillary solution whose tangential slope and offset best match
/// the Dirichlet data in the least-squares sense. Falls back to zero when
/// the fit is degenerate.
pub fn default_initial_guess(spec: &ProblemSpec) -> ScalarField {
    let grid = spec.grid.clone();
    let data = spec.dirichlet();
    let pts: Vec<Vec<f64>> = data.iter().map(|&(k, _)| grid.point(k)).collect();
    let beta = if grid.dim() == 2 { fit_tangential_slope(&pts, data) } else { Some(0.0) };
    let Some(beta) = beta.filter(|b| b.is_finite()) else {
        return ScalarField::zeros(grid);
    };
    let bprime: Vec<f64> = if grid.dim() == 2 { vec![beta] } else { Vec::new() };
    let shape = affine_capillary_solution(spec.theta, &bprime, 0.0);
    if data.is_empty() {
        return ScalarField::zeros(grid);
    }
    let c = data.iter().zip(&pts).map(|(&(_, d), p)| d - shape.eval(p)).sum::<f64>() / data.len() as f64;
    affine_capillary_solution(spec.theta, &bprime, c).on_grid(grid)
}

/// `beta` from the least-squares plane `alpha x1 + beta x2 + c` through the data.
fn fit_tangential_slope(pts: &[Vec<f64>], data: &[(usize, f64)]) -> Option<f64> {
    let mut ata = [[0.0; 3]; 3];
    let mut atb = [0.0; 3];
    for (p, &(_, d)) in pts.iter().zip(data) {
        let row = [p[0], p[1], 1.0];
        for a in 0..3 {
            for b in 0..3 {
                ata[a][b] += row[a] * row[b];
            }
            atb[a] += row[a] * d;
        }
    }
    solve3(ata, atb).map(|x| x[1])
}

/// Smallest capillary area element over all quadrature gradients.
fn min_area_element(u: &ScalarField, spec: &ProblemSpec) -> f64 {
    let grid = u.grid();
    let h = grid.spacing();
    let (n1, n2) = grid.cells();
    let mut vmin = f64::INFINITY;
    if grid.dim() == 1 {
        for i in 0..n1 {
            let g = (u.at(i + 1, 0) - u.at(i, 0)) / h;
            vmin = vmin.min(capillary_area_element_v(&[g], &spec.theta));
        }
        return vmin;
    }
    for j in 0..n2 {
        for i in 0..n1 {
            for g in corner_gradients(u.at(i, j), u.at(i + 1, j), u.at(i, j + 1), u.at(i + 1, j + 1), h) {
                vmin = vmin.min(capillary_area_element_v(&g, &spec.theta));
            }
        }
    }
    vmin
}

fn checked_v_min(u: &ScalarField, spec: &ProblemSpec) -> Result<f64> {
    let vmin = min_area_element(u, spec);
    if !(vmin >= spec.theta.sin() - 1e-12) {
        return Err(Error::InvariantViolation(format!(
            "area element {vmin} below sin(theta) = {}",
            spec.theta.sin()
        )));
    }
    Ok(vmin)
}

/// Damped Newton iteration on the discrete residual.
///
/// Each step solves the symmetric energy-Hessian form of the Newton system
/// and backtracks until the residual's infinity norm decreases. If no step
/// length down to `cfg.min_step` decreases it, the current iterate is
/// returned with status `MaxIter`.
pub fn newton_solve(spec: &ProblemSpec, cfg: &SolverConfig) -> Result<(ScalarField, SolveReport)> {
    cfg.validate()?;
    let mut u = match &spec.initial {
        Some(init) if init.same_lattice(&spec.grid) => init.clone(),
        Some(_) => return Err(Error::ShapeMismatch),
        None => default_initial_guess(spec),
    };
    spec.impose_dirichlet(&mut u);
    let unknowns = spec.grid.unknown_nodes();

    checked_v_min(&u, spec)?;
    let mut residual = assemble_residual(&u, spec)?;
    let mut rnorm = norm_inf(&residual);
    let r0 = rnorm;
    let scale = r0.max(1.0);
    let mut history = vec![rnorm];
    let mut iterations = 0;
    let mut status = SolveStatus::MaxIter;

    loop {
        if !rnorm.is_finite() || rnorm > 1e6 * r0.max(f64::MIN_POSITIVE) {
            status = SolveStatus::Diverged;
            break;
        }
        if rnorm / scale <= cfg.tol_residual {
            status = SolveStatus::Converged;
            break;
        }
        if iterations >= cfg.max_newton {
            break;
        }
        let (system, _) = energy_system(&u, spec)?;
        let delta = linear_solve(&system, cfg)?;

        let mut step = 1.0;
        let mut accepted = None;
        while step >= cfg.min_step {
            let mut trial = u.clone();
            {
                let vals = trial.values_mut();
                for (&k, d) in unknowns.iter().zip(&delta) {
                    vals[k] += step * d;
                }
            }
            let r_trial = assemble_residual(&trial, spec)?;
            let n_trial = norm_inf(&r_trial);
            if n_trial < rnorm {
                accepted = Some((trial, r_trial, n_trial));
                break;
            }
            step *= cfg.damping;
        }
        let Some((next, r_next, n_next)) = accepted else {
            break;
        };
        checked_v_min(&next, spec)?;
        u = next;
        residual = r_next;
        rnorm = n_next;
        history.push(rnorm);
        iterations += 1;
    }
    debug_assert_eq!(residual.len(), unknowns.len());

    let grad = discrete_gradient(&u, &spec.theta);
    let sup_grad_inner = spec
        .report_regions
        .iter()
        .map(|region| inner_node_set(&spec.grid, region).map(|nodes| grad.sup_norm_over(&nodes)))
        .collect::<Result<Vec<_>>>()?;
    let report = SolveReport {
        iterations,
        relative_residual: rnorm / scale,
        residual_history: history,
        sup_grad_inner,
        v_min: checked_v_min(&u, spec)?,
        energy: capillary_energy(&u, &spec.theta),
        status,
        curvature_bound: spec.curvature_bound(),
    };
    Ok((u, report))
}
