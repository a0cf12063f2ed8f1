//! Jacobi-preconditioned Krylov solvers: conjugate gradients for symmetric
//! systems, BiCGSTAB otherwise.

use super::sparse::{CsrMatrix, SparseSystem};
use super::SolverConfig;
use crate::error::{Error, Result};
use crate::numeric::{dot, norm};

fn inverse_diagonal(a: &CsrMatrix) -> Vec<f64> {
    a.diagonal().into_iter().map(|d| if d != 0.0 { 1.0 / d } else { 1.0 }).collect()
}

fn true_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.matvec(x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    norm(&r)
}

/// Solves `sys.matrix * x = sys.rhs` to relative 2-norm residual `cfg.linear_tol`.
pub fn linear_solve(sys: &SparseSystem, cfg: &SolverConfig) -> Result<Vec<f64>> {
    let n = sys.matrix.nrows();
    if sys.matrix.ncols() != n || sys.rhs.len() != n {
        return Err(Error::ShapeMismatch);
    }
    let bnorm = norm(&sys.rhs);
    if bnorm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let mut x = vec![0.0; n];
    let mut used = 0;
    // The recurrence residual can drift from the true one; restart from the
    // current iterate until the true residual meets the tolerance.
    for _ in 0..4 {
        let (dx, iters) = if sys.symmetric {
            pcg(&sys.matrix, &sys.rhs, &x, cfg.linear_tol, cfg.linear_max_iter - used)?
        } else {
            bicgstab(&sys.matrix, &sys.rhs, &x, cfg.linear_tol, cfg.linear_max_iter - used)?
        };
        x = dx;
        used += iters;
        let rel = true_residual(&sys.matrix, &x, &sys.rhs) / bnorm;
        if rel <= cfg.linear_tol {
            return Ok(x);
        }
        if used >= cfg.linear_max_iter {
            return Err(Error::LinearSolveFailure { iterations: used, residual: rel });
        }
    }
    let rel = true_residual(&sys.matrix, &x, &sys.rhs) / bnorm;
    Err(Error::LinearSolveFailure { iterations: used, residual: rel })
}

fn pcg(a: &CsrMatrix, b: &[f64], x0: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, usize)> {
    let dinv = inverse_diagonal(a);
    let bnorm = norm(b);
    let mut x = x0.to_vec();
    let ax = a.matvec(&x);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    if norm(&r) <= tol * bnorm {
        return Ok((x, 0));
    }
    let mut z: Vec<f64> = r.iter().zip(&dinv).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 1..=max_iter {
        let ap = a.matvec(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::LinearSolveFailure { iterations: it, residual: norm(&r) / bnorm });
        }
        let alpha = rz / pap;
        for i in 0..x.len() {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm(&r) <= tol * bnorm {
            return Ok((x, it));
        }
        for i in 0..z.len() {
            z[i] = r[i] * dinv[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..p.len() {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::LinearSolveFailure { iterations: max_iter, residual: norm(&r) / bnorm })
}

fn bicgstab(a: &CsrMatrix, b: &[f64], x0: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, usize)> {
    let dinv = inverse_diagonal(a);
    let precond = |v: &[f64]| -> Vec<f64> { v.iter().zip(&dinv).map(|(vi, di)| vi * di).collect() };
    let bnorm = norm(b);
    let mut x = x0.to_vec();
    let ax = a.matvec(&x);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    if norm(&r) <= tol * bnorm {
        return Ok((x, 0));
    }
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let n = x.len();
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    for it in 1..=max_iter {
        let rho_next = dot(&r_hat, &r);
        if rho_next == 0.0 || omega == 0.0 {
            return Err(Error::LinearSolveFailure { iterations: it, residual: norm(&r) / bnorm });
        }
        let beta = (rho_next / rho) * (alpha / omega);
        rho = rho_next;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        let y = precond(&p);
        v = a.matvec(&y);
        alpha = rho / dot(&r_hat, &v);
        let s: Vec<f64> = (0..n).map(|i| r[i] - alpha * v[i]).collect();
        if norm(&s) <= tol * bnorm {
            for i in 0..n {
                x[i] += alpha * y[i];
            }
            return Ok((x, it));
        }
        let z = precond(&s);
        let t = a.matvec(&z);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        for i in 0..n {
            x[i] += alpha * y[i] + omega * z[i];
            r[i] = s[i] - omega * t[i];
        }
        if norm(&r) <= tol * bnorm {
            return Ok((x, it));
        }
    }
    Err(Error::LinearSolveFailure { iterations: max_iter, residual: norm(&r) / bnorm })
}
