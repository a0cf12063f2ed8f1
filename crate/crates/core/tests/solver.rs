use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};
use std::sync::Arc;

use capillary_core::capillary::{affine_capillary_solution, capillary_energy};
use capillary_core::numeric::{log_log_slope, norm};
use capillary_core::solver::{
    assemble_jacobian, assemble_residual, linear_solve, CsrMatrix, MeanCurvature, SparseSystem,
};
use capillary_core::*;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `u = -sqrt(1 - q^2) / H` with `q = H x - cos(theta)`: the 1D solution of
/// `(u' / W)' = H` with `u'(0) = -cos(theta) W(0)`.
fn exact_1d(x: f64, h0: f64, cos: f64) -> f64 {
    let q = h0 * x - cos;
    -(1.0 - q * q).sqrt() / h0
}

fn random_state(rng: &mut ChaCha8Rng) -> (ProblemSpec, ScalarField) {
    let theta = CapillaryAngle::new(rng.random_range(0.3..PI - 0.3)).unwrap();
    let grid = Arc::new(build_grid(2, 0.25, 1.5, 1.0).unwrap());
    let aff = affine_capillary_solution(theta, &[rng.random_range(-1.0..1.0)], 0.0);
    let h0 = rng.random_range(-0.5..0.5);
    let spec = ProblemSpec::with_boundary_fn(grid.clone(), theta, MeanCurvature::Constant(h0), |x| aff.eval(x)).unwrap();
    let u = ScalarField::from_fn(grid, |x| aff.eval(x) + 0.2 * rng.random_range(-1.0..1.0)).unwrap();
    (spec, u)
}

#[test]
fn jacobian_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for state in 0..20 {
        let (spec, u) = random_state(&mut rng);
        let unknowns = spec.grid.unknown_nodes();
        let dir: Vec<f64> = unknowns.iter().map(|_| rng.random_range(-1.0..1.0)).collect();
        let jac = assemble_jacobian(&u, &spec).unwrap();
        let jd = jac.matrix.matvec(&dir);
        let r0 = assemble_residual(&u, &spec).unwrap();
        let steps = [1e-2, 5e-3, 2.5e-3, 1.25e-3];
        let errs: Vec<f64> = steps
            .iter()
            .map(|&t| {
                let mut v = u.clone();
                for (&k, d) in unknowns.iter().zip(&dir) {
                    v.values_mut()[k] += t * d;
                }
                let r1 = assemble_residual(&v, &spec).unwrap();
                let diff: Vec<f64> = r1.iter().zip(&r0).zip(&jd).map(|((a, b), j)| (a - b) / t - j).collect();
                norm(&diff)
            })
            .collect();
        let slope = log_log_slope(&steps, &errs);
        assert!(slope >= 0.9, "state {state}: slope {slope}, errors {errs:?}");
    }
}

#[test]
fn one_dimensional_mesh_convergence_at_common_nodes() {
    let theta = CapillaryAngle::new(FRAC_PI_3).unwrap();
    let (h0, cos) = (0.5, theta.cos());
    let mut errs = Vec::new();
    let mut with_wall = Vec::new();
    for (level, h) in [0.1, 0.05, 0.025].into_iter().enumerate() {
        let grid = Arc::new(build_grid(1, h, 1.0, 0.0).unwrap());
        let spec = ProblemSpec::with_boundary_fn(grid.clone(), theta, MeanCurvature::Constant(h0), |x| {
            exact_1d(x[0], h0, cos)
        })
        .unwrap();
        let (u, rep) = newton_solve(&spec, &SolverConfig::default()).unwrap();
        assert_eq!(rep.status, SolveStatus::Converged);
        let stride = 1 << level;
        let err = (1..10)
            .map(|i| (u.values()[i * stride] - exact_1d(grid.point(i * stride)[0], h0, cos)).abs())
            .fold(0.0, f64::max);
        errs.push(err);
        let wall = (u.values()[0] - exact_1d(0.0, h0, cos)).abs();
        with_wall.push(err.max(wall));
    }
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio} from {errs:?}");
    }
    for w in with_wall.windows(2) {
        assert!(w[0] / w[1] >= 1.8, "boundary-inclusive ratio {} from {with_wall:?}", w[0] / w[1]);
    }
}

fn solve_2d_reference(h: f64) -> ScalarField {
    let theta = CapillaryAngle::new(FRAC_PI_3).unwrap();
    let base = affine_capillary_solution(theta, &[0.0], 0.0);
    let grid = Arc::new(build_grid(2, h, 1.0, 1.0).unwrap());
    let spec = ProblemSpec::with_boundary_fn(grid, theta, MeanCurvature::Constant(0.3), |x| {
        let bump = if x[0] > 1.0 - 1e-9 && x[1].abs() < 0.5 { 0.2 * (PI * x[1]).cos().powi(4) } else { 0.0 };
        base.eval(x) + bump
    })
    .unwrap();
    let (u, rep) = newton_solve(&spec, &SolverConfig::default()).unwrap();
    assert_eq!(rep.status, SolveStatus::Converged);
    u
}

#[test]
fn two_dimensional_self_convergence() {
    let hs = [0.2, 0.1, 0.05, 0.025];
    let sols: Vec<ScalarField> = hs.iter().map(|&h| solve_2d_reference(h)).collect();
    // Differences between consecutive levels at the coarsest lattice's nodes.
    let coarse = sols[0].grid().clone();
    let mut interior = Vec::new();
    let mut everywhere = Vec::new();
    for l in 0..3 {
        let (a, b) = (&sols[l], &sols[l + 1]);
        let sa = 1usize << l;
        let sb = 1usize << (l + 1);
        let mut int = 0.0f64;
        let mut all = 0.0f64;
        for k in 0..coarse.node_count() {
            let (i, j) = coarse.lattice(k);
            let d = (a.at(i * sa, j * sa) - b.at(i * sb, j * sb)).abs();
            all = all.max(d);
            if coarse.class(k) == NodeClass::Interior {
                int = int.max(d);
            }
        }
        interior.push(int);
        everywhere.push(all);
    }
    for w in interior.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.5..=4.5).contains(&ratio), "interior ratio {ratio} from {interior:?}");
    }
    for w in everywhere.windows(2) {
        assert!(w[0] / w[1] >= 1.8, "boundary-inclusive ratio {} from {everywhere:?}", w[0] / w[1]);
    }
}

#[test]
fn converged_solution_is_discretely_stationary() {
    let theta = CapillaryAngle::new(1.1).unwrap();
    let grid = Arc::new(build_grid(2, 0.1, 1.0, 1.0).unwrap());
    let base = affine_capillary_solution(theta, &[0.2], 0.0);
    let spec = ProblemSpec::with_boundary_fn(grid.clone(), theta, MeanCurvature::zero(), |x| {
        base.eval(x) + 0.1 * (2.0 * x[1]).sin() * x[0]
    })
    .unwrap();
    let (u, rep) = newton_solve(&spec, &SolverConfig::default()).unwrap();
    assert_eq!(rep.status, SolveStatus::Converged);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let unknowns = grid.unknown_nodes();
    let eps = 1e-5;
    for _ in 0..20 {
        let w: Vec<f64> = unknowns.iter().map(|_| rng.random_range(-1.0..1.0)).collect();
        let shifted = |s: f64| {
            let mut v = u.clone();
            for (&k, wk) in unknowns.iter().zip(&w) {
                v.values_mut()[k] += s * wk;
            }
            capillary_energy(&v, &theta)
        };
        let derivative = (shifted(eps) - shifted(-eps)) / (2.0 * eps);
        assert!(derivative.abs() <= 1e-8, "directional derivative {derivative}");
    }
}

#[test]
fn every_report_keeps_the_area_element_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..5 {
        let (spec, _) = random_state(&mut rng);
        let (_, rep) = newton_solve(&spec, &SolverConfig::default()).unwrap();
        assert!(rep.v_min >= spec.theta.sin() - 1e-12);
    }
}

#[test]
fn right_angle_recovers_tangentially_linear_data() {
    let theta = CapillaryAngle::new(FRAC_PI_2).unwrap();
    let grid = Arc::new(build_grid(2, 0.2, 2.0, 1.0).unwrap());
    let spec = ProblemSpec::with_boundary_fn(grid.clone(), theta, MeanCurvature::zero(), |x| 1.0 - 0.3 * x[1]).unwrap();
    let (u, _) = newton_solve(&spec, &SolverConfig::default()).unwrap();
    assert!(u.max_abs_diff(&ScalarField::from_fn(grid, |x| 1.0 - 0.3 * x[1]).unwrap()) < 1e-12);
}

#[test]
fn linear_solve_matches_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..10 {
        let n = 20;
        let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let a = &b * b.transpose() + DMatrix::identity(n, n) * n as f64;
        let rhs = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let expected = a.clone().cholesky().unwrap().solve(&rhs);
        let rows: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| a[(i, j)]).collect()).collect();
        let sys = SparseSystem::new(CsrMatrix::from_dense(&rows), rhs.iter().copied().collect());
        let x = linear_solve(&sys, &SolverConfig::default()).unwrap();
        let err = x.iter().zip(expected.iter()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "error {err}");
    }
}
