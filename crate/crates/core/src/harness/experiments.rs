//! Truncated-domain reproductions of the Liouville, gradient-bound,
//! minimizing and boundary-orthogonality statements.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{ExperimentConfig, Scenario};
use super::report::{angle_rows_to_csv, AngleRow, ExperimentReport, FitSummary, ReportRow};
use crate::capillary::{affine_capillary_solution, capillary_energy, AffineCapillary, CapillaryAngle, ScalarField};
use crate::error::{Error, Result};
use crate::estimates::{
    angle_in_u, choose_eps0, constant_c_theta, script_b, verify_conormal_orthogonality, CutoffParams, LinearBound,
};
use crate::geometry::{inner_node_set, EllipsoidRegion, HalfSpaceGrid};
use crate::numeric::{dot, log_log_slope, norm, solve3};
use crate::solver::{discrete_gradient, newton_solve, MeanCurvature, ProblemSpec, SolveReport, SolveStatus, SolverConfig};

const PERTURBATION_MODES: usize = 4;
const MINIMIZER_TRIALS: usize = 100;
const MINIMIZER_EPS: [f64; 3] = [1e-1, 1e-2, 1e-3];
const DEFAULT_CONORMAL_H: [f64; 3] = [0.2, 0.1, 0.05];

/// Smooth seeded perturbation profile `phi(y) = sum a_i cos(<k_i, y> + p_i)`
/// with `sum |a_i| = 1`, hence `|phi| <= 1`. Experiments evaluate it at
/// `x / r` so the same shape is reused at every level.
#[derive(Clone, Debug, PartialEq)]
pub struct Perturbation {
    modes: Vec<(f64, Vec<f64>, f64)>,
}

impl Perturbation {
    /// Draws the profile from stream 0 of `ChaCha8Rng` seeded with `seed`.
    pub fn seeded(seed: u64, dim: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut modes: Vec<(f64, Vec<f64>, f64)> = (0..PERTURBATION_MODES)
            .map(|_| {
                let a = rng.random_range(0.2..1.0);
                let k = (0..dim).map(|_| rng.random_range(-1.5..1.5) * PI).collect();
                (a, k, rng.random_range(0.0..TAU))
            })
            .collect();
        let total: f64 = modes.iter().map(|m| m.0).sum();
        for m in &mut modes {
            m.0 /= total;
        }
        Perturbation { modes }
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        self.modes.iter().map(|(a, k, p)| a * (dot(k, y) + p).cos()).sum()
    }
}

/// `perturb_amp * r^(-perturb_decay)`.
pub fn perturbation_amplitude(cfg: &ExperimentConfig, r: f64) -> f64 {
    cfg.perturb_amp * r.powf(-cfg.perturb_decay)
}

/// Smallest lattice box of spacing `h` containing the closure of `E_r`:
/// `L1 >= (1 + |cos|) r` and `L' >= r / sin`.
pub fn truncation_grid(dim: usize, theta: &CapillaryAngle, r: f64, h: f64) -> Result<HalfSpaceGrid> {
    if !(r > 0.0 && h > 0.0 && r.is_finite() && h.is_finite()) {
        return Err(Error::InvalidParameter(format!("need r > 0 and h > 0, got r = {r}, h = {h}")));
    }
    if !matches!(dim, 1 | 2) {
        return Err(Error::BadDimension(dim));
    }
    let cells = |len: f64| ((len / h) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let n1 = cells((1.0 + theta.cos().abs()) * r);
    let n2 = if dim == 2 { 2 * cells(r / theta.sin()) } else { 0 };
    Ok(HalfSpaceGrid::from_counts(dim, h, n1, n2))
}

fn tangential(cfg: &ExperimentConfig, slope: f64) -> Vec<f64> {
    if cfg.dim == 2 {
        vec![slope]
    } else {
        Vec::new()
    }
}

/// Best-fit affine capillary gradient on `nodes`: the tangential slope is the
/// mean measured tangential derivative, the normal slope follows from the
/// contact angle. Returns the fitted gradient and the infinity-norm deviation.
fn affine_deviation(u: &ScalarField, theta: &CapillaryAngle, nodes: &[usize], fixed: Option<&[f64]>) -> (Vec<f64>, f64) {
    let grad = discrete_gradient(u, theta);
    let dim = u.grid().dim();
    let bprime: Vec<f64> = match fixed {
        Some(b) => b.to_vec(),
        None => (1..dim).map(|i| nodes.iter().map(|&k| grad.at(k)[i]).sum::<f64>() / nodes.len() as f64).collect(),
    };
    let target = affine_capillary_solution(*theta, &bprime, 0.0).gradient();
    let dev = nodes
        .iter()
        .flat_map(|&k| grad.at(k).iter().zip(&target).map(|(g, t)| (g - t).abs()).collect::<Vec<_>>())
        .fold(0.0, f64::max);
    (target, dev)
}

fn row(level: usize, r: f64, h: f64, sup: f64, dev: f64, rep: &SolveReport) -> ReportRow {
    ReportRow {
        level,
        r,
        h,
        sup_grad_inner: sup,
        affine_dev: dev,
        energy: rep.energy,
        v_min: rep.v_min,
        newton_iters: rep.iterations,
        status: rep.status.to_string(),
    }
}

fn sort_rows(report: &mut ExperimentReport) {
    let mut order: Vec<usize> = (0..report.rows.len()).collect();
    order.sort_by(|&a, &b| report.rows[a].r.total_cmp(&report.rows[b].r).then(a.cmp(&b)));
    report.rows = order.iter().map(|&i| report.rows[i].clone()).collect();
    if report.diagnostics.len() == order.len() {
        report.diagnostics = order.iter().map(|&i| report.diagnostics[i]).collect();
    }
}

fn check_linear_growth(grid: &HalfSpaceGrid, spec: &ProblemSpec, c0: f64) -> Result<()> {
    for &(k, v) in spec.dirichlet() {
        let x = grid.point(k);
        if v.abs() > c0 * (1.0 + norm(&x)) {
            return Err(Error::HypothesisViolation(format!(
                "|u({x:?})| = {} exceeds C0 (1 + |x|) with C0 = {c0}",
                v.abs()
            )));
        }
    }
    Ok(())
}

/// Truncated Liouville experiment.
///
type BoundaryData<'a> = Box<dyn Fn(&[f64]) -> f64 + 'a>;

/// Linear-growth mode: Dirichlet data = affine capillary trace with slope
/// `base_slope` plus `A(r) phi(x / r)`. One-sided mode: the trace of
/// `-cot x1 + L_offset` shifted one unit (plus a nonnegative perturbation)
/// toward the side where solutions exist: below `L` for angles below `pi/2`,
/// above it otherwise. Each level reports `sup |Du|` and the deviation from
/// the best-fit affine capillary gradient on the nodes of `E_{theta, r/2}`.
pub fn run_liouville_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let one_sided = match cfg.scenario {
        Scenario::LiouvilleLinearGrowth => false,
        Scenario::LiouvilleOneSided => true,
        s => return Err(Error::Config(format!("scenario {s} is not a Liouville experiment"))),
    };
    cfg.validate()?;
    let theta = cfg.angle()?;
    let pert = Perturbation::seeded(cfg.seed, cfg.dim);
    let bound = LinearBound { slope: cfg.l_slope_full(), offset: cfg.l_offset };
    let side = if theta.cos() > 0.0 { -1.0 } else { 1.0 };
    if one_sided {
        CutoffParams::new(cfg.r_levels[0], theta)?.with_bound(bound.clone()).check_one_sided_hypothesis()?;
    }
    let mut report = ExperimentReport::new(cfg.scenario);
    for (level, &r) in cfg.r_levels.iter().enumerate() {
        let h = cfg.h_at(level);
        let grid = Arc::new(truncation_grid(cfg.dim, &theta, r, h)?);
        let amp = perturbation_amplitude(cfg, r);
        let data: BoundaryData = if one_sided {
            let base = affine_capillary_solution(theta, &tangential(cfg, 0.0), cfg.l_offset);
            let pert = &pert;
            Box::new(move |x: &[f64]| {
                let y: Vec<f64> = x.iter().map(|c| c / r).collect();
                base.eval(x) + side * (1.0 + 0.5 * amp * (1.0 + pert.eval(&y)))
            })
        } else {
            let base = affine_capillary_solution(theta, &tangential(cfg, cfg.base_slope), 0.0);
            let pert = &pert;
            Box::new(move |x: &[f64]| {
                let y: Vec<f64> = x.iter().map(|c| c / r).collect();
                base.eval(x) + amp * pert.eval(&y)
            })
        };
        let spec = ProblemSpec::with_boundary_fn(grid.clone(), theta, MeanCurvature::zero(), &data)?;
        check_linear_growth(&grid, &spec, cfg.c0)?;
        if one_sided {
            if let Some(&(k, v)) =
                spec.dirichlet().iter().find(|&&(k, v)| side * (v - bound.eval(&grid.point(k))) < 0.0)
            {
                return Err(Error::HypothesisViolation(format!(
                    "data {v} at {:?} is on the wrong side of L",
                    grid.point(k)
                )));
            }
        }
        let (u, rep) = newton_solve(&spec, &SolverConfig::default())?;
        let nodes = inner_node_set(&grid, &EllipsoidRegion::inner(0.5 * r, theta)?)?;
        let fixed = one_sided.then(|| tangential(cfg, 0.0));
        let (_, dev) = affine_deviation(&u, &theta, &nodes, fixed.as_deref());
        let sup = discrete_gradient(&u, &theta).sup_norm_over(&nodes);
        if one_sided {
            let crossing = (0..grid.node_count())
                .filter(|&k| side * (u.values()[k] - bound.eval(&grid.point(k))) < 0.0)
                .count();
            if crossing > 0 {
                report.violations.push(format!("level {level}: solution crosses L at {crossing} node(s)"));
            }
        }
        report.rows.push(row(level, r, h, sup, dev, &rep));
    }
    sort_rows(&mut report);
    for w in report.rows.windows(2) {
        if w[1].affine_dev > 1.1 * w[0].affine_dev + 1e-9 {
            report.violations.push(format!(
                "affine deviation grew from {} (r = {}) to {} (r = {})",
                w[0].affine_dev, w[0].r, w[1].affine_dev, w[1].r
            ));
        }
    }
    push_status_violations(&mut report);
    Ok(report)
}

fn push_status_violations(report: &mut ExperimentReport) {
    let failed: Vec<String> = report
        .rows
        .iter()
        .filter(|r| r.status != SolveStatus::Converged.to_string())
        .map(|r| format!("level {} (r = {}, h = {}) ended with status {}", r.level, r.r, r.h, r.status))
        .collect();
    report.violations.extend(failed);
}

/// One solve of the gradient-bound family: returns the report row and `t = M / r`.
fn sweep_member(
    cfg: &ExperimentConfig,
    theta: &CapillaryAngle,
    pert: &Perturbation,
    r: f64,
    h: f64,
    member: usize,
) -> Result<(ReportRow, f64)> {
    let grid = Arc::new(truncation_grid(cfg.dim, theta, r, h)?);
    let base = affine_capillary_solution(*theta, &tangential(cfg, cfg.base_slope), 0.0);
    let amp = cfg.perturb_amp * r * member as f64;
    let spec = ProblemSpec::with_boundary_fn(grid.clone(), *theta, MeanCurvature::zero(), |x| {
        let y: Vec<f64> = x.iter().map(|c| c / r).collect();
        base.eval(x) + amp * pert.eval(&y)
    })?;
    let (u, rep) = newton_solve(&spec, &SolverConfig::default())?;
    let inner = inner_node_set(&grid, &EllipsoidRegion::inner(0.5 * r, *theta)?)?;
    let outer = inner_node_set(&grid, &EllipsoidRegion::outer(r, *theta)?)?;
    let m = outer.iter().map(|&k| u.values()[k].abs()).fold(0.0, f64::max) + r;
    let sup = discrete_gradient(&u, theta).sup_norm_over(&inner);
    let (_, dev) = affine_deviation(&u, theta, &inner, None);
    Ok((row(0, r, h, sup, dev, &rep), m / r))
}

/// Least-squares fit of `y = C1 + C2 t + C3 t^2`. Falls back to `C1` alone
/// when the samples do not determine all three constants, then raises `C1`
/// by the largest positive residual so the fitted curve bounds every sample.
pub fn fit_gradient_constants(t: &[f64], y: &[f64]) -> ([f64; 3], bool, f64) {
    let spread = t.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)) - t.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let full = if spread > 1e-9 * t.iter().fold(1.0, |a: f64, b| a.max(b.abs())) {
        let mut ata = [[0.0; 3]; 3];
        let mut atb = [0.0; 3];
        for (&ti, &yi) in t.iter().zip(y) {
            let basis = [1.0, ti, ti * ti];
            for a in 0..3 {
                for b in 0..3 {
                    ata[a][b] += basis[a] * basis[b];
                }
                atb[a] += basis[a] * yi;
            }
        }
        solve3(ata, atb)
    } else {
        None
    };
    let (mut c, degenerate) = match full {
        Some(c) => (c, false),
        None => ([y.iter().sum::<f64>() / y.len() as f64, 0.0, 0.0], true),
    };
    let residuals: Vec<f64> = t.iter().zip(y).map(|(&ti, &yi)| yi - (c[0] + c[1] * ti + c[2] * ti * ti)).collect();
    let max_abs = residuals.iter().fold(0.0, |a: f64, r| a.max(r.abs()));
    let shift = residuals.iter().fold(0.0, |a: f64, &r| a.max(r));
    c[0] += shift;
    (c, degenerate, max_abs)
}

/// Gradient-bound sweep over `r_levels` and a four-member data family whose
/// perturbation amplitude is `perturb_amp * r * m`, `m = 0..3`, so that
/// `M / r` is (nearly) fixed per member. The constants are fitted at the
/// configured mesh widths and again at half of them; `stability` compares
/// the two fits.
pub fn run_gradient_bound_sweep(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    if cfg.scenario != Scenario::GradientBoundSweep {
        return Err(Error::Config(format!("scenario {} is not a gradient-bound sweep", cfg.scenario)));
    }
    cfg.validate()?;
    let theta = cfg.angle()?;
    if cfg.strict_angle_range && !angle_in_u(cfg.range_n, &theta)?.in_range {
        return Err(Error::AngleOutOfRange { n: cfg.range_n, theta: theta.radians() });
    }
    let pert = Perturbation::seeded(cfg.seed, cfg.dim);
    let gauge = 1.0 - theta.cos().abs();
    let mut report = ExperimentReport::new(cfg.scenario);
    let mut fits = Vec::new();
    for refine in [1.0, 0.5] {
        let (mut t, mut y) = (Vec::new(), Vec::new());
        for (level, &r) in cfg.r_levels.iter().enumerate() {
            for member in 0..4 {
                let (mut row, ratio) = sweep_member(cfg, &theta, &pert, r, cfg.h_at(level) * refine, member)?;
                t.push(ratio);
                y.push((row.sup_grad_inner * gauge).ln());
                if refine == 1.0 {
                    row.level = report.rows.len();
                    report.rows.push(row);
                    report.diagnostics.push(ratio);
                }
            }
        }
        fits.push(fit_gradient_constants(&t, &y));
    }
    let (c, degenerate, max_residual) = fits[0];
    let (fine, _, _) = fits[1];
    let diff = norm(&[c[0] - fine[0], c[1] - fine[1], c[2] - fine[2]]);
    let stability = diff / norm(&fine).max(f64::MIN_POSITIVE);
    for (row, &t) in report.rows.iter().zip(&report.diagnostics) {
        let bound = (c[0] + c[1] * t + c[2] * t * t).exp() / gauge;
        if row.sup_grad_inner > bound * (1.0 + 1e-12) {
            report.violations.push(format!("row {}: sup|Du| = {} above fitted bound {bound}", row.level, row.sup_grad_inner));
        }
    }
    if stability > 0.2 {
        report.violations.push(format!("fitted constants changed by {stability:.3} under mesh halving (limit 0.2)"));
    }
    report.fit = Some(FitSummary { c, degenerate, max_residual, stability });
    push_status_violations(&mut report);
    Ok(report)
}

/// Outcome of the perturbation trials around one solution.
#[derive(Clone, Debug, PartialEq)]
pub struct MinimizerOutcome {
    /// Smallest `A(u + eps w) - A(u)` over all trials and amplitudes.
    pub min_increase: f64,
    /// Smallest per-trial log-log slope of the increase against `eps`.
    pub min_slope: f64,
}

/// Energy increase under `trials` random perturbations `w` that vanish on
/// Dirichlet nodes, drawn from `ChaCha8Rng` seeded with `seed`.
///
/// Fails with `StationarityViolation` on the first decrease below `-1e-10`.
pub fn minimizer_trials(u: &ScalarField, spec: &ProblemSpec, trials: usize, seed: u64) -> Result<MinimizerOutcome> {
    let unknowns = spec.grid.unknown_nodes();
    let base = capillary_energy(u, &spec.theta);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut out = MinimizerOutcome { min_increase: f64::INFINITY, min_slope: f64::INFINITY };
    for trial in 0..trials {
        let w: Vec<f64> = unknowns.iter().map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut increases = Vec::with_capacity(MINIMIZER_EPS.len());
        for &eps in &MINIMIZER_EPS {
            let mut v = u.clone();
            let vals = v.values_mut();
            for (&k, wk) in unknowns.iter().zip(&w) {
                vals[k] += eps * wk;
            }
            let inc = capillary_energy(&v, &spec.theta) - base;
            if inc < -1e-10 {
                return Err(Error::StationarityViolation { trial, epsilon: eps, drop: -inc });
            }
            out.min_increase = out.min_increase.min(inc);
            increases.push(inc);
        }
        let slope = if increases.iter().all(|d| *d > 0.0) {
            log_log_slope(&MINIMIZER_EPS, &increases)
        } else {
            f64::NAN
        };
        out.min_slope = if slope.is_nan() { f64::NAN } else { out.min_slope.min(slope) };
    }
    Ok(out)
}

/// Discrete minimizing property: at each level solve the linear-growth
/// problem and run the perturbation trials. Diagnostics hold the smallest
/// quadratic-model slope per level.
pub fn run_minimizer_test(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    if cfg.scenario != Scenario::MinimizerTest {
        return Err(Error::Config(format!("scenario {} is not a minimizer test", cfg.scenario)));
    }
    cfg.validate()?;
    let theta = cfg.angle()?;
    let pert = Perturbation::seeded(cfg.seed, cfg.dim);
    let base = affine_capillary_solution(theta, &tangential(cfg, cfg.base_slope), 0.0);
    let mut report = ExperimentReport::new(cfg.scenario);
    for (level, &r) in cfg.r_levels.iter().enumerate() {
        let h = cfg.h_at(level);
        let grid = Arc::new(truncation_grid(cfg.dim, &theta, r, h)?);
        let amp = perturbation_amplitude(cfg, r);
        let spec = ProblemSpec::with_boundary_fn(grid.clone(), theta, MeanCurvature::zero(), |x| {
            let y: Vec<f64> = x.iter().map(|c| c / r).collect();
            base.eval(x) + amp * pert.eval(&y)
        })?;
        let (u, rep) = newton_solve(&spec, &SolverConfig::default())?;
        if rep.status != SolveStatus::Converged {
            return Err(Error::InvariantViolation(format!(
                "minimizer test needs a converged solution, level {level} ended with {}",
                rep.status
            )));
        }
        let outcome = minimizer_trials(&u, &spec, MINIMIZER_TRIALS, cfg.seed.wrapping_add(level as u64))?;
        if !(outcome.min_slope >= 1.9) {
            report.violations.push(format!("level {level}: quadratic-model slope {} below 1.9", outcome.min_slope));
        }
        let nodes = inner_node_set(&grid, &EllipsoidRegion::inner(0.5 * r, theta)?)?;
        let (_, dev) = affine_deviation(&u, &theta, &nodes, None);
        let sup = discrete_gradient(&u, &theta).sup_norm_over(&nodes);
        report.rows.push(row(level, r, h, sup, dev, &rep));
        report.diagnostics.push(outcome.min_slope);
    }
    sort_rows(&mut report);
    Ok(report)
}

/// Recovery of an affine capillary solution from its Dirichlet trace,
/// starting from the trace plus the seeded perturbation. Diagnostics hold
/// the nodal infinity error against the exact solution.
pub fn run_affine_recovery(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    if cfg.scenario != Scenario::AffineRecovery {
        return Err(Error::Config(format!("scenario {} is not affine recovery", cfg.scenario)));
    }
    cfg.validate()?;
    let theta = cfg.angle()?;
    let pert = Perturbation::seeded(cfg.seed, cfg.dim);
    let exact = affine_capillary_solution(theta, &tangential(cfg, cfg.base_slope), cfg.l_offset);
    let mut report = ExperimentReport::new(cfg.scenario);
    for (level, &r) in cfg.r_levels.iter().enumerate() {
        let h = cfg.h_at(level);
        let grid = Arc::new(truncation_grid(cfg.dim, &theta, r, h)?);
        let amp = perturbation_amplitude(cfg, r);
        let initial = ScalarField::from_fn(grid.clone(), |x| {
            let y: Vec<f64> = x.iter().map(|c| c / r).collect();
            exact.eval(x) + amp * pert.eval(&y)
        })?;
        let spec = ProblemSpec::with_boundary_fn(grid.clone(), theta, MeanCurvature::zero(), |x| exact.eval(x))?
            .with_initial(initial);
        let (u, rep) = newton_solve(&spec, &SolverConfig::default())?;
        let err = u.max_abs_diff(&exact.on_grid(grid.clone()));
        let nodes = inner_node_set(&grid, &EllipsoidRegion::inner(0.5 * r, theta)?)?;
        let (_, dev) = affine_deviation(&u, &theta, &nodes, Some(&exact.tangential_slope));
        let sup = discrete_gradient(&u, &theta).sup_norm_over(&nodes);
        if err > 1e-9 {
            report.violations.push(format!("level {level}: nodal error {err:e} above 1e-9"));
        }
        report.rows.push(row(level, r, h, sup, dev, &rep));
        report.diagnostics.push(err);
    }
    sort_rows(&mut report);
    push_status_violations(&mut report);
    Ok(report)
}

/// Dirichlet data of the boundary-orthogonality check on `[0, 1] x [-3, 3]`:
/// the affine capillary trace plus `perturb_amp cos^4(pi x2 / 2)` on the far
/// face for `|x2| < 1`. The bump vanishes to high order before the corners.
pub fn conormal_check_data(base: &AffineCapillary, amp: f64) -> impl Fn(&[f64]) -> f64 + '_ {
    move |x: &[f64]| {
        let far = x[0] > 1.0 - 1e-9;
        let t = x.get(1).copied().unwrap_or(0.0);
        let bump = if far && t.abs() < 1.0 { amp * (0.5 * PI * t).cos().powi(4) } else { 0.0 };
        base.eval(x) + bump
    }
}

/// Boundary-orthogonality check under mesh refinement. Mesh widths come
/// from `h_levels` (default 0.2, 0.1, 0.05); diagnostics hold
/// `max |g^{1j} v_j|` over capillary nodes, which must fall by at least 1.8
/// per halving.
pub fn run_conormal_check(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    if cfg.scenario != Scenario::ConormalCheck {
        return Err(Error::Config(format!("scenario {} is not a conormal check", cfg.scenario)));
    }
    cfg.validate()?;
    let theta = cfg.angle()?;
    let hs: Vec<f64> = if cfg.h_levels.is_empty() { DEFAULT_CONORMAL_H.to_vec() } else { cfg.h_levels.clone() };
    let base = affine_capillary_solution(theta, &tangential(cfg, cfg.base_slope), 0.0);
    let mut report = ExperimentReport::new(cfg.scenario);
    for (level, &h) in hs.iter().enumerate() {
        let grid = Arc::new(crate::geometry::build_grid(cfg.dim, h, 1.0, 3.0)?);
        let spec = ProblemSpec::with_boundary_fn(grid.clone(), theta, MeanCurvature::zero(), conormal_check_data(&base, cfg.perturb_amp))?;
        let (u, rep) = newton_solve(&spec, &SolverConfig::default())?;
        let nodes = inner_node_set(&grid, &EllipsoidRegion::inner(0.5, theta)?)?;
        let (_, dev) = affine_deviation(&u, &theta, &nodes, Some(&base.tangential_slope));
        let sup = discrete_gradient(&u, &theta).sup_norm_over(&nodes);
        report.rows.push(row(level, 1.0, h, sup, dev, &rep));
        report.diagnostics.push(verify_conormal_orthogonality(&u, &theta));
    }
    for (k, w) in report.diagnostics.windows(2).enumerate() {
        if !(w[0] >= 1.8 * w[1]) {
            report.violations.push(format!("level {}: residual ratio {} below 1.8", k + 1, w[0] / w[1]));
        }
    }
    push_status_violations(&mut report);
    Ok(report)
}

/// Admissible-angle table over `theta_steps` midpoints of
/// `[asin(sin_min), pi - asin(sin_min)]` for each `n`.
pub fn run_angle_sweep(n_list: &[usize], theta_steps: usize, sin_min: f64) -> Result<Vec<AngleRow>> {
    if theta_steps == 0 {
        return Err(Error::InvalidParameter("theta_steps must be positive".into()));
    }
    let lo = sin_min.asin();
    let hi = PI - lo;
    let mut rows = Vec::with_capacity(n_list.len() * theta_steps);
    for &n in n_list {
        for i in 0..theta_steps {
            let t = lo + (hi - lo) * (i as f64 + 0.5) / theta_steps as f64;
            let theta = CapillaryAngle::with_floor(t, sin_min)?;
            let range = angle_in_u(n, &theta)?;
            let sb = choose_eps0(n, &theta)
                .and_then(|e| script_b(n, &theta, e))
                .or_else(|| script_b(n, &theta, 0.0))
                .unwrap_or(f64::NAN);
            rows.push(AngleRow {
                n,
                theta: t,
                in_u: range.in_range,
                threshold: range.threshold,
                margin: range.margin,
                c_theta: constant_c_theta(&theta),
                script_b: sb,
            });
        }
    }
    Ok(rows)
}

/// Number of angles used when the angle sweep is driven from a config file.
pub const CONFIG_THETA_STEPS: usize = 90;

/// Result of any scenario.
#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Levels(ExperimentReport),
    Angles(Vec<AngleRow>),
}

impl Outcome {
    pub fn to_csv(&self) -> String {
        match self {
            Outcome::Levels(r) => r.to_csv(),
            Outcome::Angles(rows) => angle_rows_to_csv(rows),
        }
    }

    pub fn summary(&self) -> String {
        match self {
            Outcome::Levels(r) => r.summary(),
            Outcome::Angles(rows) => {
                let admissible = rows.iter().filter(|r| r.in_u).count();
                format!("angle sweep: {} row(s), {admissible} admissible\n", rows.len())
            }
        }
    }

    pub fn violations(&self) -> &[String] {
        match self {
            Outcome::Levels(r) => &r.violations,
            Outcome::Angles(_) => &[],
        }
    }

    pub fn all_converged(&self) -> bool {
        match self {
            Outcome::Levels(r) => r.all_converged(),
            Outcome::Angles(_) => true,
        }
    }
}

/// Dispatches on `cfg.scenario`. A config-driven angle sweep uses
/// `n = range_n` and [`CONFIG_THETA_STEPS`] angles.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Outcome> {
    let report = match cfg.scenario {
        Scenario::AffineRecovery => run_affine_recovery(cfg)?,
        Scenario::LiouvilleLinearGrowth | Scenario::LiouvilleOneSided => run_liouville_experiment(cfg)?,
        Scenario::GradientBoundSweep => run_gradient_bound_sweep(cfg)?,
        Scenario::MinimizerTest => run_minimizer_test(cfg)?,
        Scenario::ConormalCheck => run_conormal_check(cfg)?,
        Scenario::AngleSweep => {
            cfg.validate()?;
            return Ok(Outcome::Angles(run_angle_sweep(&[cfg.range_n], CONFIG_THETA_STEPS, cfg.sin_min)?));
        }
    };
    Ok(Outcome::Levels(report))
}
