//! Closed-form pieces of the interior/boundary gradient estimate: the
//! ellipsoidal cut-off, the auxiliary functions `G` and `G*`, the admissible
//! angle range, the explicit one-sided constant, the coefficient chain of the
//! maximum-principle argument, and two pointwise diagnostics on discrete
//! solutions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::capillary::{area_element_w, capillary_area_element_v, CapillaryAngle, ScalarField};
use crate::error::{Error, Result};
use crate::geometry::NodeClass;
use crate::numeric::{dot, norm};
use crate::solver::{discrete_gradient, ProblemSpec};

/// Default `N*` in the one-sided cut-off.
pub const N_STAR: f64 = 1.0 / 36.0;

/// Linear comparison function `L(x) = <slope, x> + offset`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearBound {
    pub slope: Vec<f64>,
    pub offset: f64,
}

impl LinearBound {
    pub fn eval(&self, x: &[f64]) -> f64 {
        dot(&self.slope, x) + self.offset
    }
}

/// Parameters of the cut-off `Q` and its one-sided variant `Q*`.
#[derive(Clone, Debug, PartialEq)]
pub struct CutoffParams {
    pub r: f64,
    pub theta: CapillaryAngle,
    /// Tangential center `p'`; missing entries are zero.
    pub center: Vec<f64>,
    pub n_star: f64,
    /// `M = sup |u| + r`, the scale of `phi`.
    pub m: f64,
    pub l: Option<LinearBound>,
}

impl CutoffParams {
    pub fn new(r: f64, theta: CapillaryAngle) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidParameter(format!("cut-off radius must be positive, got {r}")));
        }
        Ok(CutoffParams { r, theta, center: Vec::new(), n_star: N_STAR, m: r, l: None })
    }

    pub fn with_scale(mut self, m: f64) -> Result<Self> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::InvalidParameter(format!("phi scale must be positive, got {m}")));
        }
        self.m = m;
        Ok(self)
    }

    pub fn with_n_star(mut self, n_star: f64) -> Result<Self> {
        if !(n_star > 0.0) {
            return Err(Error::InvalidParameter(format!("N* must be positive, got {n_star}")));
        }
        self.n_star = n_star;
        Ok(self)
    }

    pub fn with_center(mut self, center: Vec<f64>) -> Self {
        self.center = center;
        self
    }

    pub fn with_bound(mut self, l: LinearBound) -> Self {
        self.l = Some(l);
        self
    }

    /// One-sided Liouville data needs `|DL| <= C_theta`.
    pub fn check_one_sided_hypothesis(&self) -> Result<()> {
        if let Some(l) = &self.l {
            let c = constant_c_theta(&self.theta);
            if norm(&l.slope) > c {
                return Err(Error::HypothesisViolation(format!(
                    "|DL| = {} exceeds C_theta = {c}",
                    norm(&l.slope)
                )));
            }
        }
        Ok(())
    }

    fn offsets(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let d1 = x[0] - self.theta.cos().abs() * self.r;
        let dt = x.iter().skip(1).enumerate().map(|(i, xi)| xi - self.center.get(i).copied().unwrap_or(0.0)).collect();
        (d1, dt)
    }
}

/// `Q(x) = 1 - ((x1 - |cos| r)^2 + sin^2 |x' - p'|^2) / r^2`.
pub fn cutoff_q(x: &[f64], p: &CutoffParams) -> f64 {
    let (d1, dt) = p.offsets(x);
    let s2 = p.theta.sin().powi(2);
    1.0 - (d1 * d1 + s2 * dot(&dt, &dt)) / (p.r * p.r)
}

/// `psi = Q^2`.
pub fn cutoff_psi(x: &[f64], p: &CutoffParams) -> f64 {
    cutoff_q(x, p).powi(2)
}

fn cutoff_q_gradient(x: &[f64], p: &CutoffParams) -> Vec<f64> {
    let (d1, dt) = p.offsets(x);
    let s2 = p.theta.sin().powi(2);
    let r2 = p.r * p.r;
    std::iter::once(-2.0 * d1 / r2).chain(dt.iter().map(|d| -2.0 * s2 * d / r2)).collect()
}

/// `D psi = 2 Q DQ`.
pub fn cutoff_psi_gradient(x: &[f64], p: &CutoffParams) -> Vec<f64> {
    let q = cutoff_q(x, p);
    cutoff_q_gradient(x, p).into_iter().map(|d| 2.0 * q * d).collect()
}

/// `D^2 psi = 2 DQ (x) DQ + 2 Q D^2 Q`.
pub fn cutoff_psi_hessian(x: &[f64], p: &CutoffParams) -> Vec<Vec<f64>> {
    let q = cutoff_q(x, p);
    let dq = cutoff_q_gradient(x, p);
    let r2 = p.r * p.r;
    let s2 = p.theta.sin().powi(2);
    let n = x.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let diag = if i != j {
                        0.0
                    } else if i == 0 {
                        -2.0 / r2
                    } else {
                        -2.0 * s2 / r2
                    };
                    2.0 * dq[i] * dq[j] + 2.0 * q * diag
                })
                .collect()
        })
        .collect()
}

/// Worst observed deviations from the cut-off relations.
#[derive(Clone, Debug, PartialEq)]
pub struct CutoffCheck {
    /// `max (|D psi| - 4 sqrt(psi) / r)^+` over interior samples.
    pub gradient_bound_violation: f64,
    /// `max |d1 psi - 4 sqrt(psi) |cos| / r|` over wall samples.
    pub boundary_identity_residual: f64,
    /// Smallest `psi` over samples of the inner region.
    pub inner_min_psi: f64,
    /// `(1 - (1 + |cos|)^2 / 4)^2`.
    pub inner_lower_bound: f64,
    /// Largest `r^2 |D^2 psi|` (Frobenius) observed: the measured `c_{n,theta}`.
    pub hessian_constant: f64,
}

/// Uniform sample from the ellipsoid `(x1 - c)^2 + s^2 |x'|^2 < rho^2` restricted to `x1 > 0`.
fn sample_region(rng: &mut ChaCha8Rng, dim: usize, p: &CutoffParams, rho: f64) -> Vec<f64> {
    let c1 = p.theta.cos().abs() * p.r;
    let s = p.theta.sin();
    loop {
        let mut x: Vec<f64> = Vec::with_capacity(dim);
        x.push(rng.random_range(0.0..c1 + rho));
        for i in 1..dim {
            let c = p.center.get(i - 1).copied().unwrap_or(0.0);
            x.push(c + rng.random_range(-rho / s..rho / s));
        }
        let (d1, dt) = p.offsets(&x);
        if x[0] > 0.0 && d1 * d1 + s * s * dot(&dt, &dt) < rho * rho {
            return x;
        }
    }
}

/// Samples the cut-off in dimension `dim` and measures the three cut-off relations.
pub fn cutoff_psi_derivative_check(p: &CutoffParams, dim: usize, samples: usize, seed: u64) -> Result<CutoffCheck> {
    if samples == 0 || dim == 0 {
        return Err(Error::InvalidParameter("need at least one sample in dimension >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cos = p.theta.cos().abs();
    let inner_rho = 0.5 * (1.0 + cos) * p.r;
    let mut check = CutoffCheck {
        gradient_bound_violation: 0.0,
        boundary_identity_residual: 0.0,
        inner_min_psi: f64::INFINITY,
        inner_lower_bound: (1.0 - (1.0 + cos).powi(2) / 4.0).powi(2),
        hessian_constant: 0.0,
    };
    for _ in 0..samples {
        let x = sample_region(&mut rng, dim, p, p.r);
        let psi = cutoff_psi(&x, p);
        let excess = norm(&cutoff_psi_gradient(&x, p)) - 4.0 * psi.sqrt() / p.r;
        check.gradient_bound_violation = check.gradient_bound_violation.max(excess);
        let hess = cutoff_psi_hessian(&x, p);
        let frob = hess.iter().flatten().map(|h| h * h).sum::<f64>().sqrt();
        check.hessian_constant = check.hessian_constant.max(frob * p.r * p.r);

        let y = sample_region(&mut rng, dim, p, inner_rho);
        check.inner_min_psi = check.inner_min_psi.min(cutoff_psi(&y, p));

        // Wall point: project onto x1 = 0, keeping it in the closure of the outer region.
        let mut z = x.clone();
        z[0] = 0.0;
        if cutoff_q(&z, p) >= 0.0 {
            let psi_z = cutoff_psi(&z, p);
            let d1 = cutoff_psi_gradient(&z, p)[0];
            let res = (d1 - 4.0 * psi_z.sqrt() * cos / p.r).abs();
            check.boundary_identity_residual = check.boundary_identity_residual.max(res);
        }
    }
    Ok(check)
}

/// `Q*(x) = Q(x) + (u - L(x)) / (2 N* r)`, with `L = 0` when no bound is set.
pub fn cutoff_q_star(x: &[f64], u_val: f64, p: &CutoffParams) -> f64 {
    let l = p.l.as_ref().map_or(0.0, |l| l.eval(x));
    cutoff_q(x, p) + (u_val - l) / (2.0 * p.n_star * p.r)
}

/// `psi* = ((Q*)^+)^2`.
pub fn cutoff_psi_star(x: &[f64], u_val: f64, p: &CutoffParams) -> f64 {
    cutoff_q_star(x, u_val, p).max(0.0).powi(2)
}

/// `phi(s) = s / (2M) + 1`.
pub fn varphi(u_val: f64, m: f64) -> f64 {
    u_val / (2.0 * m) + 1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AuxiliaryVariant {
    /// `G = phi psi log v` with `psi = (Q^+)^2`.
    G,
    /// `G* = phi psi* log v`.
    GStar,
}

/// Nodal values of an auxiliary function and its maximum over the cut-off's
/// positivity set.
#[derive(Clone, Debug)]
pub struct AuxiliaryValues {
    pub values: Vec<f64>,
    pub argmax: Option<usize>,
    pub max: f64,
}

/// Evaluates `G` or `G*` at every node, with `v` from the discrete gradient.
/// Outside the cut-off's positivity set the value is zero.
pub fn auxiliary_g(u: &ScalarField, theta: &CapillaryAngle, p: &CutoffParams, variant: AuxiliaryVariant) -> AuxiliaryValues {
    let grid = u.grid();
    let grad = discrete_gradient(u, theta);
    let mut values = Vec::with_capacity(grid.node_count());
    let mut argmax = None;
    let mut max = f64::NEG_INFINITY;
    for k in 0..grid.node_count() {
        let x = grid.point(k);
        let uk = u.values()[k];
        let q = match variant {
            AuxiliaryVariant::G => cutoff_q(&x, p),
            AuxiliaryVariant::GStar => cutoff_q_star(&x, uk, p),
        };
        let psi = q.max(0.0).powi(2);
        let v = capillary_area_element_v(grad.at(k), theta);
        let g = varphi(uk, p.m) * psi * v.ln();
        values.push(g);
        if q > 0.0 && g > max {
            max = g;
            argmax = Some(k);
        }
    }
    AuxiliaryValues { values, argmax, max }
}

/// Membership of `theta` in the admissible range for dimension `n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AngleRangeResult {
    pub n: usize,
    pub theta: f64,
    pub in_range: bool,
    /// `(3n - 7)(n - 1) / (4 (n - 2)^2)`; infinite for `n = 2`.
    pub threshold: f64,
    pub margin: f64,
}

pub fn angle_range_threshold(n: usize) -> f64 {
    if n <= 2 {
        return f64::INFINITY;
    }
    let nf = n as f64;
    (3.0 * nf - 7.0) * (nf - 1.0) / (4.0 * (nf - 2.0).powi(2))
}

/// `cos^2(theta) < threshold(n)`; always admissible for `n` in `{2, 3}`.
pub fn angle_in_u(n: usize, theta: &CapillaryAngle) -> Result<AngleRangeResult> {
    if n < 2 {
        return Err(Error::BadDimension(n));
    }
    let threshold = angle_range_threshold(n);
    let margin = threshold - theta.cos().powi(2);
    Ok(AngleRangeResult { n, theta: theta.radians(), in_range: n <= 3 || margin > 0.0, threshold, margin })
}

/// `C_theta = (1/36) |cos| (1 - sin) / (1 + |cos| / sin)`.
pub fn constant_c_theta(theta: &CapillaryAngle) -> f64 {
    let c = theta.cos().abs();
    let s = theta.sin();
    c * (1.0 - s) / (36.0 * (1.0 + c / s))
}

/// `exp(C1 + C2 M/r + C3 M^2/r^2) / (1 - |cos|)`.
pub fn gradient_bound(m: f64, r: f64, theta: &CapillaryAngle, c1: f64, c2: f64, c3: f64) -> Result<f64> {
    if !(r > 0.0) || !(m >= r) {
        return Err(Error::InvalidParameter(format!("need r > 0 and M >= r, got M = {m}, r = {r}")));
    }
    let t = m / r;
    Ok((c1 + c2 * t + c3 * t * t).exp() / (1.0 - theta.cos().abs()))
}

/// Gradient state at a maximum point, in the rotated frame where `Du = u_n e_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientState {
    pub n: usize,
    pub theta: CapillaryAngle,
    pub u_n: f64,
    pub w: f64,
    pub v: f64,
    pub b: Vec<f64>,
    pub eps0: f64,
}

impl CoefficientState {
    pub fn new(n: usize, theta: CapillaryAngle, u_n: f64, b: Vec<f64>, eps0: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::BadDimension(n));
        }
        if b.len() != n {
            return Err(Error::InvalidParameter(format!("b has {} components, expected {n}", b.len())));
        }
        if (norm(&b) - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter("b must be a unit vector".into()));
        }
        if !(u_n > 0.0 && u_n.is_finite()) {
            return Err(Error::InvalidParameter(format!("u_n must be positive, got {u_n}")));
        }
        if !(0.0..1.0).contains(&eps0) {
            return Err(Error::InvalidParameter(format!("eps0 must lie in [0, 1), got {eps0}")));
        }
        let w = area_element_w(&[u_n]);
        let v = w + theta.cos().abs() * u_n * b[n - 1];
        Ok(CoefficientState { n, theta, u_n, w, v, b, eps0 })
    }
}

/// Coefficients of the second-derivative terms at a maximum point.
#[derive(Clone, Debug, PartialEq)]
pub struct ProofCoefficients {
    pub c_nn: f64,
    pub c_ni: f64,
    /// `C_ii` for `i = 1..n-1`, in the order of `b`.
    pub c_ii: Vec<f64>,
    /// `B_i` for the `n - 2` tangential indices other than the one with largest `b_i^2`.
    pub b_chain: Vec<f64>,
    /// Lower bound of the chain; `None` when `n - 2 + eps0 = 0`.
    pub script_b: Option<f64>,
}

/// Evaluates the coefficients with log-correction constant `c` (zero gives
/// the leading-order terms).
pub fn proof_coefficients(s: &CoefficientState, c: f64) -> Result<ProofCoefficients> {
    let cos = s.theta.cos().abs();
    let (w, v, un) = (s.w, s.v, s.u_n);
    let bn = s.b[s.n - 1];
    let logv = v.ln();
    if c != 0.0 && !(v * logv > 0.0) {
        return Err(Error::DegenerateState(format!("v log v = {} must be positive", v * logv)));
    }
    let corr = |x: f64| if c == 0.0 { 0.0 } else { c * x };
    let lead = (un + cos * w * bn) * un;
    let c_nn = lead / w.powi(3) - corr(1.0 / (v * logv));
    let c_ni = lead / w - corr(w / logv);
    let c_ii = s.b[..s.n - 1]
        .iter()
        .map(|bi| (w * (w + cos * un * bn) - cos * cos * w * w * bi * bi) / v - corr(w / logv))
        .collect();

    let mut tangential: Vec<f64> = s.b[..s.n - 1].to_vec();
    tangential.sort_by(|a, b| (b * b).total_cmp(&(a * a)));
    let b1 = tangential.first().copied().unwrap_or(0.0);
    let k = s.n as f64 - 2.0 + s.eps0;
    let head = 1.0 + cos * bn - cos * cos * b1 * b1;
    let b_chain = tangential.iter().skip(1).map(|bi| 1.0 + cos * bn - cos * cos * bi * bi + k * head).collect();
    Ok(ProofCoefficients { c_nn, c_ni, c_ii, b_chain, script_b: script_b(s.n, &s.theta, s.eps0) })
}

/// `-(n-1+e)^2 / (4(n-2+e)) + (n-1+e) - (n-2+e) cos^2`.
pub fn script_b(n: usize, theta: &CapillaryAngle, eps0: f64) -> Option<f64> {
    let a = n as f64 - 1.0 + eps0;
    let k = n as f64 - 2.0 + eps0;
    if k <= 0.0 {
        return None;
    }
    Some(-a * a / (4.0 * k) + a - k * theta.cos().powi(2))
}

/// `((n-1+e)/(n-2+e)) (1 - (n-1+e)/(4(n-2+e)))`: the bound on `cos^2` that makes `script_B > 0`.
pub fn further_condition_lhs(n: usize, eps0: f64) -> Option<f64> {
    let a = n as f64 - 1.0 + eps0;
    let k = n as f64 - 2.0 + eps0;
    if k <= 0.0 {
        return None;
    }
    Some(a / k * (1.0 - a / (4.0 * k)))
}

/// Midpoint of the sub-interval of `(0, 1)` where the further condition
/// holds, located by bisection; `None` if it holds nowhere.
pub fn choose_eps0(n: usize, theta: &CapillaryAngle) -> Option<f64> {
    let c2 = theta.cos().powi(2);
    let holds = |e: f64| further_condition_lhs(n, e).is_some_and(|l| l > c2);
    let (lo_ok, hi_ok) = (holds(1e-15), holds(1.0 - 1e-15));
    match (lo_ok, hi_ok) {
        (true, true) => Some(0.5),
        (false, false) => None,
        _ => {
            // The left-hand side is monotone in eps, so there is one crossing.
            let (mut a, mut b) = (0.0, 1.0);
            while b - a > 1e-12 {
                let mid = 0.5 * (a + b);
                if holds(mid) == lo_ok {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            let root = 0.5 * (a + b);
            Some(if lo_ok { 0.5 * root } else { 0.5 * (root + 1.0) })
        }
    }
}

/// Per-node `g^{1j} v_j` on the capillary face, where `v = W + cos u_1` is
/// evaluated from nodal gradients, `v_1` by a second-order one-sided
/// difference and tangential derivatives by centered differences (one-sided
/// next to the corners).
pub fn conormal_orthogonality_residuals(u: &ScalarField, theta: &CapillaryAngle) -> Vec<(usize, f64)> {
    let grid = u.grid();
    let h = grid.spacing();
    let grad = discrete_gradient(u, theta);
    let v: Vec<f64> = (0..grid.node_count()).map(|k| capillary_area_element_v(grad.at(k), theta)).collect();
    let vat = |i: usize, j: usize| v[grid.index(i, j)];
    grid.nodes_of(NodeClass::CapillaryBoundary)
        .into_iter()
        .map(|k| {
            let (_, j) = grid.lattice(k);
            let v1 = if grid.nodes_x1() >= 3 {
                (-3.0 * vat(0, j) + 4.0 * vat(1, j) - vat(2, j)) / (2.0 * h)
            } else {
                (vat(1, j) - vat(0, j)) / h
            };
            let g = grad.at(k);
            let w2 = 1.0 + dot(g, g);
            let mut val = v1 * (1.0 - g[0] * g[0] / w2);
            if grid.dim() == 2 {
                // Corner nodes take their normal slope from the side-face data rather
                // than the closure, so keep the tangential stencil on the capillary face.
                let cap = |jj: usize| grid.class(grid.index(0, jj)) == NodeClass::CapillaryBoundary;
                let v2 = if cap(j - 1) && cap(j + 1) {
                    (vat(0, j + 1) - vat(0, j - 1)) / (2.0 * h)
                } else if !cap(j - 1) && cap(j + 1) && cap(j + 2) {
                    (-3.0 * vat(0, j) + 4.0 * vat(0, j + 1) - vat(0, j + 2)) / (2.0 * h)
                } else if cap(j - 1) && !cap(j + 1) && j >= 2 && cap(j - 2) {
                    (3.0 * vat(0, j) - 4.0 * vat(0, j - 1) + vat(0, j - 2)) / (2.0 * h)
                } else {
                    (vat(0, j + 1) - vat(0, j - 1)) / (2.0 * h)
                };
                val -= g[0] * g[1] * v2 / w2;
            }
            (k, val)
        })
        .collect()
}

/// `max |g^{1j} v_j|` over capillary nodes.
pub fn verify_conormal_orthogonality(u: &ScalarField, theta: &CapillaryAngle) -> f64 {
    conormal_orthogonality_residuals(u, theta).into_iter().map(|(_, r)| r.abs()).fold(0.0, f64::max)
}

/// `(W^2 delta_ij - u_i u_j) u_ij - H W^3` at interior nodes from centered
/// differences.
pub fn nondivergence_residual(u: &ScalarField, spec: &ProblemSpec) -> Result<Vec<(usize, f64)>> {
    if !u.same_lattice(&spec.grid) {
        return Err(Error::ShapeMismatch);
    }
    let grid = spec.grid.as_ref();
    let h = grid.spacing();
    let h2 = h * h;
    let out = grid
        .nodes_of(NodeClass::Interior)
        .into_iter()
        .map(|k| {
            let (i, j) = grid.lattice(k);
            let c = u.at(i, j);
            let u1 = (u.at(i + 1, j) - u.at(i - 1, j)) / (2.0 * h);
            let u11 = (u.at(i + 1, j) - 2.0 * c + u.at(i - 1, j)) / h2;
            let (u2, u22, u12) = if grid.dim() == 2 {
                (
                    (u.at(i, j + 1) - u.at(i, j - 1)) / (2.0 * h),
                    (u.at(i, j + 1) - 2.0 * c + u.at(i, j - 1)) / h2,
                    (u.at(i + 1, j + 1) - u.at(i + 1, j - 1) - u.at(i - 1, j + 1) + u.at(i - 1, j - 1)) / (4.0 * h2),
                )
            } else {
                (0.0, 0.0, 0.0)
            };
            let w2 = 1.0 + u1 * u1 + u2 * u2;
            let lhs = (w2 - u1 * u1) * u11 + (w2 - u2 * u2) * u22 - 2.0 * u1 * u2 * u12;
            let hk = spec.mean_curvature.at(&grid.point(k));
            (k, lhs - hk * w2.powf(1.5))
        })
        .collect();
    Ok(out)
}
