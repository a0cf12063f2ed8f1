//! Rescalings `u_R(x) = u(R x) / R`.

use std::sync::Arc;

use crate::capillary::ScalarField;
use crate::error::{Error, Result};
use crate::geometry::HalfSpaceGrid;

fn check_scale(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("blow-down scale must be positive, got {r}")))
    }
}

/// Blow-down onto the node-aligned lattice of spacing `h / R`: node `k` of
/// the result sits at `x_k / R` and carries `u(x_k) / R`, so no
/// interpolation is involved.
pub fn blow_down(u: &ScalarField, r: f64) -> Result<ScalarField> {
    check_scale(r)?;
    let g = u.grid();
    let (n1, n2) = g.cells();
    let grid = Arc::new(HalfSpaceGrid::from_counts(g.dim(), g.spacing() / r, n1, n2));
    ScalarField::new(grid, u.values().iter().map(|v| v / r).collect())
}

/// Bilinear (linear in one dimension) interpolant of `u` at `p`.
pub fn interpolate(u: &ScalarField, p: &[f64]) -> Result<f64> {
    let g = u.grid();
    if p.len() != g.dim() || !g.contains(p) {
        return Err(Error::OutOfExtent(p.to_vec()));
    }
    let h = g.spacing();
    let (n1, n2) = g.cells();
    let locate = |s: f64, cells: usize| -> (usize, f64) {
        let i = ((s / h).floor().max(0.0) as usize).min(cells.saturating_sub(1));
        (i, (s / h - i as f64).clamp(0.0, 1.0))
    };
    let (i, a) = locate(p[0], n1);
    if g.dim() == 1 {
        return Ok((1.0 - a) * u.at(i, 0) + a * u.at(i + 1, 0));
    }
    let (j, b) = locate(p[1] + g.half_width(), n2);
    Ok((1.0 - a) * (1.0 - b) * u.at(i, j)
        + a * (1.0 - b) * u.at(i + 1, j)
        + (1.0 - a) * b * u.at(i, j + 1)
        + a * b * u.at(i + 1, j + 1))
}

/// Blow-down sampled on an arbitrary target lattice by interpolating `u` at
/// `R x` for every target node `x`.
pub fn blow_down_onto(u: &ScalarField, r: f64, target: Arc<HalfSpaceGrid>) -> Result<ScalarField> {
    check_scale(r)?;
    if target.dim() != u.grid().dim() {
        return Err(Error::ShapeMismatch);
    }
    let values = (0..target.node_count())
        .map(|k| {
            let x: Vec<f64> = target.point(k).iter().map(|c| c * r).collect();
            interpolate(u, &x).map(|v| v / r)
        })
        .collect::<Result<Vec<_>>>()?;
    ScalarField::new(target, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_grid;
    use crate::solver::discrete_gradient;
    use crate::CapillaryAngle;

    fn affine(grid: &Arc<HalfSpaceGrid>) -> ScalarField {
        ScalarField::from_fn(grid.clone(), |x| -0.7 * x[0] + 0.4 * x.get(1).copied().unwrap_or(0.0) + 3.0).unwrap()
    }

    #[test]
    fn affine_field_keeps_its_gradient() {
        let grid = Arc::new(build_grid(2, 0.25, 4.0, 4.0).unwrap());
        let u = affine(&grid);
        let target = Arc::new(build_grid(2, 0.1, 1.0, 1.0).unwrap());
        let ur = blow_down_onto(&u, 3.0, target.clone()).unwrap();
        for k in 0..target.node_count() {
            let x = target.point(k);
            assert!((ur.values()[k] - (-0.7 * x[0] + 0.4 * x[1] + 1.0)).abs() < 1e-13);
        }
        let aligned = blow_down(&u, 2.0).unwrap();
        assert_eq!(aligned.grid().spacing(), 0.125);
        for k in 0..aligned.grid().node_count() {
            let x = aligned.grid().point(k);
            assert!((aligned.values()[k] - (-0.7 * x[0] + 0.4 * x[1] + 1.5)).abs() < 1e-13);
        }
    }

    #[test]
    fn unit_scale_is_identity() {
        let grid = Arc::new(build_grid(2, 0.2, 1.0, 1.0).unwrap());
        let u = ScalarField::from_fn(grid.clone(), |x| (x[0] * 3.0).sin() + x[1] * x[1]).unwrap();
        assert_eq!(blow_down(&u, 1.0).unwrap(), u);
        assert!(blow_down_onto(&u, 1.0, grid).unwrap().max_abs_diff(&u) < 1e-15);
    }

    #[test]
    fn composition_matches_product_scale() {
        let grid = Arc::new(build_grid(2, 0.25, 8.0, 8.0).unwrap());
        let u = affine(&grid);
        let target = Arc::new(build_grid(2, 0.125, 1.0, 1.0).unwrap());
        let mid = Arc::new(build_grid(2, 0.25, 4.0, 4.0).unwrap());
        let once = blow_down_onto(&u, 6.0, target.clone()).unwrap();
        let twice = blow_down_onto(&blow_down_onto(&u, 2.0, mid).unwrap(), 3.0, target).unwrap();
        assert!(once.max_abs_diff(&twice) < 1e-13);
        let aligned = blow_down(&blow_down(&u, 2.0).unwrap(), 3.0).unwrap();
        let direct = blow_down(&u, 6.0).unwrap();
        assert!(aligned.max_abs_diff(&direct) < 1e-14);
    }

    #[test]
    fn quadratic_gradient_scales_second_order() {
        // u = |x|^2: u_2(x) = 2|x|^2, so Du_2(x) = 4x = Du(2x).
        let theta = CapillaryAngle::new(std::f64::consts::FRAC_PI_2).unwrap();
        let mut errs = Vec::new();
        for h in [0.1, 0.05] {
            let src = Arc::new(build_grid(2, h, 2.0, 2.0).unwrap());
            let u = ScalarField::from_fn(src, |x| x[0] * x[0] + x[1] * x[1]).unwrap();
            let target = Arc::new(build_grid(2, h, 1.0, 1.0).unwrap());
            let ur = blow_down_onto(&u, 2.0, target.clone()).unwrap();
            let grad = discrete_gradient(&ur, &theta);
            let err = target
                .nodes_of(crate::NodeClass::Interior)
                .into_iter()
                .map(|k| {
                    let x = target.point(k);
                    (grad.at(k)[0] - 4.0 * x[0]).abs().max((grad.at(k)[1] - 4.0 * x[1]).abs())
                })
                .fold(0.0, f64::max);
            errs.push(err);
        }
        // Centered differences of a quadratic are exact; interpolation at
        // lattice points R x is exact too.
        assert!(errs.iter().all(|e| *e < 1e-10), "{errs:?}");
    }

    #[test]
    fn interpolation_outside_extent_fails() {
        let grid = Arc::new(build_grid(2, 0.25, 1.0, 1.0).unwrap());
        let u = affine(&grid);
        let target = Arc::new(build_grid(2, 0.25, 1.0, 1.0).unwrap());
        assert!(matches!(blow_down_onto(&u, 2.0, target), Err(Error::OutOfExtent(_))));
        assert!(blow_down(&u, 0.0).is_err());
    }

    #[test]
    fn interpolation_between_nodes() {
        let grid = Arc::new(build_grid(2, 0.5, 1.0, 1.0).unwrap());
        let u = ScalarField::from_fn(grid, |x| x[0] * x[1]).unwrap();
        // Bilinear interpolation reproduces x1 x2 exactly.
        assert!((interpolate(&u, &[0.3, -0.7]).unwrap() - 0.3 * -0.7).abs() < 1e-15);
        let line = Arc::new(build_grid(1, 0.5, 1.0, 0.0).unwrap());
        let v = ScalarField::from_fn(line, |x| 2.0 * x[0]).unwrap();
        assert!((interpolate(&v, &[0.8]).unwrap() - 1.6).abs() < 1e-15);
    }
}
