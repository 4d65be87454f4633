use crate::error::{Error, Result};
use crate::experiments::fit::{fit_scaling, ScalingFit};
use crate::experiments::report::{apply_ratio_band, ReportRow, VerificationReport};
use crate::field::{catalog, AnalyticTestFunction, GridField};
use crate::geometry::sublevel_measure;

/// Fits the sublevel exponent of the 1-D monomial family: the measure of
/// `{|u| <= t}` for `u = x^k / k!` scales like `t^(1/k)`.
pub fn verify_vdcorput(k: u32, t_grid: &[f64], resolution: usize) -> Result<VerificationReport> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("van der Corput check needs k >= 2, got {k}")));
    }
    let f = catalog::monomial_1d(k)?;
    let g = GridField::sample(&f, &[(-1.0, 1.0)], &[resolution])?;
    let abs = g.map(f64::abs);
    let mut report = VerificationReport::new(format!("vdcorput:k={k}"));
    let mut pairs = Vec::new();
    for &t in t_grid {
        if !(t > 0.0) {
            return Err(Error::InvalidParameter(format!("level {t} must be positive")));
        }
        let measure = sublevel_measure(&abs, t).value;
        let rhs = t.powf(1.0 / k as f64);
        report.rows.push(ReportRow::new(t, measure, rhs, measure > 0.0));
        if measure > 0.0 {
            pairs.push((t, measure));
        }
    }
    apply_ratio_band(&mut report.rows, 2.0);
    let target = 1.0 / k as f64;
    if pairs.len() >= 3 {
        let fit = fit_scaling(&pairs)?;
        let ok = (fit.exponent - target).abs() <= 0.03;
        report.push_note(format!(
            "fitted exponent {:.5} vs 1/k = {target:.5} (tolerance 0.03)",
            fit.exponent
        ));
        report.fit = Some(fit);
        report.pass = ok;
    } else {
        report.push_note("fit absent: fewer than 3 usable points".into());
        report.fit = None;
    }
    report.finalize();
    Ok(report)
}

/// Normalizes quadratic coefficients to `2^n a_1 ... a_n = 1`, returning
/// the scale that was applied (1 when already normalized).
pub fn normalize_carbery(a: &[f64]) -> Result<(Vec<f64>, f64)> {
    if a.is_empty() || a.iter().any(|&ai| !(ai > 0.0)) {
        return Err(Error::InvalidParameter("coefficients must be positive".into()));
    }
    let n = a.len() as f64;
    let det = 2.0f64.powf(n) * a.iter().product::<f64>();
    let lambda = det.powf(-1.0 / n);
    Ok((a.iter().map(|&ai| ai * lambda).collect(), lambda))
}

/// Sublevel scaling of the normalized quadratic family: measures of the
/// ellipsoids `{u <= s}` must scale like `s^(n/2)` with one constant across
/// the grid.
pub fn verify_carbery(a: &[f64], s_grid: &[f64], resolution: usize) -> Result<VerificationReport> {
    let (a, lambda) = normalize_carbery(a)?;
    let n = a.len();
    let f = catalog::quadratic(&a)?;
    let s_max = s_grid.iter().copied().fold(0.0f64, f64::max);
    if !(s_max > 0.0) {
        return Err(Error::InvalidParameter("need positive levels".into()));
    }
    let bounds: Vec<(f64, f64)> = a
        .iter()
        .map(|&ai| {
            let half = (s_max / ai).sqrt() * 1.05;
            (-half, half)
        })
        .collect();
    let g = GridField::sample(&f, &bounds, &vec![resolution; n])?;
    let mut report = VerificationReport::new(format!("carbery:{}", f.id()));
    if (lambda - 1.0).abs() > 1e-12 {
        report.push_note(format!("coefficients rescaled by {lambda} to meet 2^n prod a = 1"));
    }
    let mut pairs = Vec::new();
    for &s in s_grid {
        let measure = sublevel_measure(&g, s).value;
        let rhs = s.powf(n as f64 / 2.0);
        report.rows.push(ReportRow::new(s, measure, rhs, measure > 0.0));
        if measure > 0.0 {
            pairs.push((s, measure));
        }
    }
    apply_ratio_band(&mut report.rows, 2.0);
    let target = n as f64 / 2.0;
    let fit = fit_scaling(&pairs)?;
    let ok = (fit.exponent - target).abs() <= 0.05;
    report.push_note(format!(
        "fitted exponent {:.5} vs n/2 = {target} (tolerance 0.05)",
        fit.exponent
    ));
    report.fit = Some(fit);
    report.pass = ok;
    report.finalize();
    Ok(report)
}

/// Negative control for the quadratic scaling: with `det D^2 u` far below 1
/// the sublevel set at a fixed level dwarfs the normalized one. Returns
/// `(eccentric measure, normalized reference measure)` at level `s`.
pub fn eccentric_control(eps: f64, s: f64, resolution: usize) -> Result<(f64, f64)> {
    let ecc = catalog::eccentric(eps)?;
    let half_x = (s / 1.0f64).sqrt() * 1.05;
    let half_y = (s / eps).sqrt() * 1.05;
    let g = GridField::sample(&ecc, &[(-half_x, half_x), (-half_y, half_y)], &[
        resolution / 4,
        resolution,
    ])?;
    let control = sublevel_measure(&g, s).value;

    let reference = catalog::quadratic(&[0.5, 0.5])?;
    let half = (s / 0.5).sqrt() * 1.05;
    let gr = GridField::sample(&reference, &[(-half, half), (-half, half)], &[
        resolution, resolution,
    ])?;
    let ref_measure = sublevel_measure(&gr, s).value;
    Ok((control, ref_measure))
}

fn check_laplacian_at_least_one(f: &AnalyticTestFunction, g: &GridField) -> Result<()> {
    let mut p = vec![0.0; g.dim()];
    for idx in 0..g.len() {
        g.center(idx, &mut p);
        let lap = f.laplacian(&p);
        if lap < 1.0 - 1e-9 {
            let nx = g.resolution()[0];
            return Err(Error::ConstraintViolated {
                ix: idx % nx,
                iy: idx / nx,
                detail: format!("laplacian {lap} < 1 at {p:?}"),
            });
        }
    }
    Ok(())
}

/// Oscillation and pointwise sphere bounds for functions with `Δf >= 1`:
/// the oscillation over the ball of radius `r` is at least `r^2/(2n)`, and
/// the sphere maximum dominates `(r^2 - |y|^2)/(2n) + f(y)`.
///
/// Returns the oscillation report and the pointwise report separately.
pub fn verify_prop2_prop4(
    f: &AnalyticTestFunction,
    r_grid: &[f64],
    y_list: &[(f64, f64)],
    resolution: usize,
) -> Result<(VerificationReport, VerificationReport)> {
    if f.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: f.dim() });
    }
    let r_max = r_grid.iter().copied().fold(0.0f64, f64::max);
    if !(r_max > 0.0) {
        return Err(Error::InvalidParameter("need positive radii".into()));
    }
    let half = r_max * 1.05;
    let g = GridField::sample(f, &[(-half, half), (-half, half)], &[resolution, resolution])?;
    check_laplacian_at_least_one(f, &g)?;
    let h = g.spacing()[0];
    let n = 2.0;

    let mut cells: Vec<(f64, f64, f64)> = Vec::with_capacity(g.len());
    let mut p = [0.0f64; 2];
    for idx in 0..g.len() {
        g.center(idx, &mut p);
        cells.push((p[0], p[1], g.samples()[idx]));
    }

    let mut osc_report = VerificationReport::new(format!("prop2:{}", f.id()));
    for &r in r_grid {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut grad_max = 0.0f64;
        for &(x, y, v) in &cells {
            if x * x + y * y <= r * r {
                lo = lo.min(v);
                hi = hi.max(v);
                grad_max = grad_max.max(f.gradient_norm(&[x, y]));
            }
        }
        if !lo.is_finite() {
            return Err(Error::InvalidParameter(format!("radius {r} captures no cells")));
        }
        let osc = hi - lo;
        let bound = r * r / (2.0 * n);
        let tol = 2.0 * h * grad_max;
        osc_report.rows.push(ReportRow::new(r, osc, bound, osc >= bound - tol));
    }
    osc_report.push_note("tolerance per row: 2 h max|grad f| over the ball".into());
    osc_report.finalize();

    let mut pt_report = VerificationReport::new(format!("prop4:{}", f.id()));
    for &r in r_grid {
        for &(yx, yy) in y_list {
            let y_norm2 = yx * yx + yy * yy;
            if y_norm2 >= r * r {
                continue;
            }
            let mut shell_max = f64::NEG_INFINITY;
            let mut grad_max = 0.0f64;
            for &(x, y, v) in &cells {
                let rho = (x * x + y * y).sqrt();
                if (rho - r).abs() <= h {
                    shell_max = shell_max.max(v);
                    grad_max = grad_max.max(f.gradient_norm(&[x, y]));
                }
            }
            if !shell_max.is_finite() {
                continue;
            }
            let bound = (r * r - y_norm2) / (2.0 * n) + f.value(&[yx, yy]);
            let tol = 2.0 * h * grad_max;
            pt_report.rows.push(ReportRow::new(r, shell_max, bound, shell_max >= bound - tol));
        }
    }
    pt_report.push_note("rows ordered by (r, y); tolerance 2 h max|grad f| on the shell".into());
    pt_report.finalize();
    Ok((osc_report, pt_report))
}

/// Midpoint quadrature of `∫ |grad f| / |f|^alpha` with one adaptive
/// refinement pass near the zero set.
#[derive(Debug, Clone, Copy)]
pub struct GradientIntegral {
    pub value: f64,
    /// Area of the excluded near-zero cells times the bound of the
    /// integrand on them (with `|f|` floored at `delta = h^2`).
    pub truncation_estimate: f64,
    pub divergence_suspected: bool,
}

pub fn gradient_integral(
    f: &AnalyticTestFunction,
    alpha: f64,
    bounds: [(f64, f64); 2],
    resolution: usize,
) -> Result<GradientIntegral> {
    if f.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: f.dim() });
    }
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} must be positive")));
    }
    if resolution < 2 {
        return Err(Error::InvalidParameter("resolution must be >= 2".into()));
    }
    let hx = (bounds[0].1 - bounds[0].0) / resolution as f64;
    let hy = (bounds[1].1 - bounds[1].0) / resolution as f64;
    let h = hx.max(hy);
    let delta = h * h;

    let mut value = 0.0;
    let mut truncation = 0.0;
    // Bound on |grad f| over a cell of side s centered where the gradient
    // was sampled: linear growth estimated from the Hessian when present.
    let grad_bound = |x: f64, y: f64, s: f64| -> f64 {
        let g = f.gradient_norm(&[x, y]);
        match f.hessian(&[x, y]) {
            Some(hess) => {
                let frob = hess.iter().map(|v| v * v).sum::<f64>().sqrt();
                g + frob * s
            }
            None => g + 2.0 * s,
        }
    };

    let mut eval_cell = |x: f64, y: f64, sx: f64, sy: f64| {
        let area = sx * sy;
        let fv = f.value(&[x, y]).abs();
        if fv < delta {
            let bound = grad_bound(x, y, sx.max(sy)) / delta.powf(alpha);
            truncation += area * bound;
        } else {
            value += area * f.gradient_norm(&[x, y]) / fv.powf(alpha);
        }
    };

    for iy in 0..resolution {
        let y = bounds[1].0 + (iy as f64 + 0.5) * hy;
        for ix in 0..resolution {
            let x = bounds[0].0 + (ix as f64 + 0.5) * hx;
            if f.value(&[x, y]).abs() < h {
                // Refine once: 2x2 subcells at the quarter points.
                for (dx, dy) in [(-0.25, -0.25), (0.25, -0.25), (-0.25, 0.25), (0.25, 0.25)] {
                    eval_cell(x + dx * hx, y + dy * hy, hx / 2.0, hy / 2.0);
                }
            } else {
                eval_cell(x, y, hx, hy);
            }
        }
    }

    Ok(GradientIntegral {
        value,
        truncation_estimate: truncation,
        divergence_suspected: truncation > 0.1 * value,
    })
}

/// Empirical flatness certificate: the largest `kappa` such that
/// `|{ |f| >= kappa }| * sup|f| >= kappa` for every family member, found by
/// bisection. A positive certificate witnesses that functions with
/// `Δf >= 1` cannot be uniformly tiny without paying in sup norm.
pub fn verify_thm3(
    family: &[AnalyticTestFunction],
    probe_grid: &[f64],
    resolution: usize,
) -> Result<VerificationReport> {
    if family.is_empty() {
        return Err(Error::InvalidParameter("family must be nonempty".into()));
    }
    let mut sampled = Vec::new();
    for f in family {
        if f.dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: f.dim() });
        }
        let g = GridField::sample(f, &[(0.0, 1.0), (0.0, 1.0)], &[resolution, resolution])?;
        check_laplacian_at_least_one(f, &g)?;
        let abs = g.map(f64::abs);
        let sup = abs.max_sample();
        sampled.push((f.id().to_string(), abs, sup));
    }
    // p(kappa) = |{|f| >= kappa}| * sup|f|, nonincreasing in kappa.
    let product = |abs: &GridField, sup: f64, kappa: f64| -> f64 {
        let below = sublevel_measure(abs, kappa).value;
        let total = (abs.bounds()[0].1 - abs.bounds()[0].0)
            * (abs.bounds()[1].1 - abs.bounds()[1].0);
        // Count of |f| >= kappa uses the closed complement of the strict
        // sublevel; the single-level difference is below grid precision.
        (total - below) * sup
    };
    let family_min = |kappa: f64| -> f64 {
        sampled
            .iter()
            .map(|(_, abs, sup)| product(abs, *sup, kappa))
            .fold(f64::INFINITY, f64::min)
    };

    let mut report = VerificationReport::new("thm3");
    for &kappa in probe_grid {
        let lhs = family_min(kappa);
        report.rows.push(ReportRow::new(kappa, lhs, kappa, lhs >= kappa));
    }

    let (mut lo, mut hi) = (1e-4, 1.0);
    let certificate = if family_min(lo) < lo {
        0.0
    } else {
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if family_min(mid) >= mid {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    report.push_note(format!("empirical certificate c = {certificate}"));
    for (id, _, sup) in &sampled {
        report.push_note(format!("member {id}: sup|f| = {sup}"));
    }
    report.pass = certificate > 0.0;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::fit::geometric_grid;

    #[test]
    fn vdcorput_k2_exponent() {
        let grid = geometric_grid(1e-5, 1e-2, 25).unwrap();
        let rep = verify_vdcorput(2, &grid, 1 << 21).unwrap();
        let fit = rep.fit.unwrap();
        assert!((fit.exponent - 0.5).abs() <= 0.03, "exponent {}", fit.exponent);
        assert!(rep.pass);
    }

    #[test]
    fn vdcorput_k3_exponent() {
        let grid = geometric_grid(1e-5, 1e-2, 25).unwrap();
        let rep = verify_vdcorput(3, &grid, 1 << 21).unwrap();
        let fit = rep.fit.unwrap();
        assert!((fit.exponent - 1.0 / 3.0).abs() <= 0.03, "exponent {}", fit.exponent);
    }

    #[test]
    fn vdcorput_single_level_has_no_fit() {
        let rep = verify_vdcorput(2, &[1e-3], 1 << 16).unwrap();
        assert!(rep.fit.is_none());
        assert_eq!(rep.rows.len(), 1);
    }

    #[test]
    fn carbery_normalized_family_scales_linearly() {
        let grid = geometric_grid(1e-3, 1e-1, 17).unwrap();
        let rep = verify_carbery(&[0.5, 0.5], &grid, 768).unwrap();
        let fit = rep.fit.unwrap();
        assert!((fit.exponent - 1.0).abs() <= 0.05, "exponent {}", fit.exponent);
        assert!(rep.pass);
    }

    #[test]
    fn carbery_rescales_unnormalized_input() {
        let grid = geometric_grid(1e-3, 1e-1, 17).unwrap();
        let rep = verify_carbery(&[1.0, 1.0], &grid, 512).unwrap();
        assert!(rep.notes.iter().any(|n| n.contains("rescaled")));
        assert!(rep.pass);
    }

    #[test]
    fn carbery_rejects_nonconvex() {
        assert!(verify_carbery(&[1.0, -1.0], &[0.1, 0.2, 0.4], 64).is_err());
    }

    #[test]
    fn eccentric_control_dwarfs_reference() {
        let (control, reference) = eccentric_control(1e-3, 0.5, 512).unwrap();
        assert!(
            control >= 10.0 * reference,
            "control {control} vs reference {reference}"
        );
    }

    #[test]
    fn prop2_sharp_for_radial_extremal() {
        let f = catalog::radial_extremal(2).unwrap();
        let (osc, _) = verify_prop2_prop4(&f, &[0.25, 0.5, 1.0], &[(0.0, 0.0)], 512).unwrap();
        assert!(osc.pass);
        for row in &osc.rows {
            // Sharp: oscillation equals r^2/4 up to the stated tolerance.
            let r = row.parameter;
            assert!((row.lhs - r * r / 4.0).abs() <= 2.0 * (2.1 / 512.0) * r + 1e-9);
        }
    }

    #[test]
    fn prop2_passes_with_slack_for_sum_sq() {
        let f = catalog::sum_sq();
        let (osc, pt) =
            verify_prop2_prop4(&f, &[0.5, 1.0], &[(0.25, 0.0), (0.0, 0.5)], 384).unwrap();
        assert!(osc.pass && pt.pass);
        // Oscillation of x^2+y^2 over the r-ball is r^2, four times the bound.
        for row in &osc.rows {
            assert!(row.ratio > 3.5, "ratio {}", row.ratio);
        }
    }

    #[test]
    fn prop2_rejects_functions_without_the_constraint() {
        let f = catalog::skew();
        assert!(matches!(
            verify_prop2_prop4(&f, &[0.5], &[(0.0, 0.0)], 64),
            Err(Error::ConstraintViolated { .. })
        ));
    }

    #[test]
    fn harmonic_perturbation_preserves_prop2() {
        let f = catalog::harmonic_probe(0.05, 3).unwrap();
        let (osc, _) = verify_prop2_prop4(&f, &[0.5, 1.0], &[(0.0, 0.0)], 384).unwrap();
        assert!(osc.pass);
    }

    #[test]
    fn gradient_integral_constant_is_zero() {
        let f = catalog::constant(2, 1.0);
        let gi = gradient_integral(&f, 1.0, [(0.0, 1.0), (0.0, 1.0)], 128).unwrap();
        assert_eq!(gi.value, 0.0);
        assert!(!gi.divergence_suspected);
    }

    #[test]
    fn gradient_integral_converges_below_critical_alpha() {
        let f = catalog::sum_sq();
        let coarse = gradient_integral(&f, 1.0, [(0.0, 1.0), (0.0, 1.0)], 256).unwrap();
        let fine = gradient_integral(&f, 1.0, [(0.0, 1.0), (0.0, 1.0)], 512).unwrap();
        assert!(!coarse.divergence_suspected);
        assert!(!fine.divergence_suspected);
        let change = (fine.value - coarse.value).abs() / coarse.value;
        assert!(change < 0.02, "change {change}");
    }

    #[test]
    fn gradient_integral_flags_divergence_above_critical_alpha() {
        let f = catalog::sum_sq();
        let coarse = gradient_integral(&f, 1.6, [(0.0, 1.0), (0.0, 1.0)], 256).unwrap();
        let fine = gradient_integral(&f, 1.6, [(0.0, 1.0), (0.0, 1.0)], 512).unwrap();
        assert!(fine.divergence_suspected, "truncation {} vs value {}", fine.truncation_estimate, fine.value);
        let growth = (fine.value - coarse.value) / coarse.value;
        assert!(growth > 0.1, "growth {growth}");
    }

    #[test]
    fn thm3_certificate_positive_and_deterministic() {
        let family = vec![
            catalog::radial_extremal(2).unwrap(),
            catalog::harmonic_probe(1.0, 3).unwrap(),
        ];
        let probes = [0.01, 0.05, 0.1];
        let a = verify_thm3(&family, &probes, 256).unwrap();
        let b = verify_thm3(&family, &probes, 256).unwrap();
        assert!(a.pass);
        assert_eq!(a.notes[0], b.notes[0]);
        // radial_extremal on the unit square certifies kappa around
        // 0.5 / (1 + pi/2); presence of other members can only lower it.
        let c: f64 = a.notes[0].split('=').nth(1).unwrap().trim().parse().unwrap();
        assert!(c > 0.01, "certificate {c}");
    }

    #[test]
    fn thm3_rejects_empty_family_and_bad_members() {
        assert!(verify_thm3(&[], &[0.1], 64).is_err());
        let family = vec![catalog::skew()];
        assert!(matches!(
            verify_thm3(&family, &[0.1], 64),
            Err(Error::ConstraintViolated { .. })
        ));
    }
}
