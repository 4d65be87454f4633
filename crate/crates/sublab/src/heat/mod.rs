//! Explicit heat evolution on masked domains.
//!
//! The state heats from 0 with Dirichlet value 1 held at the boundary-layer
//! cell centers, under the generator-Δ normalization (`∂φ/∂t = Δφ`). The
//! temperature at `(t, x)` equals the probability that the Brownian walk of
//! the stochastic module has hit the boundary by time `t`, which is what
//! turns heat-content bounds into exit-time statements.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::AnalyticTestFunction;
use crate::geometry::{CellClass, DomainMask};

/// Temperatures on the interior of a masked domain at a fixed time.
#[derive(Debug, Clone)]
pub struct HeatState {
    mask: std::sync::Arc<DomainMask>,
    /// Full-grid buffer: interior cells evolve, boundary cells hold 1,
    /// exterior cells stay 0 and are never read.
    temps: Vec<f64>,
    time: f64,
}

impl HeatState {
    /// Cold start: interior at 0, boundary at 1.
    pub fn new(mask: std::sync::Arc<DomainMask>) -> Result<Self> {
        if mask.interior_count() == 0 {
            return Err(Error::EmptyInterior);
        }
        let temps = mask
            .classes()
            .iter()
            .map(|&c| if c == CellClass::Boundary { 1.0 } else { 0.0 })
            .collect();
        Ok(Self { mask, temps, time: 0.0 })
    }

    pub fn mask(&self) -> &DomainMask {
        &self.mask
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Temperature at a cell (1 on the boundary layer, 0 outside).
    pub fn temp(&self, ix: usize, iy: usize) -> f64 {
        self.temps[ix + self.mask.resolution()[0] * iy]
    }

    pub fn min_interior_temp(&self) -> f64 {
        self.mask
            .classes()
            .iter()
            .zip(&self.temps)
            .filter(|(&c, _)| c == CellClass::Interior)
            .map(|(_, &t)| t)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_interior_temp(&self) -> f64 {
        self.mask
            .classes()
            .iter()
            .zip(&self.temps)
            .filter(|(&c, _)| c == CellClass::Interior)
            .map(|(_, &t)| t)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Forward-Euler 5-point evolution to the requested time with an
/// automatically chosen stable step.
pub fn evolve(state: &HeatState, until: f64) -> Result<HeatState> {
    let h = state.mask.spacing();
    evolve_with_dt(state, until, h * h / 5.0)
}

/// Forward-Euler evolution with an explicit step. Steps above the `h^2/4`
/// stability limit are an error, never a silent instability.
pub fn evolve_with_dt(state: &HeatState, until: f64, dt: f64) -> Result<HeatState> {
    if until < state.time {
        return Err(Error::InvalidParameter(format!(
            "cannot evolve backwards: {} -> {until}",
            state.time
        )));
    }
    let h = state.mask.spacing();
    let limit = h * h / 4.0;
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(Error::StabilityViolation { dt, limit });
    }
    let span = until - state.time;
    if span == 0.0 {
        return Ok(state.clone());
    }
    let n_steps = (span / dt).ceil().max(1.0) as u64;
    let step = span / n_steps as f64;
    let lambda = step / (h * h);

    let mask = std::sync::Arc::clone(&state.mask);
    let [nx, ny] = mask.resolution();
    let classes = mask.classes();
    let mut cur = state.temps.clone();
    let mut next = cur.clone();

    for k in 0..n_steps {
        // Row-parallel stencil reading only the previous buffer: results are
        // independent of the thread count.
        let min_new = next
            .par_chunks_mut(nx)
            .enumerate()
            .map(|(iy, row)| {
                let mut row_min = f64::INFINITY;
                if iy == 0 || iy == ny - 1 {
                    return row_min;
                }
                let base = iy * nx;
                for ix in 0..nx {
                    let idx = base + ix;
                    if classes[idx] != CellClass::Interior {
                        continue;
                    }
                    let u = cur[idx];
                    let sum = cur[idx - 1] + cur[idx + 1] + cur[idx - nx] + cur[idx + nx];
                    let v = u + lambda * (sum - 4.0 * u);
                    row[ix] = v;
                    if v < row_min {
                        row_min = v;
                    }
                }
                row_min
            })
            .reduce(|| f64::INFINITY, f64::min);
        std::mem::swap(&mut cur, &mut next);
        // Saturated domains stay saturated (monotone heating); skip the
        // remaining steps once the interior is uniformly at temperature 1.
        if 1.0 - min_new < 1e-13 {
            let _ = k;
            break;
        }
    }

    Ok(HeatState { mask, temps: cur, time: until })
}

/// `h^2 * Σ` of the interior temperatures.
pub fn heat_content(state: &HeatState) -> f64 {
    let h = state.mask.spacing();
    let content: f64 = state
        .mask
        .classes()
        .iter()
        .zip(&state.temps)
        .filter(|(&c, _)| c == CellClass::Interior)
        .map(|(_, &t)| t)
        .sum();
    content * h * h
}

/// Heat content at time `eps` normalized by `sqrt(eps) * |∂Ω|`.
#[derive(Debug, Clone, Copy)]
pub struct Lemma7Ratio {
    pub ratio: f64,
    pub content: f64,
    pub boundary_length: f64,
    pub eps: f64,
}

/// Evolves a cold start to time `eps` and returns
/// `content / (sqrt(eps) * |∂Ω|)`. The hypothesis that every removed
/// component has boundary length at least `sqrt(eps)` is checked first and
/// violations name the offending component.
pub fn lemma7_ratio(mask: &DomainMask, eps: f64) -> Result<Lemma7Ratio> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps = {eps} must be positive")));
    }
    let info = mask.boundary_info().ok_or_else(|| {
        Error::InvalidParameter("mask carries no boundary-length information".into())
    })?;
    let required = eps.sqrt();
    for (index, &len) in info.removed.iter().enumerate() {
        if len < required {
            return Err(Error::HypothesisViolated { index, length: len, required });
        }
    }
    let state = HeatState::new(std::sync::Arc::new(mask.clone()))?;
    let heated = evolve(&state, eps)?;
    let content = heat_content(&heated);
    let boundary_length = info.total();
    Ok(Lemma7Ratio { ratio: content / (required * boundary_length), content, boundary_length, eps })
}

/// Runs [`lemma7_ratio`] at the given resolution and at half resolution and
/// Richardson-extrapolates the first-order boundary error away.
pub fn lemma7_ratio_extrapolated(mask: &DomainMask, eps: f64) -> Result<Lemma7Ratio> {
    let fine = lemma7_ratio(mask, eps)?;
    let [nx, ny] = mask.resolution();
    let coarse_mask = mask.rebuild([nx / 2, ny / 2])?;
    let coarse = lemma7_ratio(&coarse_mask, eps)?;
    let ratio = 2.0 * fine.ratio - coarse.ratio;
    Ok(Lemma7Ratio {
        ratio,
        content: 2.0 * fine.content - coarse.content,
        boundary_length: fine.boundary_length,
        eps,
    })
}

/// Outcome of the half-heating (Markov inequality) check.
#[derive(Debug, Clone)]
pub struct HalfHeatingReport {
    pub passed: bool,
    pub min_temp: f64,
    pub time: f64,
    pub tolerance: f64,
    pub oscillation: (f64, f64),
    pub laplacian_sup: f64,
}

/// Checks that a domain on which `f` oscillates by at most `4(c+1) eps`
/// (with `1 <= Δf <= c`) heats to at least `1/2` everywhere by time
/// `(8c+8) eps`. The tolerance is twice the grid-bias estimate obtained by
/// repeating the evolution at half resolution.
pub fn half_heating_check(
    mask: &DomainMask,
    f: &AnalyticTestFunction,
    eps: f64,
) -> Result<HalfHeatingReport> {
    if f.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: f.dim() });
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps = {eps} must be positive")));
    }
    // Sample the constraint and the oscillation on interior cell centers.
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut hi_cell = (0usize, 0usize);
    let mut lo_cell = (0usize, 0usize);
    let mut lap_sup = f64::NEG_INFINITY;
    for (ix, iy) in mask.interior_cells() {
        let (x, y) = mask.cell_center(ix, iy);
        let v = f.value(&[x, y]);
        if v < lo {
            lo = v;
            lo_cell = (ix, iy);
        }
        if v > hi {
            hi = v;
            hi_cell = (ix, iy);
        }
        let lap = f.laplacian(&[x, y]);
        if lap < 1.0 - 1e-9 {
            return Err(Error::ConstraintViolated {
                ix,
                iy,
                detail: format!("laplacian {lap} < 1"),
            });
        }
        lap_sup = lap_sup.max(lap);
    }
    if !lap_sup.is_finite() {
        return Err(Error::EmptyInterior);
    }
    let c = lap_sup;
    let allowed = 4.0 * (c + 1.0) * eps;
    if hi - lo > allowed {
        return Err(Error::ConstraintViolated {
            ix: hi_cell.0.max(lo_cell.0),
            iy: hi_cell.1.max(lo_cell.1),
            detail: format!(
                "oscillation {} exceeds 4(c+1)eps = {allowed} (min at {:?}, max at {:?})",
                hi - lo,
                lo_cell,
                hi_cell
            ),
        });
    }

    let t = (8.0 * c + 8.0) * eps;
    let min_at = |m: &DomainMask| -> Result<f64> {
        let state = HeatState::new(std::sync::Arc::new(m.clone()))?;
        Ok(evolve(&state, t)?.min_interior_temp())
    };
    let min_fine = min_at(mask)?;
    let [nx, ny] = mask.resolution();
    let tolerance = match mask.rebuild([nx / 2, ny / 2]) {
        Ok(coarse) if coarse.interior_count() > 0 => {
            2.0 * (min_fine - min_at(&coarse)?).abs()
        }
        _ => 0.05,
    };
    Ok(HalfHeatingReport {
        passed: min_fine >= 0.5 - tolerance,
        min_temp: min_fine,
        time: t,
        tolerance,
        oscillation: (lo, hi),
        laplacian_sup: c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::catalog;
    use std::sync::Arc;

    #[test]
    fn evolve_to_current_time_is_identity() {
        let mask = Arc::new(DomainMask::disk(1.0, 64).unwrap());
        let state = HeatState::new(mask).unwrap();
        let same = evolve(&state, 0.0).unwrap();
        assert_eq!(state.temps, same.temps);
    }

    #[test]
    fn stability_violation_is_an_error() {
        let mask = Arc::new(DomainMask::disk(1.0, 64).unwrap());
        let state = HeatState::new(mask).unwrap();
        let h = state.mask().spacing();
        assert!(matches!(
            evolve_with_dt(&state, 0.1, h * h),
            Err(Error::StabilityViolation { .. })
        ));
    }

    #[test]
    fn unit_square_saturates() {
        let mask = Arc::new(DomainMask::rectangle([(0.0, 1.0), (0.0, 1.0)], [48, 48]).unwrap());
        let state = HeatState::new(Arc::clone(&mask)).unwrap();
        let heated = evolve(&state, 2.0).unwrap();
        // Slowest-mode decay exp(-2 pi^2 t) is ~1e-17 at t = 2.
        assert!(1.0 - heated.min_interior_temp() < 1e-3);
        assert!((heat_content(&heated) - mask.area()).abs() < 1e-3 * mask.area());
    }

    #[test]
    fn maximum_principle_and_monotonicity() {
        let mask = Arc::new(DomainMask::disk(1.0, 96).unwrap());
        let state = HeatState::new(mask).unwrap();
        let mut prev = state.clone();
        for k in 1..=5 {
            let t = k as f64 * 2e-3;
            let next = evolve(&state, t).unwrap();
            assert!(next.min_interior_temp() >= 0.0);
            assert!(next.max_interior_temp() <= 1.0);
            // Monotone heating, cell by cell.
            for (a, b) in prev.temps.iter().zip(&next.temps) {
                assert!(b + 1e-12 >= *a);
            }
            assert!(heat_content(&next) + 1e-12 >= heat_content(&prev));
            prev = next;
        }
    }

    #[test]
    fn symmetric_mask_stays_symmetric() {
        let mask = Arc::new(DomainMask::disk(1.0, 64).unwrap());
        let state = HeatState::new(mask).unwrap();
        let heated = evolve(&state, 5e-3).unwrap();
        let n = heated.mask().resolution()[0];
        for iy in 0..n {
            for ix in 0..n {
                let a = heated.temp(ix, iy);
                let b = heated.temp(n - 1 - ix, iy);
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cold_start_has_zero_content() {
        let mask = Arc::new(DomainMask::disk(1.0, 64).unwrap());
        let state = HeatState::new(mask).unwrap();
        assert_eq!(heat_content(&state), 0.0);
    }

    #[test]
    fn lemma7_hypothesis_violation_names_component() {
        let mask = DomainMask::disk(1.0, 64)
            .unwrap()
            .with_boundary_info(crate::geometry::BoundaryInfo {
                outer: 2.0 * std::f64::consts::PI,
                removed: vec![0.5, 1e-4],
            });
        match lemma7_ratio(&mask, 1e-2) {
            Err(Error::HypothesisViolated { index, .. }) => assert_eq!(index, 1),
            other => panic!("expected hypothesis violation, got {other:?}"),
        }
    }

    #[test]
    fn lemma7_saturates_for_huge_eps() {
        let mask = DomainMask::disk(1.0, 48).unwrap();
        let r = lemma7_ratio(&mask, 50.0).unwrap();
        // Content caps at |Ω| = pi, so the ratio collapses.
        assert!(r.ratio < 0.1, "ratio {}", r.ratio);
        assert!((r.content - std::f64::consts::PI).abs() < 0.1);
    }

    #[test]
    fn half_heating_rejects_wide_oscillation() {
        // On a big ball the oscillation of any 1 <= Δf function dwarfs
        // 4(c+1)eps, so the precondition must fail loudly.
        let mask = DomainMask::disk(1.0, 64).unwrap();
        let f = catalog::radial_extremal(2).unwrap();
        match half_heating_check(&mask, &f, 1e-4) {
            Err(Error::ConstraintViolated { detail, .. }) => {
                assert!(detail.contains("oscillation"));
            }
            other => panic!("expected oscillation rejection, got {other:?}"),
        }
    }

    #[test]
    fn half_heating_trivially_passes_for_large_eps() {
        let mask = DomainMask::disk(0.5, 64).unwrap();
        let f = catalog::radial_extremal(2).unwrap();
        let report = half_heating_check(&mask, &f, 10.0).unwrap();
        assert!(report.passed, "min temp {}", report.min_temp);
        assert!(report.min_temp > 0.999);
    }
}
