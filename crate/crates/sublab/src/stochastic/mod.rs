//! Brownian-motion machinery: exit times, the Feynman–Kac representation,
//! the inradius exit-time bound, and the reflection-principle tail.
//!
//! Walks use the generator-Δ convention: increments have variance `2 dt`
//! per coordinate, so the expected exit time from a ball of radius `r`
//! is `r^2 / (2n)` and `E τ <= b - a` holds for functions with `Δψ >= 1`
//! squeezed between `a` and `b`. The reflection-principle helpers use the
//! standard variance-`t` normalization instead; the two conventions never
//! mix within one operation.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{AnalyticTestFunction, GridField};
use crate::geometry::{distance_features, DomainMask};

/// How walkers decide they have left the domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Absorption {
    /// Use the mask's analytic signed distance when present, the cell
    /// classification otherwise.
    #[default]
    Auto,
    /// Always use the cell classification; matches the heat solver's
    /// discrete geometry exactly.
    ForceCells,
}

/// Simulation parameters. Increments have per-coordinate variance `2 dt`.
#[derive(Debug, Clone, Copy)]
pub struct WalkConfig {
    pub dt: f64,
    pub max_time: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub absorption: Absorption,
}

impl WalkConfig {
    pub fn new(dt: f64, max_time: f64, n_paths: usize, seed: u64) -> Self {
        Self { dt, max_time, n_paths, seed, absorption: Absorption::Auto }
    }

    fn validate(&self, mask: &DomainMask) -> Result<()> {
        if !(self.dt > 0.0) || !(self.max_time > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "dt = {} and max_time = {} must be positive",
                self.dt, self.max_time
            )));
        }
        if self.n_paths == 0 {
            return Err(Error::InvalidParameter("n_paths must be >= 1".into()));
        }
        // Cell-based walks must not leap the boundary layer in one step.
        let cell_based =
            self.absorption == Absorption::ForceCells || mask.signed_distance().is_none();
        if cell_based {
            let limit = mask.spacing() * mask.spacing() / 4.0;
            if self.dt > limit {
                return Err(Error::StabilityViolation { dt: self.dt, limit });
            }
        }
        Ok(())
    }
}

/// Monte Carlo estimate of an expected boundary-hitting time.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExitTimeEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub absorbed_fraction: f64,
    pub n_paths: usize,
}

impl ExitTimeEstimate {
    /// Paths truncated at `max_time` contribute `max_time`, so when any
    /// path survives the mean is only a lower bound.
    pub fn is_lower_bound(&self) -> bool {
        self.absorbed_fraction < 1.0
    }
}

/// The absorbing geometry a walker sees.
enum WalkDomain<'a> {
    Analytic(&'a crate::geometry::SignedDistanceFn),
    Cells { mask: &'a DomainMask, edt: &'a GridField },
}

impl<'a> WalkDomain<'a> {
    fn new(mask: &'a DomainMask, absorption: Absorption) -> Self {
        match (absorption, mask.signed_distance()) {
            (Absorption::Auto, Some(sd)) => WalkDomain::Analytic(sd.as_ref()),
            _ => WalkDomain::Cells { mask, edt: mask.interior_distance() },
        }
    }

    fn inside(&self, x: f64, y: f64) -> bool {
        match self {
            WalkDomain::Analytic(sd) => sd(x, y) > 0.0,
            WalkDomain::Cells { mask, .. } => mask.is_interior_point(x, y),
        }
    }

    /// Distance to the absorbing boundary, clamped nonnegative; only used
    /// for the within-step bridge test, so cell-scale error is acceptable
    /// in the cell-based variant.
    fn distance(&self, x: f64, y: f64) -> f64 {
        match self {
            WalkDomain::Analytic(sd) => sd(x, y).max(0.0),
            WalkDomain::Cells { edt, .. } => bilinear(edt, x, y).max(0.0),
        }
    }
}

/// Bilinear interpolation of a 2-D grid field at a physical point, clamped
/// to the sampled lattice.
fn bilinear(g: &GridField, x: f64, y: f64) -> f64 {
    let nx = g.resolution()[0];
    let ny = g.resolution()[1];
    let hx = g.spacing()[0];
    let hy = g.spacing()[1];
    let fx = ((x - g.bounds()[0].0) / hx - 0.5).clamp(0.0, (nx - 1) as f64);
    let fy = ((y - g.bounds()[1].0) / hy - 0.5).clamp(0.0, (ny - 1) as f64);
    let ix = (fx as usize).min(nx - 2);
    let iy = (fy as usize).min(ny - 2);
    let tx = fx - ix as f64;
    let ty = fy - iy as f64;
    let v00 = g.at2(ix, iy);
    let v10 = g.at2(ix + 1, iy);
    let v01 = g.at2(ix, iy + 1);
    let v11 = g.at2(ix + 1, iy + 1);
    v00 * (1.0 - tx) * (1.0 - ty) + v10 * tx * (1.0 - ty) + v01 * (1.0 - tx) * ty + v11 * tx * ty
}

fn path_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

struct PathOutcome {
    time: f64,
    absorbed: bool,
    exit: [f64; 2],
    /// Left-rule integral of a scalar along the path, when requested.
    integral: f64,
}

/// One Euler walk with the half-space Brownian-bridge crossing test. The
/// bridge catches excursions between sampled points, leaving an O(dt) bias
/// instead of the O(sqrt(dt)) bias of endpoint checks alone.
fn simulate_path(
    domain: &WalkDomain,
    x0: (f64, f64),
    cfg: &WalkConfig,
    stream: u64,
    integrand: Option<&dyn Fn(f64, f64) -> f64>,
) -> PathOutcome {
    let mut rng = path_rng(cfg.seed, stream);
    let sigma = (2.0 * cfg.dt).sqrt();
    let max_steps = (cfg.max_time / cfg.dt).ceil() as u64;
    let (mut x, mut y) = x0;
    let mut d_prev = domain.distance(x, y);
    let mut integral = 0.0;

    for k in 1..=max_steps {
        if let Some(f) = integrand {
            integral += f(x, y) * cfg.dt;
        }
        let gx: f64 = rng.sample(StandardNormal);
        let gy: f64 = rng.sample(StandardNormal);
        let nx = x + sigma * gx;
        let ny = y + sigma * gy;
        if !domain.inside(nx, ny) {
            let exit = locate_exit(domain, (x, y), (nx, ny));
            return PathOutcome { time: k as f64 * cfg.dt, absorbed: true, exit, integral };
        }
        let d_new = domain.distance(nx, ny);
        // P(bridge crosses a boundary at distances d_prev, d_new) with
        // per-coordinate variance 2 dt: exp(-d_prev d_new / dt).
        let expo = -d_prev * d_new / cfg.dt;
        if expo > -36.0 {
            let u: f64 = rng.gen();
            if u < expo.exp() {
                let exit = nearest_boundary(domain, (0.5 * (x + nx), 0.5 * (y + ny)));
                return PathOutcome { time: k as f64 * cfg.dt, absorbed: true, exit, integral };
            }
        }
        x = nx;
        y = ny;
        d_prev = d_new;
    }
    PathOutcome {
        time: cfg.max_time,
        absorbed: false,
        exit: [x, y],
        integral,
    }
}

/// Bisects the step segment for the boundary crossing.
fn locate_exit(domain: &WalkDomain, a: (f64, f64), b: (f64, f64)) -> [f64; 2] {
    let (mut ax, mut ay) = a;
    let (mut bx, mut by) = b;
    for _ in 0..30 {
        let mx = 0.5 * (ax + bx);
        let my = 0.5 * (ay + by);
        if domain.inside(mx, my) {
            ax = mx;
            ay = my;
        } else {
            bx = mx;
            by = my;
        }
    }
    [0.5 * (ax + bx), 0.5 * (ay + by)]
}

/// Projects an interior point onto the boundary along the distance
/// gradient; used for bridge absorptions, where the crossing point is not
/// on the step segment.
fn nearest_boundary(domain: &WalkDomain, p: (f64, f64)) -> [f64; 2] {
    let (x, y) = p;
    let d = domain.distance(x, y);
    if d == 0.0 {
        return [x, y];
    }
    let eps = 1e-6 * d.max(1e-6);
    let gx = (domain.distance(x + eps, y) - domain.distance(x - eps, y)) / (2.0 * eps);
    let gy = (domain.distance(x, y + eps) - domain.distance(x, y - eps)) / (2.0 * eps);
    let norm = (gx * gx + gy * gy).sqrt();
    if norm < 1e-12 {
        return [x, y];
    }
    // The distance gradient points inward; walk against it by d.
    [x - d * gx / norm, y - d * gy / norm]
}

fn run_paths(
    domain: &WalkDomain,
    x0: (f64, f64),
    cfg: &WalkConfig,
    stream_base: u64,
    integrand: Option<&(dyn Fn(f64, f64) -> f64 + Sync)>,
) -> Vec<PathOutcome> {
    // Per-path RNG streams keyed by (seed, stream_base + path): outcomes
    // are collected in path order, so reductions are independent of the
    // rayon thread count.
    (0..cfg.n_paths)
        .into_par_iter()
        .map(|p| {
            simulate_path(
                domain,
                x0,
                cfg,
                stream_base + p as u64,
                integrand.map(|f| f as &dyn Fn(f64, f64) -> f64),
            )
        })
        .collect()
}

fn mean_stderr(values: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let mean = values.clone().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, f64::INFINITY);
    }
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

fn require_interior(mask: &DomainMask, x0: (f64, f64)) -> Result<()> {
    if !mask.is_interior_point(x0.0, x0.1) {
        return Err(Error::NotInterior { point: vec![x0.0, x0.1] });
    }
    Ok(())
}

/// Expected boundary-hitting time of Brownian motion started at `x0`.
pub fn exit_times(
    mask: &DomainMask,
    x0: (f64, f64),
    cfg: &WalkConfig,
) -> Result<ExitTimeEstimate> {
    cfg.validate(mask)?;
    require_interior(mask, x0)?;
    let domain = WalkDomain::new(mask, cfg.absorption);
    let outcomes = run_paths(&domain, x0, cfg, 0, None);
    let (mean, stderr) = mean_stderr(outcomes.iter().map(|o| o.time), cfg.n_paths);
    let absorbed = outcomes.iter().filter(|o| o.absorbed).count();
    Ok(ExitTimeEstimate {
        mean,
        stderr,
        absorbed_fraction: absorbed as f64 / cfg.n_paths as f64,
        n_paths: cfg.n_paths,
    })
}

/// Monte Carlo evaluation of the representation
/// `u(x0) = E u(ω(τ)) - E ∫ Δu(ω(t)) dt`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FeynmanKacEstimate {
    /// `E f(exit) - E ∫ Δf dt`; should equal `f(x0)`.
    pub estimate: f64,
    pub stderr: f64,
    pub boundary_term: f64,
    pub integral_term: f64,
    pub absorbed_fraction: f64,
    /// Set when paths hit `max_time` without absorbing; the estimate is
    /// then biased and flagged rather than silently trusted.
    pub biased: bool,
}

pub fn feynman_kac(
    f: &AnalyticTestFunction,
    mask: &DomainMask,
    x0: (f64, f64),
    cfg: &WalkConfig,
) -> Result<FeynmanKacEstimate> {
    if f.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: f.dim() });
    }
    cfg.validate(mask)?;
    require_interior(mask, x0)?;
    let domain = WalkDomain::new(mask, cfg.absorption);
    let integrand = move |x: f64, y: f64| f.laplacian(&[x, y]);
    let outcomes = run_paths(&domain, x0, cfg, 0, Some(&integrand));
    let values: Vec<f64> = outcomes
        .iter()
        .map(|o| f.value(&[o.exit[0], o.exit[1]]) - o.integral)
        .collect();
    let (estimate, stderr) = mean_stderr(values.iter().copied(), cfg.n_paths);
    let boundary_term =
        outcomes.iter().map(|o| f.value(&[o.exit[0], o.exit[1]])).sum::<f64>()
            / cfg.n_paths as f64;
    let integral_term = outcomes.iter().map(|o| o.integral).sum::<f64>() / cfg.n_paths as f64;
    let absorbed = outcomes.iter().filter(|o| o.absorbed).count();
    Ok(FeynmanKacEstimate {
        estimate,
        stderr,
        boundary_term,
        integral_term,
        absorbed_fraction: absorbed as f64 / cfg.n_paths as f64,
        biased: absorbed < cfg.n_paths,
    })
}

/// Supremum of measured exit times against the inradius bound
/// `sup E τ <= 4 inrad^2`.
#[derive(Debug, Clone, Serialize)]
pub struct MaxExitTimeBound {
    pub sup_mean: f64,
    pub sup_stderr: f64,
    pub inradius: f64,
    pub bound: f64,
    pub holds: bool,
    pub per_probe: Vec<ExitTimeEstimate>,
}

pub fn max_exit_time_bound(
    mask: &DomainMask,
    cfg: &WalkConfig,
    probe_points: &[(f64, f64)],
) -> Result<MaxExitTimeBound> {
    cfg.validate(mask)?;
    if probe_points.is_empty() {
        return Err(Error::InvalidParameter("need at least one probe point".into()));
    }
    let domain = WalkDomain::new(mask, cfg.absorption);
    let mut per_probe = Vec::with_capacity(probe_points.len());
    for (i, &p) in probe_points.iter().enumerate() {
        require_interior(mask, p)?;
        let outcomes = run_paths(&domain, p, cfg, (i * cfg.n_paths) as u64, None);
        let (mean, stderr) = mean_stderr(outcomes.iter().map(|o| o.time), cfg.n_paths);
        let absorbed = outcomes.iter().filter(|o| o.absorbed).count();
        per_probe.push(ExitTimeEstimate {
            mean,
            stderr,
            absorbed_fraction: absorbed as f64 / cfg.n_paths as f64,
            n_paths: cfg.n_paths,
        });
    }
    let (sup_idx, sup) = per_probe
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.mean.total_cmp(&b.1.mean))
        .expect("nonempty");
    let inradius = distance_features(mask)?.inradius;
    let bound = 4.0 * inradius * inradius;
    let sup_mean = sup.mean;
    let sup_stderr = per_probe[sup_idx].stderr;
    Ok(MaxExitTimeBound {
        sup_mean,
        sup_stderr,
        inradius,
        bound,
        holds: sup_mean <= bound + 3.0 * sup_stderr,
        per_probe,
    })
}

/// Closed-form reflection-principle tail for standard (variance `t`)
/// one-dimensional Brownian motion:
/// `P(max_{s<=t} B(s) >= d) = 2 P(B(t) >= d)`.
pub fn reflection_tail(d: f64, t: f64) -> Result<f64> {
    if d < 0.0 || !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("need d >= 0 and t > 0, got d={d}, t={t}")));
    }
    Ok(libm::erfc(d / (2.0 * t).sqrt()))
}

/// Monte Carlo companion to [`reflection_tail`]: simulates the standard
/// variance-`t` walk and counts barrier crossings, using the exact
/// Brownian-bridge crossing probability within each step (for a flat
/// barrier in 1-D the bridge test removes all discretization bias).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TailEstimate {
    pub probability: f64,
    pub stderr: f64,
    pub n_paths: usize,
}

pub fn reflection_tail_mc(
    d: f64,
    t: f64,
    n_steps: usize,
    n_paths: usize,
    seed: u64,
) -> Result<TailEstimate> {
    if d < 0.0 || !(t > 0.0) || n_steps == 0 || n_paths == 0 {
        return Err(Error::InvalidParameter(
            "need d >= 0, t > 0, n_steps >= 1, n_paths >= 1".into(),
        ));
    }
    let dt = t / n_steps as f64;
    let sigma = dt.sqrt();
    let hits: Vec<bool> = (0..n_paths)
        .into_par_iter()
        .map(|p| {
            let mut rng = path_rng(seed, p as u64);
            let mut pos = 0.0f64;
            for _ in 0..n_steps {
                let g: f64 = rng.sample(StandardNormal);
                let next = pos + sigma * g;
                if next >= d {
                    return true;
                }
                // Exact bridge crossing for standard variance: the exponent
                // is -2 (d-a)(d-b) / dt.
                let expo = -2.0 * (d - pos) * (d - next) / dt;
                if expo > -36.0 {
                    let u: f64 = rng.gen();
                    if u < expo.exp() {
                        return true;
                    }
                }
                pos = next;
            }
            false
        })
        .collect();
    let k = hits.iter().filter(|&&h| h).count();
    let p = k as f64 / n_paths as f64;
    let stderr = (p * (1.0 - p) / n_paths as f64).sqrt();
    Ok(TailEstimate { probability: p, stderr, n_paths })
}

/// JSON row for exported exit-time estimates.
#[derive(Debug, Clone, Serialize)]
pub struct ExitTimeRow {
    pub x0: [f64; 2],
    pub mean: f64,
    pub stderr: f64,
    pub absorbed_fraction: f64,
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
}

impl ExitTimeRow {
    pub fn new(x0: (f64, f64), est: &ExitTimeEstimate, cfg: &WalkConfig) -> Self {
        Self {
            x0: [x0.0, x0.1],
            mean: est.mean,
            stderr: est.stderr,
            absorbed_fraction: est.absorbed_fraction,
            dt: cfg.dt,
            n_paths: est.n_paths,
            seed: cfg.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_time_near_boundary_is_tiny() {
        let mask = DomainMask::disk(1.0, 128).unwrap();
        let h = mask.spacing();
        let cfg = WalkConfig::new(1e-5, 1.0, 2000, 42);
        let est = exit_times(&mask, (1.0 - h, 0.0), &cfg).unwrap();
        assert_eq!(est.absorbed_fraction, 1.0);
        // Closed form (1 - (1-h)^2)/4 ~ h/2.
        assert!(est.mean < 1.5 * h, "mean {} vs h {h}", est.mean);
    }

    #[test]
    fn exit_time_rejects_exterior_start() {
        let mask = DomainMask::disk(1.0, 64).unwrap();
        let cfg = WalkConfig::new(1e-4, 1.0, 10, 1);
        assert!(matches!(
            exit_times(&mask, (1.2, 0.0), &cfg),
            Err(Error::NotInterior { .. })
        ));
    }

    #[test]
    fn cell_based_walks_enforce_dt_limit() {
        let mask = DomainMask::disk(1.0, 64).unwrap();
        let mut cfg = WalkConfig::new(0.1, 1.0, 10, 1);
        cfg.absorption = Absorption::ForceCells;
        assert!(matches!(
            exit_times(&mask, (0.0, 0.0), &cfg),
            Err(Error::StabilityViolation { .. })
        ));
    }

    #[test]
    fn identical_seeds_are_bit_identical_across_thread_counts() {
        let mask = DomainMask::disk(1.0, 64).unwrap();
        let cfg = WalkConfig::new(1e-3, 2.0, 4000, 7);
        let a = exit_times(&mask, (0.3, 0.1), &cfg).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| exit_times(&mask, (0.3, 0.1), &cfg).unwrap());
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }

    #[test]
    fn constant_functions_are_reproduced_exactly_in_expectation() {
        let mask = DomainMask::disk(1.0, 64).unwrap();
        let f = crate::field::catalog::constant(2, 3.25);
        let cfg = WalkConfig::new(1e-3, 50.0, 500, 3);
        let est = feynman_kac(&f, &mask, (0.1, 0.2), &cfg).unwrap();
        assert_eq!(est.integral_term, 0.0);
        assert!((est.estimate - 3.25).abs() < 1e-12);
    }

    #[test]
    fn reflection_tail_closed_form_values() {
        assert_eq!(reflection_tail(0.0, 1.0).unwrap(), 1.0);
        // d = sqrt(t): 2 (1 - Phi(1)).
        let v = reflection_tail(2.0, 4.0).unwrap();
        assert!((v - 0.31731050786291404).abs() < 1e-12, "{v}");
        // t -> 0 with d > 0.
        assert!(reflection_tail(0.5, 1e-12).unwrap() < 1e-15);
        assert!(reflection_tail(-1.0, 1.0).is_err());
    }

    #[test]
    fn reflection_tail_mc_matches_closed_form() {
        let exact = reflection_tail(1.0, 1.0).unwrap();
        let est = reflection_tail_mc(1.0, 1.0, 16, 200_000, 11).unwrap();
        assert!(
            (est.probability - exact).abs() < 3.0 * est.stderr,
            "mc {} vs exact {exact} (stderr {})",
            est.probability,
            est.stderr
        );
    }
}
