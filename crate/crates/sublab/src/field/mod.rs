//! Analytic test functions and grid sampling primitives.
//!
//! Every inequality the crate verifies quantifies over an
//! [`AnalyticTestFunction`]: a function with exact value, gradient,
//! Laplacian, and (optionally) Hessian evaluators. The catalog holds the
//! families the verification harnesses exercise, from the 1-D monomials
//! behind the classical `t^(1/k)` estimate to the harmonic probes with
//! `Δu ≡ 1` and tunable oscillation.

mod fd;
mod grid;

pub use fd::{fd_operators, FdOperators};
pub use grid::GridField;

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

type ValueFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type VectorFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// A scalar function with exact derivative evaluators.
///
/// Immutable after construction; all evaluators are pure, so instances can
/// be shared freely between threads.
#[derive(Clone)]
pub struct AnalyticTestFunction {
    id: String,
    dim: usize,
    value: Arc<ValueFn>,
    gradient: Arc<VectorFn>,
    laplacian: Arc<ValueFn>,
    /// Row-major `dim x dim` symmetric matrix, when available.
    hessian: Option<Arc<VectorFn>>,
}

impl fmt::Debug for AnalyticTestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnalyticTestFunction")
            .field("id", &self.id)
            .field("dim", &self.dim)
            .finish()
    }
}

impl AnalyticTestFunction {
    pub fn new(
        id: impl Into<String>,
        dim: usize,
        value: Arc<ValueFn>,
        gradient: Arc<VectorFn>,
        laplacian: Arc<ValueFn>,
        hessian: Option<Arc<VectorFn>>,
    ) -> Self {
        Self { id: id.into(), dim, value, gradient, laplacian, hessian }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        (self.value)(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.dim);
        (self.gradient)(x)
    }

    pub fn gradient_norm(&self, x: &[f64]) -> f64 {
        self.gradient(x).iter().map(|g| g * g).sum::<f64>().sqrt()
    }

    pub fn laplacian(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        (self.laplacian)(x)
    }

    pub fn has_hessian(&self) -> bool {
        self.hessian.is_some()
    }

    /// Row-major Hessian, or `None` for functions that do not provide one.
    pub fn hessian(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.hessian.as_ref().map(|h| h(x))
    }

    /// Shifts the function by a constant: `f - offset`. Derivatives are
    /// unchanged.
    pub fn shifted(&self, offset: f64) -> AnalyticTestFunction {
        let value = Arc::clone(&self.value);
        Self {
            id: format!("{}-{}", self.id, offset),
            dim: self.dim,
            value: Arc::new(move |x| value(x) - offset),
            gradient: Arc::clone(&self.gradient),
            laplacian: Arc::clone(&self.laplacian),
            hessian: self.hessian.clone(),
        }
    }
}

/// Catalog constructors. Each function carries exact derivative evaluators;
/// Hessians are analytic, never finite-differenced.
pub mod catalog {
    use super::*;
    use num_complex::Complex64;

    fn factorial(k: u32) -> f64 {
        (1..=k).map(|i| i as f64).product()
    }

    /// `u(x) = x^k / k!` on the line, the extremal family for the `t^(1/k)`
    /// sublevel estimate.
    pub fn monomial_1d(k: u32) -> Result<AnalyticTestFunction> {
        if k < 1 {
            return Err(Error::InvalidParameter(format!("monomial degree k = {k} < 1")));
        }
        if k > 30 {
            return Err(Error::InvalidParameter(format!("monomial degree k = {k} too large")));
        }
        let kf = factorial(k);
        let k1 = if k >= 1 { factorial(k - 1) } else { 1.0 };
        let k2 = if k >= 2 { factorial(k - 2) } else { 1.0 };
        let second = move |x: f64| if k >= 2 { x.powi(k as i32 - 2) / k2 } else { 0.0 };
        Ok(AnalyticTestFunction::new(
            format!("monomial:k={k}"),
            1,
            Arc::new(move |x: &[f64]| x[0].powi(k as i32) / kf),
            Arc::new(move |x: &[f64]| vec![x[0].powi(k as i32 - 1) / k1]),
            Arc::new(move |x: &[f64]| second(x[0])),
            Some(Arc::new(move |x: &[f64]| vec![second(x[0])])),
        ))
    }

    /// `u(x) = a_1 x_1^2 + ... + a_n x_n^2`, the ellipsoidal extremizer.
    pub fn quadratic(a: &[f64]) -> Result<AnalyticTestFunction> {
        if a.is_empty() {
            return Err(Error::InvalidParameter("quadratic needs n >= 1 coefficients".into()));
        }
        if let Some(bad) = a.iter().find(|&&ai| !(ai > 0.0)) {
            return Err(Error::InvalidParameter(format!("quadratic coefficient {bad} <= 0")));
        }
        let n = a.len();
        let a = a.to_vec();
        let id = format!(
            "quadratic:a={}",
            a.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
        );
        let a1 = a.clone();
        let a2 = a.clone();
        let a3 = a.clone();
        let trace: f64 = 2.0 * a.iter().sum::<f64>();
        Ok(AnalyticTestFunction::new(
            id,
            n,
            Arc::new(move |x: &[f64]| x.iter().zip(&a1).map(|(xi, ai)| ai * xi * xi).sum()),
            Arc::new(move |x: &[f64]| x.iter().zip(&a2).map(|(xi, ai)| 2.0 * ai * xi).collect()),
            Arc::new(move |_| trace),
            Some(Arc::new(move |_| {
                let mut h = vec![0.0; n * n];
                for (i, ai) in a3.iter().enumerate() {
                    h[i * n + i] = 2.0 * ai;
                }
                h
            })),
        ))
    }

    /// `u(x) = ||x||^2 / (2n)`: the function with `Δu ≡ 1` that saturates the
    /// oscillation bound on balls.
    pub fn radial_extremal(n: usize) -> Result<AnalyticTestFunction> {
        if n < 1 {
            return Err(Error::InvalidParameter("radial_extremal needs n >= 1".into()));
        }
        let scale = 1.0 / (2.0 * n as f64);
        Ok(AnalyticTestFunction::new(
            format!("radial:n={n}"),
            n,
            Arc::new(move |x: &[f64]| x.iter().map(|xi| xi * xi).sum::<f64>() * scale),
            Arc::new(move |x: &[f64]| x.iter().map(|xi| xi / n as f64).collect()),
            Arc::new(|_| 1.0),
            Some(Arc::new(move |_| {
                let mut h = vec![0.0; n * n];
                for i in 0..n {
                    h[i * n + i] = 1.0 / n as f64;
                }
                h
            })),
        ))
    }

    /// `u(x) = x_1^2 + eps * x_2^2`: eccentric sublevel ellipses, the negative
    /// control showing `Δu >= 1` alone bounds nothing.
    pub fn eccentric(eps: f64) -> Result<AnalyticTestFunction> {
        if !(eps > 0.0) {
            return Err(Error::InvalidParameter(format!("eccentric eps = {eps} <= 0")));
        }
        let q = quadratic(&[1.0, eps])?;
        Ok(AnalyticTestFunction { id: format!("eccentric:eps={eps}"), ..q })
    }

    /// `u(x, y) = x y`: indefinite Hessian, `det D^2 u = -1`.
    pub fn skew() -> AnalyticTestFunction {
        AnalyticTestFunction::new(
            "skew",
            2,
            Arc::new(|x: &[f64]| x[0] * x[1]),
            Arc::new(|x: &[f64]| vec![x[1], x[0]]),
            Arc::new(|_| 0.0),
            Some(Arc::new(|_| vec![0.0, 1.0, 1.0, 0.0])),
        )
    }

    /// `u(x, y) = x^2 + y^2`.
    pub fn sum_sq() -> AnalyticTestFunction {
        let q = quadratic(&[1.0, 1.0]).expect("valid coefficients");
        AnalyticTestFunction { id: "sum_sq".into(), ..q }
    }

    /// `u(x, y) = (x^2 + y^2)/4 + A * Re((x + iy)^m)`.
    ///
    /// The harmonic part drops out of the Laplacian, so `Δu ≡ 1` for every
    /// amplitude and degree; large `A` makes `u` oscillate wildly while the
    /// constraint stays intact. This is the constructive stand-in for
    /// functions that are tiny on most of the square.
    pub fn harmonic_probe(amplitude: f64, m: u32) -> Result<AnalyticTestFunction> {
        if m < 1 {
            return Err(Error::InvalidParameter(format!("harmonic probe degree m = {m} < 1")));
        }
        if !amplitude.is_finite() {
            return Err(Error::InvalidParameter("harmonic probe amplitude must be finite".into()));
        }
        let a = amplitude;
        let id = format!("harmonic:A={a},m={m}");
        Ok(AnalyticTestFunction::new(
            id,
            2,
            Arc::new(move |x: &[f64]| {
                let z = Complex64::new(x[0], x[1]);
                (x[0] * x[0] + x[1] * x[1]) / 4.0 + a * z.powu(m).re
            }),
            Arc::new(move |x: &[f64]| {
                let z = Complex64::new(x[0], x[1]);
                // d/dz of z^m; for holomorphic f: u_x = Re f', u_y = -Im f'.
                let d = m as f64 * z.powu(m - 1);
                vec![x[0] / 2.0 + a * d.re, x[1] / 2.0 - a * d.im]
            }),
            Arc::new(|_| 1.0),
            Some(Arc::new(move |x: &[f64]| {
                let z = Complex64::new(x[0], x[1]);
                let d2 = if m >= 2 {
                    (m * (m - 1)) as f64 * z.powu(m - 2)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                vec![
                    0.5 + a * d2.re,
                    -a * d2.im,
                    -a * d2.im,
                    0.5 - a * d2.re,
                ]
            })),
        ))
    }

    /// Constant function; zero gradient and Laplacian.
    pub fn constant(dim: usize, c: f64) -> AnalyticTestFunction {
        let n = dim.max(1);
        AnalyticTestFunction::new(
            format!("constant:dim={n},c={c}"),
            n,
            Arc::new(move |_| c),
            Arc::new(move |_| vec![0.0; n]),
            Arc::new(|_| 0.0),
            Some(Arc::new(move |_| vec![0.0; n * n])),
        )
    }

    /// `u(x) = x_i`: coordinate function, handy for finite-difference checks.
    pub fn coordinate(dim: usize, axis: usize) -> Result<AnalyticTestFunction> {
        if axis >= dim {
            return Err(Error::InvalidParameter(format!("axis {axis} out of range for dim {dim}")));
        }
        Ok(AnalyticTestFunction::new(
            format!("coordinate:dim={dim},axis={axis}"),
            dim,
            Arc::new(move |x: &[f64]| x[axis]),
            Arc::new(move |x: &[f64]| {
                let mut g = vec![0.0; x.len()];
                g[axis] = 1.0;
                g
            }),
            Arc::new(|_| 0.0),
            Some(Arc::new(move |_| vec![0.0; dim * dim])),
        ))
    }
}

/// The default instances every harness can rely on.
pub fn builtin_catalog() -> Vec<AnalyticTestFunction> {
    vec![
        catalog::monomial_1d(2).expect("valid"),
        catalog::monomial_1d(3).expect("valid"),
        catalog::quadratic(&[1.0, 1.0]).expect("valid"),
        catalog::radial_extremal(2).expect("valid"),
        catalog::eccentric(0.01).expect("valid"),
        catalog::skew(),
        catalog::sum_sq(),
        catalog::harmonic_probe(0.1, 3).expect("valid"),
    ]
}

/// Parses a catalog member from its string id, e.g. `"quadratic:a=1,0.01"`
/// or `"harmonic:A=0.1,m=3"`. Tokens without `=` continue the previous
/// key's value list.
pub fn parse_function(spec: &str) -> Result<AnalyticTestFunction> {
    let (name, rest) = match spec.split_once(':') {
        Some((n, r)) => (n.trim(), Some(r)),
        None => (spec.trim(), None),
    };
    let mut params: Vec<(String, Vec<f64>)> = Vec::new();
    if let Some(rest) = rest {
        for token in rest.split(',') {
            let token = token.trim();
            if token.is_empty() {
                continue;
            }
            if let Some((key, v)) = token.split_once('=') {
                let v = parse_number(v, spec)?;
                params.push((key.trim().to_string(), vec![v]));
            } else {
                let v = parse_number(token, spec)?;
                match params.last_mut() {
                    Some((_, values)) => values.push(v),
                    None => {
                        return Err(Error::InvalidParameter(format!(
                            "'{spec}': value '{token}' without a key"
                        )))
                    }
                }
            }
        }
    }
    let get = |key: &str| params.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_slice());
    let scalar = |key: &str| -> Result<f64> {
        match get(key) {
            Some([v]) => Ok(*v),
            Some(_) => Err(Error::InvalidParameter(format!("'{spec}': '{key}' wants one value"))),
            None => Err(Error::InvalidParameter(format!("'{spec}': missing parameter '{key}'"))),
        }
    };
    match name {
        "monomial" | "monomial_1d" => catalog::monomial_1d(as_count(scalar("k")?, spec)?),
        "quadratic" => {
            let a = get("a").ok_or_else(|| {
                Error::InvalidParameter(format!("'{spec}': missing parameter 'a'"))
            })?;
            catalog::quadratic(a)
        }
        "radial" | "radial_extremal" => {
            catalog::radial_extremal(as_count(scalar("n")?, spec)? as usize)
        }
        "eccentric" => catalog::eccentric(scalar("eps")?),
        "skew" => Ok(catalog::skew()),
        "sum_sq" => Ok(catalog::sum_sq()),
        "harmonic" | "harmonic_probe" => {
            catalog::harmonic_probe(scalar("A")?, as_count(scalar("m")?, spec)?)
        }
        "constant" => {
            let dim = match get("dim") {
                Some([d]) => as_count(*d, spec)? as usize,
                _ => 2,
            };
            let c = match get("c") {
                Some([c]) => *c,
                _ => 0.0,
            };
            Ok(catalog::constant(dim, c))
        }
        other => Err(Error::InvalidParameter(format!("unknown function '{other}'"))),
    }
}

fn parse_number(s: &str, ctx: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::InvalidParameter(format!("'{ctx}': bad number '{s}'")))
}

fn as_count(v: f64, ctx: &str) -> Result<u32> {
    if v.fract() != 0.0 || v < 0.0 || v > u32::MAX as f64 {
        return Err(Error::InvalidParameter(format!("'{ctx}': {v} is not a small integer")));
    }
    Ok(v as u32)
}

/// One evaluated point in an AM-GM Hessian check.
#[derive(Debug, Clone)]
pub struct AmgmPoint {
    pub point: Vec<f64>,
    pub det: f64,
    pub bound: f64,
    /// `bound - det`; nonnegative wherever the Hessian is PSD.
    pub slack: f64,
}

/// Result of [`amgm_check`]: the inequality `det D^2 u <= (Δu)^n / n^n` at
/// each convex point, with indefinite points reported rather than fatal.
#[derive(Debug, Clone)]
pub struct AmgmReport {
    pub checked: Vec<AmgmPoint>,
    /// Points where the Hessian was not positive semidefinite, with the
    /// offending minimal eigenvalue.
    pub skipped: Vec<(Vec<f64>, f64)>,
    pub worst_slack: Option<f64>,
}

/// Verifies the arithmetic-geometric mean inequality between `det D^2 u`
/// and `(Δu)^n / n^n` at each point where the Hessian is positive
/// semidefinite.
pub fn amgm_check(f: &AnalyticTestFunction, points: &[Vec<f64>]) -> Result<AmgmReport> {
    if !f.has_hessian() {
        return Err(Error::InvalidParameter(format!(
            "function '{}' has no Hessian evaluator",
            f.id()
        )));
    }
    let n = f.dim();
    let mut checked = Vec::new();
    let mut skipped = Vec::new();
    for p in points {
        if p.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: p.len() });
        }
        let h = f.hessian(p).expect("hessian present");
        let m = DMatrix::from_row_slice(n, n, &h);
        let eigen = m.symmetric_eigen();
        let max_abs = eigen.eigenvalues.iter().fold(1.0f64, |acc, &l| acc.max(l.abs()));
        let min_eig = eigen.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min_eig < -1e-12 * max_abs {
            skipped.push((p.clone(), min_eig));
            continue;
        }
        let det: f64 = eigen.eigenvalues.iter().product();
        let trace = f.laplacian(p);
        let bound = (trace / n as f64).powi(n as i32);
        checked.push(AmgmPoint { point: p.clone(), det, bound, slack: bound - det });
    }
    let worst_slack = checked
        .iter()
        .map(|c| c.slack)
        .fold(None, |acc: Option<f64>, s| Some(acc.map_or(s, |a| a.min(s))));
    Ok(AmgmReport { checked, skipped, worst_slack })
}
