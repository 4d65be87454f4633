use crate::error::{Error, Result};
use crate::field::GridField;

/// Discrete gradient and Laplacian of a sampled field.
#[derive(Debug, Clone)]
pub struct FdOperators {
    /// One component field per axis.
    pub gradient: Vec<GridField>,
    pub laplacian: GridField,
}

impl FdOperators {
    /// Pointwise Euclidean norm of the gradient.
    pub fn gradient_norm(&self) -> GridField {
        let mut norm = self.gradient[0].map(|v| v * v);
        let mut samples: Vec<f64> = norm.samples().to_vec();
        for comp in &self.gradient[1..] {
            for (s, &g) in samples.iter_mut().zip(comp.samples()) {
                *s += g * g;
            }
        }
        for s in &mut samples {
            *s = s.sqrt();
        }
        norm = GridField::from_samples(norm.bounds(), norm.resolution(), samples)
            .expect("same geometry");
        norm
    }
}

/// Central differences in the interior, second-order one-sided stencils in
/// the boundary layer. Both the gradient and the Laplacian are exact on
/// quadratics.
pub fn fd_operators(g: &GridField) -> Result<FdOperators> {
    for &r in g.resolution() {
        if r < 3 {
            return Err(Error::InvalidParameter(format!(
                "fd_operators needs resolution >= 3 per axis, got {r}"
            )));
        }
    }
    let dim = g.dim();
    let n_cells = g.len();
    let samples = g.samples();
    let mut gradient = Vec::with_capacity(dim);
    let mut laplacian = vec![0.0; n_cells];

    let mut stride = 1usize;
    for axis in 0..dim {
        let n = g.resolution()[axis];
        let h = g.spacing()[axis];
        let mut comp = vec![0.0; n_cells];
        for idx in 0..n_cells {
            let i = (idx / stride) % n;
            // Offsets relative to the current cell along this axis.
            let rel = |dj: isize| samples[(idx as isize + dj * stride as isize) as usize];
            let (d1, d2) = if i == 0 {
                let one = (-3.0 * rel(0) + 4.0 * rel(1) - rel(2)) / (2.0 * h);
                let two = if n >= 4 {
                    (2.0 * rel(0) - 5.0 * rel(1) + 4.0 * rel(2) - rel(3)) / (h * h)
                } else {
                    (rel(0) - 2.0 * rel(1) + rel(2)) / (h * h)
                };
                (one, two)
            } else if i == n - 1 {
                let one = (3.0 * rel(0) - 4.0 * rel(-1) + rel(-2)) / (2.0 * h);
                let two = if n >= 4 {
                    (2.0 * rel(0) - 5.0 * rel(-1) + 4.0 * rel(-2) - rel(-3)) / (h * h)
                } else {
                    (rel(0) - 2.0 * rel(-1) + rel(-2)) / (h * h)
                };
                (one, two)
            } else {
                (
                    (rel(1) - rel(-1)) / (2.0 * h),
                    (rel(1) - 2.0 * rel(0) + rel(-1)) / (h * h),
                )
            };
            comp[idx] = d1;
            laplacian[idx] += d2;
        }
        gradient.push(GridField::from_samples(g.bounds(), g.resolution(), comp)?);
        stride *= n;
    }

    Ok(FdOperators {
        gradient,
        laplacian: GridField::from_samples(g.bounds(), g.resolution(), laplacian)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{builtin_catalog, catalog, GridField};

    #[test]
    fn laplacian_exact_on_radial_extremal() {
        let f = catalog::radial_extremal(2).unwrap();
        let g = GridField::sample(&f, &[(-1.0, 1.0), (-1.0, 1.0)], &[32, 32]).unwrap();
        let ops = fd_operators(&g).unwrap();
        for &v in ops.laplacian.samples() {
            assert!((v - 1.0).abs() < 1e-10, "laplacian {v}");
        }
    }

    #[test]
    fn gradient_exact_on_linear_field() {
        let f = catalog::coordinate(2, 0).unwrap();
        let g = GridField::sample(&f, &[(0.0, 1.0), (0.0, 1.0)], &[16, 16]).unwrap();
        let ops = fd_operators(&g).unwrap();
        for &v in ops.gradient[0].samples() {
            assert!((v - 1.0).abs() < 1e-12);
        }
        for &v in ops.gradient[1].samples() {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn laplacian_of_sum_sq_is_four() {
        let f = catalog::sum_sq();
        let g = GridField::sample(&f, &[(-1.0, 1.0), (-1.0, 1.0)], &[24, 24]).unwrap();
        let ops = fd_operators(&g).unwrap();
        for &v in ops.laplacian.samples() {
            assert!((v - 4.0).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_too_coarse_grids() {
        let f = catalog::sum_sq();
        let g = GridField::sample(&f, &[(0.0, 1.0), (0.0, 1.0)], &[2, 8]).unwrap();
        assert!(fd_operators(&g).is_err());
    }

    /// Halving h must reduce the max interior error of both operators by at
    /// least 3.5x (second-order scheme), for every catalog member.
    #[test]
    fn halving_h_reduces_interior_error() {
        for f in builtin_catalog() {
            if f.dim() != 2 {
                continue;
            }
            let err = |res: usize| -> (f64, f64) {
                let g =
                    GridField::sample(&f, &[(-1.0, 1.0), (-1.0, 1.0)], &[res, res]).unwrap();
                let ops = fd_operators(&g).unwrap();
                let mut grad_err = 0.0f64;
                let mut lap_err = 0.0f64;
                let mut p = [0.0; 2];
                for iy in 1..res - 1 {
                    for ix in 1..res - 1 {
                        let idx = g.index2(ix, iy);
                        g.center(idx, &mut p);
                        let exact = f.gradient(&p);
                        grad_err = grad_err
                            .max((ops.gradient[0].samples()[idx] - exact[0]).abs())
                            .max((ops.gradient[1].samples()[idx] - exact[1]).abs());
                        lap_err =
                            lap_err.max((ops.laplacian.samples()[idx] - f.laplacian(&p)).abs());
                    }
                }
                (grad_err, lap_err)
            };
            let (g1, l1) = err(64);
            let (g2, l2) = err(128);
            let floor = 1e-11;
            assert!(g2 <= g1 / 3.5 + floor, "{}: gradient error {g1} -> {g2}", f.id());
            assert!(l2 <= l1 / 3.5 + floor, "{}: laplacian error {l1} -> {l2}", f.id());
        }
    }
}
