use crate::error::{Error, Result};
use crate::field::GridField;
use crate::geometry::marching::level_length;
use crate::geometry::mask::DomainMask;

/// Exact squared Euclidean distance transform (Felzenszwalb–Huttenlocher),
/// in cell units, to the nearest cell where `is_seed` holds.
pub fn squared_edt(nx: usize, ny: usize, is_seed: impl Fn(usize) -> bool) -> Vec<f64> {
    const INF: f64 = 1e20;
    let mut dist = vec![INF; nx * ny];

    // Row pass: 1-D distance along x.
    for iy in 0..ny {
        let row = iy * nx;
        let mut last: Option<usize> = None;
        for ix in 0..nx {
            if is_seed(row + ix) {
                dist[row + ix] = 0.0;
                last = Some(ix);
            } else if let Some(l) = last {
                dist[row + ix] = (ix - l) as f64;
            }
        }
        last = None;
        for ix in (0..nx).rev() {
            if is_seed(row + ix) {
                last = Some(ix);
            } else if let Some(l) = last {
                let d = (l - ix) as f64;
                if d < dist[row + ix] {
                    dist[row + ix] = d;
                }
            }
        }
        for ix in 0..nx {
            let d = dist[row + ix];
            if d < INF {
                dist[row + ix] = d * d;
            }
        }
    }

    // Column pass: lower envelope of parabolas over the row distances.
    let mut f = vec![0.0; ny];
    let mut d = vec![0.0; ny];
    let mut v = vec![0usize; ny];
    let mut z = vec![0.0; ny + 1];
    for ix in 0..nx {
        for iy in 0..ny {
            f[iy] = dist[ix + nx * iy];
        }
        let mut k = 0usize;
        v[0] = 0;
        z[0] = -INF;
        z[1] = INF;
        for q in 1..ny {
            if f[q] >= INF {
                continue;
            }
            loop {
                let p = v[k];
                if f[p] >= INF {
                    if k == 0 {
                        v[0] = q;
                        z[0] = -INF;
                        z[1] = INF;
                        break;
                    }
                    k -= 1;
                    continue;
                }
                let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64))
                    / (2.0 * q as f64 - 2.0 * p as f64);
                if s <= z[k] {
                    if k == 0 {
                        v[0] = q;
                        z[0] = -INF;
                        z[1] = INF;
                        break;
                    }
                    k -= 1;
                } else {
                    k += 1;
                    v[k] = q;
                    z[k] = s;
                    z[k + 1] = INF;
                    break;
                }
            }
        }
        let mut k = 0usize;
        for q in 0..ny {
            while z[k + 1] < q as f64 {
                k += 1;
            }
            let p = v[k];
            d[q] = if f[p] >= INF {
                INF
            } else {
                (q as f64 - p as f64).powi(2) + f[p]
            };
        }
        for iy in 0..ny {
            dist[ix + nx * iy] = d[iy];
        }
    }
    dist
}

/// Distance geometry of a masked domain: the inradius and the exterior
/// parallel-curve length profile.
#[derive(Debug)]
pub struct DistanceFeatures {
    /// Largest distance from an interior cell to the non-interior set.
    pub inradius: f64,
    /// Distance from every cell center to the domain (zero on the domain).
    pub exterior_distance: GridField,
}

impl DistanceFeatures {
    /// Length of the exterior parallel curve `{x : d(x, domain) = s}`.
    pub fn parallel_length(&self, s: f64) -> Result<f64> {
        level_length(&self.exterior_distance, s)
    }

    pub fn parallel_lengths(&self, s_values: &[f64]) -> Result<Vec<(f64, f64)>> {
        s_values
            .iter()
            .map(|&s| self.parallel_length(s).map(|l| (s, l)))
            .collect()
    }
}

/// Computes the inradius (via the interior distance transform) and the
/// exterior distance field whose level sets are the parallel curves.
pub fn distance_features(mask: &DomainMask) -> Result<DistanceFeatures> {
    if mask.interior_count() == 0 {
        return Err(Error::EmptyInterior);
    }
    let interior = mask.interior_distance();
    let inradius = interior.samples().iter().copied().fold(0.0f64, f64::max);

    let [nx, ny] = mask.resolution();
    let h = mask.spacing();
    let classes = mask.classes();
    let sq = squared_edt(nx, ny, |idx| {
        classes[idx] == crate::geometry::mask::CellClass::Interior
    });
    let samples: Vec<f64> = sq.iter().map(|&d| d.sqrt() * h).collect();
    let exterior_distance = GridField::from_samples(
        &[mask.bounds()[0], mask.bounds()[1]],
        &[nx, ny],
        samples,
    )?;
    Ok(DistanceFeatures { inradius, exterior_distance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[test]
    fn edt_single_seed() {
        let nx = 11;
        let ny = 9;
        let seed = 5 + nx * 4;
        let d = squared_edt(nx, ny, |idx| idx == seed);
        for iy in 0..ny {
            for ix in 0..nx {
                let dx = ix as f64 - 5.0;
                let dy = iy as f64 - 4.0;
                assert!(
                    (d[ix + nx * iy] - (dx * dx + dy * dy)).abs() < 1e-9,
                    "at ({ix},{iy})"
                );
            }
        }
    }

    #[test]
    fn unit_disk_inradius() {
        let mask = DomainMask::disk(1.0, 256).unwrap();
        let feats = distance_features(&mask).unwrap();
        let h = mask.spacing();
        assert!((feats.inradius - 1.0).abs() < 2.0 * h, "inradius {}", feats.inradius);
    }

    #[test]
    fn unit_disk_parallel_curve() {
        let mask = DomainMask::disk_in_box(1.0, 2.0, 512).unwrap();
        let feats = distance_features(&mask).unwrap();
        let len = feats.parallel_length(0.5).unwrap();
        let exact = 2.0 * std::f64::consts::PI * 1.5;
        assert!((len - exact).abs() / exact < 0.02, "length {len} vs {exact}");
    }

    #[test]
    fn convex_mask_parallel_growth_bounded() {
        // For convex sets the parallel curve exceeds the perimeter by at
        // most 2 pi s.
        let mask = DomainMask::from_predicate(
            [(-2.0, 2.0), (-2.0, 2.0)],
            [512, 512],
            Arc::new(|x: f64, y: f64| x.abs() < 0.8 && y.abs() < 0.5),
        )
        .unwrap();
        let feats = distance_features(&mask).unwrap();
        let perimeter = 2.0 * (1.6 + 1.0);
        let h = mask.spacing();
        for s in [0.1, 0.3, 0.6, 0.9] {
            let len = feats.parallel_length(s).unwrap();
            let bound = 2.0 * std::f64::consts::PI * s;
            assert!(
                len - perimeter <= bound + 20.0 * h,
                "s={s}: growth {} vs bound {bound}",
                len - perimeter
            );
            // And the parallel curve is never shorter than the perimeter.
            assert!(len + 20.0 * h >= perimeter, "s={s}: length {len}");
        }
    }

    #[test]
    fn empty_interior_is_an_error() {
        let mask = DomainMask::from_predicate(
            [(0.0, 1.0), (0.0, 1.0)],
            [16, 16],
            Arc::new(|_, _| false),
        )
        .unwrap();
        assert!(matches!(distance_features(&mask), Err(Error::EmptyInterior)));
    }
}
