use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{BoundaryInfo, DomainMask};

/// Bubble radius distribution for champagne domains.
#[derive(Debug, Clone, Copy)]
pub enum BubbleRadiusLaw {
    /// Every bubble has the same radius.
    Fixed(f64),
    /// Radii drawn with density proportional to `r^-exponent` on
    /// `[r_min, r_max]`.
    PowerLaw { r_min: f64, r_max: f64, exponent: f64 },
}

impl BubbleRadiusLaw {
    fn max_radius(&self) -> f64 {
        match *self {
            BubbleRadiusLaw::Fixed(r) => r,
            BubbleRadiusLaw::PowerLaw { r_max, .. } => r_max,
        }
    }

    fn sample(&self, u: f64) -> f64 {
        match *self {
            BubbleRadiusLaw::Fixed(r) => r,
            BubbleRadiusLaw::PowerLaw { r_min, r_max, exponent } => {
                if (exponent - 1.0).abs() < 1e-12 {
                    r_min * (r_max / r_min).powf(u)
                } else {
                    let p = 1.0 - exponent;
                    (r_min.powf(p) + u * (r_max.powf(p) - r_min.powf(p))).powf(1.0 / p)
                }
            }
        }
    }
}

/// A disk with many small disjoint bubbles removed.
#[derive(Debug, Clone)]
pub struct ChampagneSpec {
    pub outer_radius: f64,
    pub bubble_count: usize,
    pub radius_law: BubbleRadiusLaw,
    pub placement_seed: u64,
    pub min_separation: f64,
}

impl ChampagneSpec {
    /// Deterministic bubble placement by rejection sampling. Bubbles are
    /// generated sequentially from one stream, so a spec with a larger
    /// count extends the placement of a smaller one with the same seed.
    pub fn place_bubbles(&self) -> Result<Vec<(f64, f64, f64)>> {
        if !(self.outer_radius > 0.0) {
            return Err(Error::InvalidParameter("outer radius must be positive".into()));
        }
        if self.min_separation < 0.0 {
            return Err(Error::InvalidParameter("min separation must be nonnegative".into()));
        }
        if self.radius_law.max_radius() >= self.outer_radius / 2.0 {
            return Err(Error::InvalidParameter("bubbles must be small against the disk".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.placement_seed);
        let mut bubbles: Vec<(f64, f64, f64)> = Vec::with_capacity(self.bubble_count);
        const RETRY_CAP: usize = 20_000;
        for _ in 0..self.bubble_count {
            let r = self.radius_law.sample(rng.gen::<f64>());
            let max_center = self.outer_radius - r - self.min_separation;
            if max_center <= 0.0 {
                return Err(Error::PlacementFailed {
                    placed: bubbles.len(),
                    requested: self.bubble_count,
                });
            }
            let mut placed = false;
            for _ in 0..RETRY_CAP {
                let x = rng.gen_range(-max_center..max_center);
                let y = rng.gen_range(-max_center..max_center);
                if x * x + y * y >= max_center * max_center {
                    continue;
                }
                let clear = bubbles.iter().all(|&(bx, by, br)| {
                    let d2 = (x - bx) * (x - bx) + (y - by) * (y - by);
                    let need = br + r + self.min_separation;
                    d2 >= need * need
                });
                if clear {
                    bubbles.push((x, y, r));
                    placed = true;
                    break;
                }
            }
            if !placed {
                return Err(Error::PlacementFailed {
                    placed: bubbles.len(),
                    requested: self.bubble_count,
                });
            }
        }
        Ok(bubbles)
    }
}

/// Builds the mask of a champagne domain: the outer disk minus the bubbles,
/// with the exact signed distance and per-component boundary lengths
/// attached.
pub fn make_champagne(spec: &ChampagneSpec, resolution: usize) -> Result<DomainMask> {
    let bubbles = spec.place_bubbles()?;
    let radius = spec.outer_radius;
    let half = radius * 1.05;
    let pred_bubbles = bubbles.clone();
    let sd_bubbles = bubbles.clone();
    let mask = DomainMask::from_predicate(
        [(-half, half), (-half, half)],
        [resolution, resolution],
        Arc::new(move |x, y| {
            if x * x + y * y >= radius * radius {
                return false;
            }
            pred_bubbles.iter().all(|&(bx, by, br)| {
                (x - bx) * (x - bx) + (y - by) * (y - by) > br * br
            })
        }),
    )?;
    let sd = move |x: f64, y: f64| -> f64 {
        let mut d = radius - (x * x + y * y).sqrt();
        for &(bx, by, br) in &sd_bubbles {
            let db = ((x - bx) * (x - bx) + (y - by) * (y - by)).sqrt() - br;
            if db < d {
                d = db;
            }
        }
        d
    };
    Ok(mask
        .with_signed_distance(Arc::new(sd))
        .with_boundary_info(BoundaryInfo {
            outer: 2.0 * std::f64::consts::PI * radius,
            removed: bubbles
                .iter()
                .map(|&(_, _, r)| 2.0 * std::f64::consts::PI * r)
                .collect(),
        }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CellClass;

    fn spec(count: usize, seed: u64) -> ChampagneSpec {
        ChampagneSpec {
            outer_radius: 1.0,
            bubble_count: count,
            radius_law: BubbleRadiusLaw::Fixed(0.02),
            placement_seed: seed,
            min_separation: 0.01,
        }
    }

    #[test]
    fn zero_bubbles_is_a_plain_disk() {
        let mask = make_champagne(&spec(0, 1), 128).unwrap();
        let disk = DomainMask::disk(1.0, 128).unwrap();
        assert_eq!(mask.interior_count(), disk.interior_count());
    }

    #[test]
    fn placement_is_deterministic_and_prefix_stable() {
        let a = spec(50, 7).place_bubbles().unwrap();
        let b = spec(50, 7).place_bubbles().unwrap();
        assert_eq!(a, b);
        let more = spec(80, 7).place_bubbles().unwrap();
        assert_eq!(&more[..50], &a[..]);
    }

    #[test]
    fn masks_are_identical_across_runs() {
        let m1 = make_champagne(&spec(50, 3), 256).unwrap();
        let m2 = make_champagne(&spec(50, 3), 256).unwrap();
        assert_eq!(m1.classes(), m2.classes());
        m1.validate().unwrap();
    }

    #[test]
    fn bubbles_are_disjoint_and_inside() {
        let s = spec(120, 11);
        let bubbles = s.place_bubbles().unwrap();
        assert_eq!(bubbles.len(), 120);
        for (i, &(x, y, r)) in bubbles.iter().enumerate() {
            assert!((x * x + y * y).sqrt() + r < 1.0);
            for &(x2, y2, r2) in &bubbles[i + 1..] {
                let d = ((x - x2).powi(2) + (y - y2).powi(2)).sqrt();
                assert!(d >= r + r2 + s.min_separation - 1e-12);
            }
        }
    }

    #[test]
    fn impossible_packing_reports_achieved_count() {
        let s = ChampagneSpec {
            outer_radius: 1.0,
            bubble_count: 5000,
            radius_law: BubbleRadiusLaw::Fixed(0.05),
            placement_seed: 1,
            min_separation: 0.01,
        };
        match s.place_bubbles() {
            Err(Error::PlacementFailed { placed, requested }) => {
                assert!(placed > 0 && placed < requested);
            }
            other => panic!("expected placement failure, got {other:?}"),
        }
    }

    #[test]
    fn bubble_cells_are_not_interior() {
        let mask = make_champagne(&spec(30, 5), 512).unwrap();
        let bubbles = spec(30, 5).place_bubbles().unwrap();
        for &(x, y, _) in &bubbles {
            let (ix, iy) = mask.locate(x, y).unwrap();
            assert_ne!(mask.class(ix, iy), CellClass::Interior);
        }
    }

    #[test]
    fn power_law_radii_stay_in_range() {
        let law = BubbleRadiusLaw::PowerLaw { r_min: 0.01, r_max: 0.04, exponent: 2.0 };
        for i in 0..=10 {
            let r = law.sample(i as f64 / 10.0);
            assert!((0.01..=0.04).contains(&r));
        }
    }
}
