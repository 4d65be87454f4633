use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::GridField;
use crate::geometry::marching::level_segments;

/// One connected component of a sublevel set `{g <= t}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComponentInfo {
    pub cells: usize,
    pub area: f64,
    pub boundary_length: f64,
    pub holes: usize,
    pub touches_outer: bool,
}

/// Connected components of a sublevel set under 4-connectivity, with hole
/// counts from an 8-connected flood fill of the complement and per-component
/// boundary lengths from the marching-squares segments each component owns.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelSetDecomposition {
    pub level: f64,
    pub components: Vec<ComponentInfo>,
}

impl LevelSetDecomposition {
    pub fn total_area(&self) -> f64 {
        self.components.iter().map(|c| c.area).sum()
    }

    pub fn total_boundary_length(&self) -> f64 {
        self.components.iter().map(|c| c.boundary_length).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }
}

/// Component labels per cell: `-1` above threshold, otherwise the component
/// index in the decomposition's order.
pub struct LabeledDecomposition {
    pub decomposition: LevelSetDecomposition,
    pub labels: Vec<i32>,
}

pub fn decompose(g: &GridField, t: f64) -> Result<LevelSetDecomposition> {
    Ok(decompose_labeled(g, t)?.decomposition)
}

pub fn decompose_labeled(g: &GridField, t: f64) -> Result<LabeledDecomposition> {
    if g.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: g.dim() });
    }
    let nx = g.resolution()[0];
    let ny = g.resolution()[1];
    let samples = g.samples();
    let cell_area = g.cell_volume();

    // 4-connected labeling of {g <= t}, labels in row-major discovery order.
    let mut labels = vec![-1i32; nx * ny];
    let mut counts: Vec<usize> = Vec::new();
    let mut touches: Vec<bool> = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..nx * ny {
        if samples[start] > t || labels[start] >= 0 {
            continue;
        }
        let label = counts.len() as i32;
        counts.push(0);
        touches.push(false);
        labels[start] = label;
        queue.push_back(start);
        while let Some(idx) = queue.pop_front() {
            counts[label as usize] += 1;
            let (ix, iy) = (idx % nx, idx / nx);
            if ix == 0 || iy == 0 || ix == nx - 1 || iy == ny - 1 {
                touches[label as usize] = true;
            }
            let mut visit = |n: usize| {
                if samples[n] <= t && labels[n] < 0 {
                    labels[n] = label;
                    queue.push_back(n);
                }
            };
            if ix > 0 {
                visit(idx - 1);
            }
            if ix + 1 < nx {
                visit(idx + 1);
            }
            if iy > 0 {
                visit(idx - nx);
            }
            if iy + 1 < ny {
                visit(idx + nx);
            }
        }
    }
    let n_components = counts.len();

    // 8-connected flood fill of the complement; bounded complement regions
    // are holes, attributed to the sublevel component that surrounds them.
    let mut comp_mark = vec![-1i32; nx * ny];
    let mut holes = vec![0usize; n_components];
    let mut region = Vec::new();
    let mut next_region = 0i32;
    for start in 0..nx * ny {
        if samples[start] <= t || comp_mark[start] >= 0 {
            continue;
        }
        let mark = next_region;
        next_region += 1;
        comp_mark[start] = mark;
        region.clear();
        region.push(start);
        queue.push_back(start);
        let mut touches_border = false;
        while let Some(idx) = queue.pop_front() {
            let (ix, iy) = (idx % nx, idx / nx);
            if ix == 0 || iy == 0 || ix == nx - 1 || iy == ny - 1 {
                touches_border = true;
            }
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let (jx, jy) = (ix as i64 + dx, iy as i64 + dy);
                    if jx < 0 || jy < 0 || jx >= nx as i64 || jy >= ny as i64 {
                        continue;
                    }
                    let n = jx as usize + nx * jy as usize;
                    if samples[n] > t && comp_mark[n] < 0 {
                        comp_mark[n] = mark;
                        region.push(n);
                        queue.push_back(n);
                    }
                }
            }
        }
        if !touches_border {
            // The hole's owner is any 8-neighbor below threshold; under the
            // 4/8 duality that component is unique.
            'search: for &idx in &region {
                let (ix, iy) = (idx % nx, idx / nx);
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        let (jx, jy) = (ix as i64 + dx, iy as i64 + dy);
                        if jx < 0 || jy < 0 || jx >= nx as i64 || jy >= ny as i64 {
                            continue;
                        }
                        let n = jx as usize + nx * jy as usize;
                        if labels[n] >= 0 {
                            holes[labels[n] as usize] += 1;
                            break 'search;
                        }
                    }
                }
            }
        }
    }

    // Boundary length per component from owned marching-squares segments.
    let mut boundary = vec![0.0f64; n_components];
    if n_components > 0 && t < g.max_sample() {
        for seg in level_segments(g, t)? {
            let (ox, oy) = seg.owner;
            let label = labels[ox + nx * oy];
            if label >= 0 {
                boundary[label as usize] += seg.length();
            }
        }
    }

    let components = (0..n_components)
        .map(|i| ComponentInfo {
            cells: counts[i],
            area: counts[i] as f64 * cell_area,
            boundary_length: boundary[i],
            holes: holes[i],
            touches_outer: touches[i],
        })
        .collect();

    Ok(LabeledDecomposition {
        decomposition: LevelSetDecomposition { level: t, components },
        labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{catalog, AnalyticTestFunction, GridField};
    use std::sync::Arc;

    fn two_disks_field() -> GridField {
        let f = AnalyticTestFunction::new(
            "two-disks",
            2,
            Arc::new(|x: &[f64]| {
                let d1 = (x[0] + 0.5).powi(2) + x[1].powi(2);
                let d2 = (x[0] - 0.5).powi(2) + x[1].powi(2);
                d1.min(d2)
            }),
            Arc::new(|_| vec![0.0, 0.0]),
            Arc::new(|_| 0.0),
            None,
        );
        GridField::sample(&f, &[(-1.0, 1.0), (-1.0, 1.0)], &[128, 128]).unwrap()
    }

    #[test]
    fn two_disjoint_disks_give_two_simply_connected_components() {
        let g = two_disks_field();
        let d = decompose(&g, 0.04).unwrap();
        assert_eq!(d.components.len(), 2);
        for c in &d.components {
            assert_eq!(c.holes, 0);
            assert!(!c.touches_outer);
            // Disk of radius 0.2: area and perimeter within a few percent.
            assert!((c.area - std::f64::consts::PI * 0.04).abs() < 0.01, "area {}", c.area);
            assert!(
                (c.boundary_length - 2.0 * std::f64::consts::PI * 0.2).abs() < 0.06,
                "boundary {}",
                c.boundary_length
            );
        }
    }

    #[test]
    fn annulus_has_one_hole() {
        // u = (||x|| - 0.5)^2 <= 0.01: annulus with radii 0.4..0.6.
        let f = AnalyticTestFunction::new(
            "ring",
            2,
            Arc::new(|x: &[f64]| {
                let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
                (r - 0.5).powi(2)
            }),
            Arc::new(|_| vec![0.0, 0.0]),
            Arc::new(|_| 0.0),
            None,
        );
        let g = GridField::sample(&f, &[(-1.0, 1.0), (-1.0, 1.0)], &[256, 256]).unwrap();
        let d = decompose(&g, 0.01).unwrap();
        assert_eq!(d.components.len(), 1);
        assert_eq!(d.components[0].holes, 1);
    }

    #[test]
    fn superlevel_components_of_subharmonic_functions_touch_boundary() {
        // With laplacian >= 1 there are no interior local maxima, so every
        // component of {f >= t} inside the box must reach the box edge.
        for f in [catalog::radial_extremal(2).unwrap(), catalog::harmonic_probe(1.0, 3).unwrap()]
        {
            let g = GridField::sample(&f, &[(0.0, 1.0), (0.0, 1.0)], &[128, 128]).unwrap();
            let neg = g.map(|v| -v);
            let (lo, hi) = (g.min_sample(), g.max_sample());
            for k in 1..8 {
                let t = lo + (hi - lo) * k as f64 / 8.0;
                let d = decompose(&neg, -t).unwrap();
                for c in &d.components {
                    assert!(c.touches_outer, "{}: floating superlevel component at t={t}", f.id());
                }
            }
        }
    }

    #[test]
    fn component_areas_sum_to_sublevel_measure() {
        let g = two_disks_field();
        let t = 0.04;
        let d = decompose(&g, t).unwrap();
        let measure = crate::geometry::sublevel_measure(&g, t).value;
        assert!((d.total_area() - measure).abs() < 1e-12);
    }

    #[test]
    fn decomposition_json_round_trips() {
        let g = two_disks_field();
        let d = decompose(&g, 0.04).unwrap();
        let parsed: LevelSetDecomposition = serde_json::from_str(&d.to_json()).unwrap();
        assert_eq!(parsed.components.len(), d.components.len());
    }
}
