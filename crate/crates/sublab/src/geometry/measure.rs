use crate::field::GridField;

/// Sublevel measure with a discretization bracket.
#[derive(Debug, Clone, Copy)]
pub struct MeasureEstimate {
    /// Cell-counting value: `h^d * #{cells with sample <= s}`.
    pub value: f64,
    /// Counting only cells whose interpolated refinement stays below `s`.
    pub lower: f64,
    /// Counting every cell any of whose refinement values dips below `s`.
    pub upper: f64,
}

/// Lebesgue measure of `{g <= s}` by cell counting, bracketed by one level
/// of multilinear grid refinement.
pub fn sublevel_measure(g: &GridField, s: f64) -> MeasureEstimate {
    let dim = g.dim();
    let cell = g.cell_volume();
    let res = g.resolution();
    let samples = g.samples();

    let mut count = 0usize;
    let mut lower = 0usize;
    let mut upper = 0usize;

    // Multi-index decoding for the neighbor lookups.
    let mut strides = vec![1usize; dim];
    for a in 1..dim {
        strides[a] = strides[a - 1] * res[a - 1];
    }
    let mut coord = vec![0usize; dim];

    for idx in 0..samples.len() {
        {
            let mut rem = idx;
            for a in 0..dim {
                coord[a] = rem % res[a];
                rem /= res[a];
            }
        }
        let center_in = samples[idx] <= s;
        if center_in {
            count += 1;
        }

        // Refined values at the 2^d subcell centers, each offset by h/4.
        // Along each axis the value is 3/4 own-cell + 1/4 neighbor (linear
        // interpolation at the quarter point), extrapolated at the border.
        let mut any_in = false;
        let mut all_in = true;
        for sub in 0..(1usize << dim) {
            let mut v = 0.0;
            // Multilinear combination over the 2^d involved grid cells.
            for corner in 0..(1usize << dim) {
                let mut w = 1.0;
                let mut j = idx as isize;
                for a in 0..dim {
                    let side = (sub >> a) & 1; // 0 => -h/4, 1 => +h/4
                    let pick = (corner >> a) & 1; // 0 => own cell, 1 => neighbor
                    let dir: isize = if side == 1 { 1 } else { -1 };
                    let neighbor_exists = if side == 1 {
                        coord[a] + 1 < res[a]
                    } else {
                        coord[a] > 0
                    };
                    if pick == 1 {
                        if neighbor_exists {
                            w *= 0.25;
                            j += dir * strides[a] as isize;
                        } else {
                            // Extrapolate through the opposite neighbor:
                            // v_quarter = 1.25 v0 - 0.25 v_inner.
                            w *= -0.25;
                            j -= dir * strides[a] as isize;
                        }
                    } else {
                        let own_w = if neighbor_exists { 0.75 } else { 1.25 };
                        w *= own_w;
                    }
                }
                v += w * samples[j as usize];
            }
            if v <= s {
                any_in = true;
            } else {
                all_in = false;
            }
        }

        if center_in && all_in {
            lower += 1;
        }
        if center_in || any_in {
            upper += 1;
        }
    }

    MeasureEstimate {
        value: count as f64 * cell,
        lower: lower as f64 * cell,
        upper: upper as f64 * cell,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{catalog, GridField};

    #[test]
    fn disk_area_from_sublevel() {
        let f = catalog::sum_sq();
        let g = GridField::sample(&f, &[(-1.0, 1.0), (-1.0, 1.0)], &[512, 512]).unwrap();
        let m = sublevel_measure(&g, 0.25);
        let exact = std::f64::consts::PI * 0.25;
        assert!((m.value - exact).abs() / exact < 0.02, "measure {}", m.value);
        assert!(m.lower <= m.value && m.value <= m.upper);
        assert!(m.lower <= exact && exact <= m.upper + 0.02 * exact);
    }

    #[test]
    fn ellipse_area_from_sublevel() {
        let f = catalog::quadratic(&[1.0, 4.0]).unwrap();
        let g = GridField::sample(&f, &[(-1.0, 1.0), (-1.0, 1.0)], &[512, 512]).unwrap();
        let m = sublevel_measure(&g, 0.5);
        // pi s / sqrt(a1 a2)
        let exact = std::f64::consts::PI * 0.5 / 2.0;
        assert!((m.value - exact).abs() / exact < 0.02, "measure {}", m.value);
    }

    #[test]
    fn below_minimum_is_empty() {
        let f = catalog::sum_sq();
        let g = GridField::sample(&f, &[(-1.0, 1.0), (-1.0, 1.0)], &[64, 64]).unwrap();
        let m = sublevel_measure(&g, -1.0);
        assert_eq!(m.value, 0.0);
        assert_eq!(m.upper, 0.0);
    }

    #[test]
    fn monotone_in_level() {
        let f = catalog::harmonic_probe(0.5, 3).unwrap();
        let g = GridField::sample(&f, &[(0.0, 1.0), (0.0, 1.0)], &[128, 128]).unwrap();
        let (lo, hi) = (g.min_sample(), g.max_sample());
        let mut prev = 0.0;
        for k in 0..=20 {
            let s = lo + (hi - lo) * k as f64 / 20.0;
            let m = sublevel_measure(&g, s).value;
            assert!(m + 1e-12 >= prev, "measure decreased at s={s}");
            prev = m;
        }
    }

    #[test]
    fn one_dimensional_interval_counting() {
        let f = catalog::monomial_1d(2).unwrap();
        let g = GridField::sample(&f, &[(-1.0, 1.0)], &[65536]).unwrap();
        // {x^2/2 <= t} = [-sqrt(2t), sqrt(2t)]
        let t = 0.02;
        let m = sublevel_measure(&g, t);
        let exact = 2.0 * (2.0 * t).sqrt();
        assert!((m.value - exact).abs() / exact < 1e-3, "measure {}", m.value);
    }
}
