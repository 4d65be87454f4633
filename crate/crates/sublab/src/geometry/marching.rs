use crate::error::{Error, Result};
use crate::field::GridField;

/// One marching-squares segment. `owner` is the grid cell backing the first
/// sub-threshold corner of the segment, so per-component boundary lengths
/// can attribute each segment to the component owning its sub-level side.
#[derive(Debug, Clone, Copy)]
pub struct Segment {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub owner: (usize, usize),
}

impl Segment {
    pub fn length(&self) -> f64 {
        let dx = self.b[0] - self.a[0];
        let dy = self.b[1] - self.a[1];
        (dx * dx + dy * dy).sqrt()
    }
}

/// Node lattice for marching squares: the cell centers extended by one
/// extrapolated layer on the box faces, so isocontours run all the way to
/// the box edge. The extrapolation is linear and therefore exact for affine
/// fields.
struct NodeGrid {
    xs: Vec<f64>,
    ys: Vec<f64>,
    values: Vec<f64>,
    nx: usize,
    ny: usize,
}

impl NodeGrid {
    fn build(g: &GridField) -> Self {
        let nx = g.resolution()[0];
        let ny = g.resolution()[1];
        let (x0, x1) = g.bounds()[0];
        let (y0, y1) = g.bounds()[1];
        let hx = g.spacing()[0];
        let hy = g.spacing()[1];

        let mut xs = Vec::with_capacity(nx + 2);
        xs.push(x0);
        xs.extend((0..nx).map(|i| x0 + (i as f64 + 0.5) * hx));
        xs.push(x1);
        let mut ys = Vec::with_capacity(ny + 2);
        ys.push(y0);
        ys.extend((0..ny).map(|j| y0 + (j as f64 + 0.5) * hy));
        ys.push(y1);

        let w = nx + 2;
        let mut values = vec![0.0; w * (ny + 2)];
        for j in 0..ny {
            for i in 0..nx {
                values[(i + 1) + w * (j + 1)] = g.at2(i, j);
            }
        }
        // Face extrapolation: v = (3 v0 - v1) / 2 reproduces linear fields.
        for j in 0..ny {
            values[w * (j + 1)] = (3.0 * g.at2(0, j) - g.at2(1, j)) / 2.0;
            values[(nx + 1) + w * (j + 1)] = (3.0 * g.at2(nx - 1, j) - g.at2(nx - 2, j)) / 2.0;
        }
        for i in 0..nx {
            values[i + 1] = (3.0 * g.at2(i, 0) - g.at2(i, 1)) / 2.0;
            values[(i + 1) + w * (ny + 1)] = (3.0 * g.at2(i, ny - 1) - g.at2(i, ny - 2)) / 2.0;
        }
        // Corners from the already-extrapolated face rows.
        for j in [0, ny + 1] {
            values[w * j] = (3.0 * values[1 + w * j] - values[2 + w * j]) / 2.0;
            values[(nx + 1) + w * j] =
                (3.0 * values[nx + w * j] - values[(nx - 1) + w * j]) / 2.0;
        }

        Self { xs, ys, values, nx, ny }
    }

    fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i + (self.nx + 2) * j]
    }

    /// Cell backing node `(i, j)`; border nodes clamp to their nearest cell.
    fn owner(&self, i: usize, j: usize) -> (usize, usize) {
        (
            i.saturating_sub(1).min(self.nx - 1),
            j.saturating_sub(1).min(self.ny - 1),
        )
    }
}

/// Emits the marching-squares segments of the isocontour `{g = t}` with
/// linear interpolation along quad edges. The saddle ambiguity is resolved
/// by the sign of the quad average.
pub fn level_segments(g: &GridField, t: f64) -> Result<Vec<Segment>> {
    if g.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: g.dim() });
    }
    let nodes = NodeGrid::build(g);
    let mut segments = Vec::new();

    // Corner order within a quad: 0=(i,j) 1=(i+1,j) 2=(i+1,j+1) 3=(i,j+1).
    // Edges: 0 bottom (c0-c1), 1 right (c1-c2), 2 top (c3-c2), 3 left (c0-c3).
    for j in 0..nodes.ny + 1 {
        for i in 0..nodes.nx + 1 {
            let corner_ij = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let v = [
                nodes.value(i, j),
                nodes.value(i + 1, j),
                nodes.value(i + 1, j + 1),
                nodes.value(i, j + 1),
            ];
            let inside = [v[0] <= t, v[1] <= t, v[2] <= t, v[3] <= t];
            let case = inside.iter().enumerate().fold(0usize, |acc, (k, &b)| {
                acc | ((b as usize) << k)
            });
            if case == 0 || case == 15 {
                continue;
            }

            let p = |corner: usize| -> [f64; 2] {
                let (ci, cj) = corner_ij[corner];
                [nodes.xs[ci], nodes.ys[cj]]
            };
            // Interpolated crossing on the edge between two corners, one of
            // which is <= t and the other > t (so the values differ).
            let cross = |a: usize, b: usize| -> [f64; 2] {
                let (pa, pb) = (p(a), p(b));
                let s = (t - v[a]) / (v[b] - v[a]);
                [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])]
            };
            let edge = |e: usize| -> [f64; 2] {
                match e {
                    0 => cross(0, 1),
                    1 => cross(1, 2),
                    2 => cross(3, 2),
                    _ => cross(0, 3),
                }
            };
            let mut emit = |ea: usize, eb: usize, owner_corner: usize| {
                let (oi, oj) = corner_ij[owner_corner];
                segments.push(Segment {
                    a: edge(ea),
                    b: edge(eb),
                    owner: nodes.owner(oi, oj),
                });
            };

            match case {
                1 => emit(3, 0, 0),
                2 => emit(0, 1, 1),
                4 => emit(1, 2, 2),
                8 => emit(2, 3, 3),
                3 => emit(3, 1, 0),
                6 => emit(0, 2, 1),
                12 => emit(1, 3, 2),
                9 => emit(0, 2, 0),
                7 => emit(2, 3, 0),
                11 => emit(1, 2, 1),
                13 => emit(0, 1, 0),
                14 => emit(3, 0, 1),
                5 => {
                    // Corners 0 and 2 inside; connect through the quad when
                    // the average is also sub-threshold.
                    if (v[0] + v[1] + v[2] + v[3]) / 4.0 <= t {
                        emit(0, 1, 0);
                        emit(2, 3, 2);
                    } else {
                        emit(3, 0, 0);
                        emit(1, 2, 2);
                    }
                }
                10 => {
                    if (v[0] + v[1] + v[2] + v[3]) / 4.0 <= t {
                        emit(3, 0, 3);
                        emit(1, 2, 1);
                    } else {
                        emit(0, 1, 1);
                        emit(2, 3, 3);
                    }
                }
                _ => unreachable!(),
            }
        }
    }
    Ok(segments)
}

/// Total polyline length of the isocontour `{g = t}`. Returns 0 unless `t`
/// lies strictly between the sample extremes.
pub fn level_length(g: &GridField, t: f64) -> Result<f64> {
    if g.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: g.dim() });
    }
    if t <= g.min_sample() || t >= g.max_sample() {
        return Ok(0.0);
    }
    Ok(level_segments(g, t)?.iter().map(Segment::length).sum())
}
