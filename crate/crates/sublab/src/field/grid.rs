use crate::error::{Error, Result};
use crate::field::AnalyticTestFunction;

/// Samples of a scalar function at the cell centers of a uniform box grid.
///
/// Axis 0 varies fastest in `samples`, so in 2-D the linear index of cell
/// `(ix, iy)` is `ix + nx * iy`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    bounds: Vec<(f64, f64)>,
    resolution: Vec<usize>,
    spacing: Vec<f64>,
    samples: Vec<f64>,
}

impl GridField {
    /// Builds a field from explicit samples. `samples.len()` must equal the
    /// product of the per-axis resolutions.
    pub fn from_samples(
        bounds: &[(f64, f64)],
        resolution: &[usize],
        samples: Vec<f64>,
    ) -> Result<Self> {
        if bounds.len() != resolution.len() {
            return Err(Error::DimensionMismatch {
                expected: bounds.len(),
                got: resolution.len(),
            });
        }
        if bounds.is_empty() {
            return Err(Error::InvalidParameter("grid must have at least one axis".into()));
        }
        for &(lo, hi) in bounds {
            if !(hi > lo) {
                return Err(Error::InvalidParameter(format!(
                    "degenerate box axis [{lo}, {hi}]"
                )));
            }
        }
        for &r in resolution {
            if r < 2 {
                return Err(Error::InvalidParameter(format!(
                    "resolution {r} < 2 on an axis"
                )));
            }
        }
        let n: usize = resolution.iter().product();
        if samples.len() != n {
            return Err(Error::InvalidParameter(format!(
                "expected {n} samples, got {}",
                samples.len()
            )));
        }
        let spacing = bounds
            .iter()
            .zip(resolution)
            .map(|(&(lo, hi), &r)| (hi - lo) / r as f64)
            .collect();
        Ok(Self { bounds: bounds.to_vec(), resolution: resolution.to_vec(), spacing, samples })
    }

    /// Evaluates `f` at every cell center.
    pub fn sample(
        f: &AnalyticTestFunction,
        bounds: &[(f64, f64)],
        resolution: &[usize],
    ) -> Result<Self> {
        if f.dim() != bounds.len() {
            return Err(Error::DimensionMismatch { expected: f.dim(), got: bounds.len() });
        }
        let mut grid = Self::from_samples(
            bounds,
            resolution,
            vec![0.0; resolution.iter().product()],
        )?;
        let dim = bounds.len();
        let mut point = vec![0.0; dim];
        for idx in 0..grid.samples.len() {
            grid.center(idx, &mut point);
            grid.samples[idx] = f.value(&point);
        }
        Ok(grid)
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Volume of a single cell.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Writes the center coordinates of cell `idx` into `point`.
    pub fn center(&self, idx: usize, point: &mut [f64]) {
        let mut rem = idx;
        for axis in 0..self.bounds.len() {
            let i = rem % self.resolution[axis];
            rem /= self.resolution[axis];
            point[axis] = self.bounds[axis].0 + (i as f64 + 0.5) * self.spacing[axis];
        }
    }

    /// Linear index from 2-D cell coordinates. Panics unless `dim() == 2`.
    pub fn index2(&self, ix: usize, iy: usize) -> usize {
        debug_assert_eq!(self.dim(), 2);
        ix + self.resolution[0] * iy
    }

    /// Sample value at 2-D cell coordinates.
    pub fn at2(&self, ix: usize, iy: usize) -> f64 {
        self.samples[self.index2(ix, iy)]
    }

    pub fn min_sample(&self) -> f64 {
        self.samples.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_sample(&self) -> f64 {
        self.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// A new field with every sample mapped through `f`. Geometry is shared.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            bounds: self.bounds.clone(),
            resolution: self.resolution.clone(),
            spacing: self.spacing.clone(),
            samples: self.samples.iter().map(|&v| f(v)).collect(),
        }
    }
}
