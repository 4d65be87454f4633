use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::field::GridField;

/// Per-cell classification of a 2-D masked domain.
///
/// Boundary-layer cells sit on the exterior side: they are exactly the
/// non-interior cells 4-adjacent to an interior cell. Dirichlet data lives
/// at their centers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellClass {
    Interior,
    Boundary,
    Exterior,
}

/// Boundary lengths of a masked domain, kept separately for the enclosing
/// curve and each removed component so hypotheses of the form
/// "every removed boundary is at least sqrt(eps) long" can be checked.
#[derive(Debug, Clone)]
pub struct BoundaryInfo {
    pub outer: f64,
    pub removed: Vec<f64>,
}

impl BoundaryInfo {
    pub fn total(&self) -> f64 {
        self.outer + self.removed.iter().sum::<f64>()
    }
}

pub type SignedDistanceFn = dyn Fn(f64, f64) -> f64 + Send + Sync;
pub type PredicateFn = dyn Fn(f64, f64) -> bool + Send + Sync;

/// A 2-D domain discretized on a uniform square-cell grid.
///
/// Interior cells never touch the outermost ring of the grid, so every
/// interior cell has four classified neighbors. Masks are immutable; the
/// derived distance field is computed once on demand.
pub struct DomainMask {
    bounds: [(f64, f64); 2],
    resolution: [usize; 2],
    spacing: f64,
    classes: Vec<CellClass>,
    interior_count: usize,
    signed_distance: Option<Arc<SignedDistanceFn>>,
    predicate: Option<Arc<PredicateFn>>,
    boundary_info: Option<BoundaryInfo>,
    edt_cache: OnceLock<GridField>,
}

impl std::fmt::Debug for DomainMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DomainMask")
            .field("bounds", &self.bounds)
            .field("resolution", &self.resolution)
            .field("interior_count", &self.interior_count)
            .finish()
    }
}

impl Clone for DomainMask {
    fn clone(&self) -> Self {
        Self {
            bounds: self.bounds,
            resolution: self.resolution,
            spacing: self.spacing,
            classes: self.classes.clone(),
            interior_count: self.interior_count,
            signed_distance: self.signed_distance.clone(),
            predicate: self.predicate.clone(),
            boundary_info: self.boundary_info.clone(),
            edt_cache: OnceLock::new(),
        }
    }
}

impl DomainMask {
    /// Classifies the grid from an inside predicate evaluated at cell
    /// centers. Cells on the outermost ring are never interior, so a
    /// predicate that covers the whole box yields a domain whose absorbing
    /// boundary is the box edge.
    pub fn from_predicate(
        bounds: [(f64, f64); 2],
        resolution: [usize; 2],
        predicate: Arc<PredicateFn>,
    ) -> Result<Self> {
        let inside = Self::inside_flags(bounds, resolution, predicate.as_ref())?;
        let mut mask = Self::classify(bounds, resolution, &inside)?;
        mask.predicate = Some(predicate);
        Ok(mask)
    }

    /// Builds a mask from an explicit set of inside cells (row-major flags).
    pub fn from_cells(
        bounds: [(f64, f64); 2],
        resolution: [usize; 2],
        inside: &[bool],
    ) -> Result<Self> {
        if inside.len() != resolution[0] * resolution[1] {
            return Err(Error::InvalidParameter(format!(
                "expected {} inside flags, got {}",
                resolution[0] * resolution[1],
                inside.len()
            )));
        }
        Self::classify(bounds, resolution, inside)
    }

    /// Disk of the given radius centered at the origin, padded so the
    /// boundary stays away from the grid edge.
    pub fn disk(radius: f64, resolution: usize) -> Result<Self> {
        Self::disk_in_box(radius, radius * 1.05, resolution)
    }

    /// Disk of the given radius inside the box `[-half, half]^2`.
    pub fn disk_in_box(radius: f64, half: f64, resolution: usize) -> Result<Self> {
        if !(radius > 0.0) || half <= radius * 0.999 {
            return Err(Error::InvalidParameter(format!(
                "disk radius {radius} does not fit half-width {half}"
            )));
        }
        let r = radius;
        let mut mask = Self::from_predicate(
            [(-half, half), (-half, half)],
            [resolution, resolution],
            Arc::new(move |x, y| x * x + y * y < r * r),
        )?;
        mask.signed_distance = Some(Arc::new(move |x, y| r - (x * x + y * y).sqrt()));
        mask.boundary_info = Some(BoundaryInfo {
            outer: 2.0 * std::f64::consts::PI * r,
            removed: Vec::new(),
        });
        Ok(mask)
    }

    /// Axis-aligned rectangle covering the whole box: the absorbing boundary
    /// is the box edge itself.
    pub fn rectangle(bounds: [(f64, f64); 2], resolution: [usize; 2]) -> Result<Self> {
        let mut mask =
            Self::from_predicate(bounds, resolution, Arc::new(|_, _| true))?;
        let (x0, x1) = bounds[0];
        let (y0, y1) = bounds[1];
        mask.signed_distance = Some(Arc::new(move |x, y| {
            (x - x0).min(x1 - x).min(y - y0).min(y1 - y)
        }));
        mask.boundary_info = Some(BoundaryInfo {
            outer: 2.0 * ((x1 - x0) + (y1 - y0)),
            removed: Vec::new(),
        });
        Ok(mask)
    }

    pub fn with_signed_distance(mut self, sd: Arc<SignedDistanceFn>) -> Self {
        self.signed_distance = Some(sd);
        self
    }

    pub fn with_boundary_info(mut self, info: BoundaryInfo) -> Self {
        self.boundary_info = Some(info);
        self
    }

    fn inside_flags(
        bounds: [(f64, f64); 2],
        resolution: [usize; 2],
        predicate: &PredicateFn,
    ) -> Result<Vec<bool>> {
        let grid = Self::check_geometry(bounds, resolution)?;
        let (nx, ny) = (resolution[0], resolution[1]);
        let h = grid;
        let mut inside = vec![false; nx * ny];
        for iy in 0..ny {
            let y = bounds[1].0 + (iy as f64 + 0.5) * h;
            for ix in 0..nx {
                let x = bounds[0].0 + (ix as f64 + 0.5) * h;
                inside[ix + nx * iy] = predicate(x, y);
            }
        }
        Ok(inside)
    }

    fn check_geometry(bounds: [(f64, f64); 2], resolution: [usize; 2]) -> Result<f64> {
        for &(lo, hi) in &bounds {
            if !(hi > lo) {
                return Err(Error::InvalidParameter(format!("degenerate box axis [{lo}, {hi}]")));
            }
        }
        if resolution[0] < 3 || resolution[1] < 3 {
            return Err(Error::InvalidParameter("mask resolution must be >= 3 per axis".into()));
        }
        let hx = (bounds[0].1 - bounds[0].0) / resolution[0] as f64;
        let hy = (bounds[1].1 - bounds[1].0) / resolution[1] as f64;
        if (hx - hy).abs() > 1e-9 * hx.max(hy) {
            return Err(Error::InvalidParameter(format!(
                "mask cells must be square: hx = {hx}, hy = {hy}"
            )));
        }
        Ok(hx)
    }

    fn classify(
        bounds: [(f64, f64); 2],
        resolution: [usize; 2],
        inside: &[bool],
    ) -> Result<Self> {
        let h = Self::check_geometry(bounds, resolution)?;
        let (nx, ny) = (resolution[0], resolution[1]);
        let mut classes = vec![CellClass::Exterior; nx * ny];
        let mut interior_count = 0usize;
        for iy in 0..ny {
            for ix in 0..nx {
                let on_ring = ix == 0 || iy == 0 || ix == nx - 1 || iy == ny - 1;
                if inside[ix + nx * iy] && !on_ring {
                    classes[ix + nx * iy] = CellClass::Interior;
                    interior_count += 1;
                }
            }
        }
        // Boundary layer: non-interior cells 4-adjacent to an interior cell.
        for iy in 0..ny {
            for ix in 0..nx {
                let idx = ix + nx * iy;
                if classes[idx] == CellClass::Interior {
                    continue;
                }
                let mut adj = false;
                if ix > 0 {
                    adj |= classes[idx - 1] == CellClass::Interior;
                }
                if ix + 1 < nx {
                    adj |= classes[idx + 1] == CellClass::Interior;
                }
                if iy > 0 {
                    adj |= classes[idx - nx] == CellClass::Interior;
                }
                if iy + 1 < ny {
                    adj |= classes[idx + nx] == CellClass::Interior;
                }
                if adj {
                    classes[idx] = CellClass::Boundary;
                }
            }
        }
        Ok(Self {
            bounds,
            resolution,
            spacing: h,
            classes,
            interior_count,
            signed_distance: None,
            predicate: None,
            boundary_info: None,
            edt_cache: OnceLock::new(),
        })
    }

    pub fn bounds(&self) -> [(f64, f64); 2] {
        self.bounds
    }

    pub fn resolution(&self) -> [usize; 2] {
        self.resolution
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn classes(&self) -> &[CellClass] {
        &self.classes
    }

    pub fn class(&self, ix: usize, iy: usize) -> CellClass {
        self.classes[ix + self.resolution[0] * iy]
    }

    pub fn interior_count(&self) -> usize {
        self.interior_count
    }

    /// Area covered by interior cells.
    pub fn area(&self) -> f64 {
        self.interior_count as f64 * self.spacing * self.spacing
    }

    pub fn signed_distance(&self) -> Option<&Arc<SignedDistanceFn>> {
        self.signed_distance.as_ref()
    }

    pub fn boundary_info(&self) -> Option<&BoundaryInfo> {
        self.boundary_info.as_ref()
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> (f64, f64) {
        (
            self.bounds[0].0 + (ix as f64 + 0.5) * self.spacing,
            self.bounds[1].0 + (iy as f64 + 0.5) * self.spacing,
        )
    }

    /// Grid cell containing the point, or `None` outside the box.
    pub fn locate(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let fx = (x - self.bounds[0].0) / self.spacing;
        let fy = (y - self.bounds[1].0) / self.spacing;
        if fx < 0.0 || fy < 0.0 {
            return None;
        }
        let (ix, iy) = (fx as usize, fy as usize);
        if ix >= self.resolution[0] || iy >= self.resolution[1] {
            return None;
        }
        Some((ix, iy))
    }

    /// True when the point lies in an interior cell.
    pub fn is_interior_point(&self, x: f64, y: f64) -> bool {
        match self.locate(x, y) {
            Some((ix, iy)) => self.class(ix, iy) == CellClass::Interior,
            None => false,
        }
    }

    pub fn interior_cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let nx = self.resolution[0];
        self.classes
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == CellClass::Interior)
            .map(move |(idx, _)| (idx % nx, idx / nx))
    }

    /// Distance from each cell center to the nearest non-interior cell
    /// center, as a grid field (zero on non-interior cells). Cached.
    pub fn interior_distance(&self) -> &GridField {
        self.edt_cache.get_or_init(|| {
            let (nx, ny) = (self.resolution[0], self.resolution[1]);
            let sq = super::distance::squared_edt(nx, ny, |idx| {
                self.classes[idx] != CellClass::Interior
            });
            let h = self.spacing;
            let samples = sq.iter().map(|&d| d.sqrt() * h).collect();
            GridField::from_samples(
                &[self.bounds[0], self.bounds[1]],
                &[nx, ny],
                samples,
            )
            .expect("mask geometry is valid")
        })
    }

    /// Rebuilds the mask at a new resolution. Works for predicate-backed
    /// masks; explicit cell masks are coarsened by 2x2 majority vote when
    /// the requested resolution is exactly half the current one.
    pub fn rebuild(&self, resolution: [usize; 2]) -> Result<Self> {
        if let Some(pred) = &self.predicate {
            let mut mask = Self::from_predicate(self.bounds, resolution, Arc::clone(pred))?;
            mask.signed_distance = self.signed_distance.clone();
            mask.boundary_info = self.boundary_info.clone();
            return Ok(mask);
        }
        let (nx, ny) = (self.resolution[0], self.resolution[1]);
        if resolution == [nx / 2, ny / 2] && nx % 2 == 0 && ny % 2 == 0 {
            let (cx, cy) = (nx / 2, ny / 2);
            let mut inside = vec![false; cx * cy];
            for iy in 0..cy {
                for ix in 0..cx {
                    let mut votes = 0;
                    for (dx, dy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                        if self.class(2 * ix + dx, 2 * iy + dy) == CellClass::Interior {
                            votes += 1;
                        }
                    }
                    inside[ix + cx * iy] = votes >= 3;
                }
            }
            let mut mask = Self::from_cells(self.bounds, [cx, cy], &inside)?;
            mask.signed_distance = self.signed_distance.clone();
            mask.boundary_info = self.boundary_info.clone();
            return Ok(mask);
        }
        Err(Error::InvalidParameter(
            "cell masks can only be rebuilt at exactly half resolution".into(),
        ))
    }

    /// Checks the classification invariants; used by tests.
    pub fn validate(&self) -> Result<()> {
        let (nx, ny) = (self.resolution[0], self.resolution[1]);
        for iy in 0..ny {
            for ix in 0..nx {
                let idx = ix + nx * iy;
                match self.classes[idx] {
                    CellClass::Interior => {
                        if ix == 0 || iy == 0 || ix == nx - 1 || iy == ny - 1 {
                            return Err(Error::InvalidParameter(format!(
                                "interior cell ({ix}, {iy}) on the grid edge"
                            )));
                        }
                    }
                    CellClass::Boundary => {
                        let mut adj = false;
                        if ix > 0 {
                            adj |= self.classes[idx - 1] == CellClass::Interior;
                        }
                        if ix + 1 < nx {
                            adj |= self.classes[idx + 1] == CellClass::Interior;
                        }
                        if iy > 0 {
                            adj |= self.classes[idx - nx] == CellClass::Interior;
                        }
                        if iy + 1 < ny {
                            adj |= self.classes[idx + nx] == CellClass::Interior;
                        }
                        if !adj {
                            return Err(Error::InvalidParameter(format!(
                                "boundary cell ({ix}, {iy}) not adjacent to interior"
                            )));
                        }
                    }
                    CellClass::Exterior => {}
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_mask_classification() {
        let mask = DomainMask::disk(1.0, 128).unwrap();
        mask.validate().unwrap();
        let area = mask.area();
        assert!((area - std::f64::consts::PI).abs() < 0.05, "area {area}");
        // Center cell is interior, corner is exterior.
        assert!(mask.is_interior_point(0.0, 0.0));
        assert!(!mask.is_interior_point(1.02, 1.02));
    }

    #[test]
    fn rectangle_boundary_is_grid_ring() {
        let mask = DomainMask::rectangle([(0.0, 1.0), (0.0, 1.0)], [32, 32]).unwrap();
        mask.validate().unwrap();
        assert_eq!(mask.interior_count(), 30 * 30);
        assert_eq!(mask.class(0, 10), CellClass::Boundary);
        assert_eq!(mask.class(16, 16), CellClass::Interior);
    }

    #[test]
    fn square_cells_required() {
        let r = DomainMask::rectangle([(0.0, 2.0), (0.0, 1.0)], [32, 32]);
        assert!(r.is_err());
    }

    #[test]
    fn rebuild_preserves_metadata() {
        let mask = DomainMask::disk(1.0, 64).unwrap();
        let fine = mask.rebuild([128, 128]).unwrap();
        fine.validate().unwrap();
        assert!(fine.signed_distance().is_some());
        assert!(fine.boundary_info().is_some());
    }

    #[test]
    fn cell_mask_coarsening() {
        let mask = DomainMask::disk(1.0, 64).unwrap();
        let inside: Vec<bool> =
            mask.classes().iter().map(|&c| c == CellClass::Interior).collect();
        let cells = DomainMask::from_cells(mask.bounds(), mask.resolution(), &inside).unwrap();
        let coarse = cells.rebuild([32, 32]).unwrap();
        coarse.validate().unwrap();
        assert!(coarse.interior_count() > 0);
    }
}
