//! Uniform 1D lattice, detector layout, and quadrature.

use crate::error::{Error, Result};

/// Uniform lattice on [x_min, x_max] with n points and spacing
/// dx = (x_max - x_min) / (n - 1). Endpoints are stored points; the
/// dynamics treats them as Dirichlet walls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    n: usize,
    dx: f64,
}

impl Grid1D {
    /// At least 8 points so every stencil and detector layout fits.
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "bounds must be finite, got [{x_min}, {x_max}]"
            )));
        }
        if x_min >= x_max {
            return Err(Error::InvalidGrid(format!(
                "x_min = {x_min} must lie below x_max = {x_max}"
            )));
        }
        if n < 8 {
            return Err(Error::InvalidGrid(format!("need at least 8 points, got {n}")));
        }
        let dx = (x_max - x_min) / (n - 1) as f64;
        Ok(Grid1D { x_min, x_max, n, dx })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn point(&self, i: usize) -> f64 {
        debug_assert!(i < self.n);
        self.x_min + i as f64 * self.dx
    }

    pub fn positions(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.point(i))
    }

    /// Index of the grid point nearest to x, clamped to the lattice.
    pub fn nearest_index(&self, x: f64) -> usize {
        let raw = ((x - self.x_min) / self.dx).round();
        raw.clamp(0.0, (self.n - 1) as f64) as usize
    }

    /// Trapezoid quadrature over the full lattice.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        assert_eq!(values.len(), self.n, "sample count must match the grid");
        let interior: f64 = values[1..self.n - 1].iter().sum();
        self.dx * (interior + 0.5 * (values[0] + values[self.n - 1]))
    }
}

/// Detector placement. Positions snap to the nearest grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DetectorSpec {
    /// Detector occupies x >= x_d.
    HalfLine { x_d: f64 },
    /// Detector occupies a <= x <= b.
    Interval { a: f64, b: f64 },
}

/// One signed crossing of the detector boundary. `index` is the last
/// complement point adjacent to the detector; `sign` is +1 where the
/// outward direction (complement into detector) points toward +x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    pub index: usize,
    pub sign: f64,
}

impl BoundaryPoint {
    /// Index of the detector-side neighbor across this crossing.
    pub fn detector_neighbor(&self) -> usize {
        if self.sign > 0.0 {
            self.index + 1
        } else {
            self.index - 1
        }
    }
}

/// Partition of the grid into a detector and its complement, with the
/// signed boundary descriptors every flux computation uses.
///
/// Layout rules: the detector spans at least 2 points, the complement at
/// least 4, and each boundary keeps one complement point on the stencil
/// side, so a half line may not start before index 2 and an interval must
/// end by index n - 3.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    grid: Grid1D,
    spec: DetectorSpec,
    mask: Vec<f64>,
    boundary: Vec<BoundaryPoint>,
}

impl Region {
    pub fn new(grid: Grid1D, spec: DetectorSpec) -> Result<Self> {
        let n = grid.n();
        let (det_lo, det_hi) = match spec {
            DetectorSpec::HalfLine { x_d } => {
                if !x_d.is_finite() || x_d <= grid.x_min() || x_d >= grid.x_max() {
                    return Err(Error::InvalidRegion(format!(
                        "detector edge {x_d} must lie strictly inside ({}, {})",
                        grid.x_min(),
                        grid.x_max()
                    )));
                }
                (grid.nearest_index(x_d), n - 1)
            }
            DetectorSpec::Interval { a, b } => {
                if !a.is_finite() || !b.is_finite() || a >= b {
                    return Err(Error::InvalidRegion(format!(
                        "interval bounds must be finite with a < b, got [{a}, {b}]"
                    )));
                }
                if a <= grid.x_min() || b >= grid.x_max() {
                    return Err(Error::InvalidRegion(format!(
                        "interval [{a}, {b}] must lie strictly inside ({}, {})",
                        grid.x_min(),
                        grid.x_max()
                    )));
                }
                (grid.nearest_index(a), grid.nearest_index(b))
            }
        };

        if det_hi - det_lo + 1 < 2 {
            return Err(Error::InvalidRegion(format!(
                "detector spans {} grid point(s) after snapping; need at least 2",
                det_hi - det_lo + 1
            )));
        }
        if det_lo < 2 {
            return Err(Error::InvalidRegion(
                "detector reaches the left grid edge; keep 2 complement points there".into(),
            ));
        }
        if matches!(spec, DetectorSpec::Interval { .. }) && det_hi > n - 3 {
            return Err(Error::InvalidRegion(
                "detector reaches the right grid edge; keep 2 complement points there".into(),
            ));
        }
        let comp_len = n - (det_hi - det_lo + 1);
        if comp_len < 4 {
            return Err(Error::InvalidRegion(format!(
                "complement spans {comp_len} grid points after snapping; need at least 4"
            )));
        }

        let mut mask = vec![1.0; n];
        for m in &mut mask[det_lo..=det_hi] {
            *m = 0.0;
        }
        let mut boundary = vec![BoundaryPoint {
            index: det_lo - 1,
            sign: 1.0,
        }];
        if det_hi < n - 1 {
            boundary.push(BoundaryPoint {
                index: det_hi + 1,
                sign: -1.0,
            });
        }
        Ok(Region {
            grid,
            spec,
            mask,
            boundary,
        })
    }

    pub fn grid(&self) -> Grid1D {
        self.grid
    }

    pub fn spec(&self) -> DetectorSpec {
        self.spec
    }

    /// Characteristic vector of the complement: 1 there, 0 on the detector.
    pub fn complement_mask(&self) -> &[f64] {
        &self.mask
    }

    pub fn detector_mask(&self) -> Vec<f64> {
        self.mask.iter().map(|m| 1.0 - m).collect()
    }

    pub fn boundary(&self) -> &[BoundaryPoint] {
        &self.boundary
    }

    pub fn in_complement(&self, i: usize) -> bool {
        self.mask[i] != 0.0
    }

    pub fn complement_len(&self) -> usize {
        self.mask.iter().filter(|m| **m != 0.0).count()
    }

    pub fn detector_len(&self) -> usize {
        self.grid.n() - self.complement_len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn spacing_and_quadrature_reference_values() {
        let g = Grid1D::new(-20.0, 20.0, 801).unwrap();
        assert_eq!(g.dx(), 0.05);
        let q = g.integrate(&vec![1.0; 801]);
        assert!((q - 40.0).abs() <= 40.0 * 1e-12);
        assert!((g.point(800) - 20.0).abs() <= 1e-12);

        let g2 = Grid1D::new(0.0, 1.0, 11).unwrap();
        assert!((g2.point(5) - 0.5).abs() <= 1e-15);
    }

    #[test]
    fn quadrature_is_linear_in_samples() {
        let g = Grid1D::new(-3.0, 5.0, 33).unwrap();
        let a: Vec<f64> = g.positions().map(|x| x * x).collect();
        let b: Vec<f64> = g.positions().map(|x| (0.7 * x).sin()).collect();
        let sum: Vec<f64> = a.iter().zip(&b).map(|(u, v)| u + 2.0 * v).collect();
        let lhs = g.integrate(&sum);
        let rhs = g.integrate(&a) + 2.0 * g.integrate(&b);
        assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
    }

    #[test]
    fn nearest_index_rounds_and_clamps() {
        let g = Grid1D::new(-20.0, 20.0, 801).unwrap();
        assert_eq!(g.nearest_index(5.0), 500);
        assert_eq!(g.nearest_index(5.024), 500);
        assert_eq!(g.nearest_index(5.026), 501);
        assert_eq!(g.nearest_index(-100.0), 0);
        assert_eq!(g.nearest_index(100.0), 800);
    }

    #[test]
    fn grid_constructor_rejects_bad_input() {
        assert!(Grid1D::new(f64::NAN, 1.0, 64).is_err());
        assert!(Grid1D::new(0.0, f64::INFINITY, 64).is_err());
        assert!(Grid1D::new(1.0, 1.0, 64).is_err());
        assert!(Grid1D::new(2.0, 1.0, 64).is_err());
        assert!(Grid1D::new(0.0, 1.0, 7).is_err());
        assert!(Grid1D::new(0.0, 1.0, 8).is_ok());
    }

    #[test]
    fn half_line_region_reference_layout() {
        let g = Grid1D::new(-20.0, 20.0, 801).unwrap();
        let r = Region::new(g, DetectorSpec::HalfLine { x_d: 5.0 }).unwrap();
        assert_eq!(r.boundary().len(), 1);
        assert_eq!(r.boundary()[0].index, 499);
        assert_eq!(r.boundary()[0].sign, 1.0);
        assert!((g.point(499) - 4.95).abs() <= 1e-12);
        assert_eq!(r.boundary()[0].detector_neighbor(), 500);
        assert_eq!(r.detector_len(), 301);
        assert_eq!(r.complement_len(), 500);
        assert!(r.in_complement(499));
        assert!(!r.in_complement(500));
    }

    #[test]
    fn interval_region_reference_layout() {
        let g = Grid1D::new(-20.0, 20.0, 801).unwrap();
        let r = Region::new(g, DetectorSpec::Interval { a: 5.0, b: 8.0 }).unwrap();
        let b = r.boundary();
        assert_eq!(b.len(), 2);
        assert_eq!((b[0].index, b[0].sign), (499, 1.0));
        assert_eq!((b[1].index, b[1].sign), (561, -1.0));
        assert!((g.point(561) - 8.05).abs() <= 1e-12);
        assert_eq!(b[1].detector_neighbor(), 560);
        assert_eq!(r.detector_len(), 61);
    }

    #[test]
    fn region_rejects_degenerate_layouts() {
        let g = Grid1D::new(-20.0, 20.0, 801).unwrap();
        // outside or touching the span
        assert!(Region::new(g, DetectorSpec::HalfLine { x_d: -20.0 }).is_err());
        assert!(Region::new(g, DetectorSpec::HalfLine { x_d: 25.0 }).is_err());
        // detector narrower than 2 points after snapping
        assert!(Region::new(g, DetectorSpec::HalfLine { x_d: 19.99 }).is_err());
        // complement narrower than 4 points
        assert!(Region::new(g, DetectorSpec::HalfLine { x_d: -19.9 }).is_err());
        // interval: inverted, touching the right edge, sub-resolution width
        assert!(Region::new(g, DetectorSpec::Interval { a: 8.0, b: 5.0 }).is_err());
        assert!(Region::new(g, DetectorSpec::Interval { a: 5.0, b: 19.95 }).is_err());
        assert!(Region::new(g, DetectorSpec::Interval { a: 5.0, b: 5.01 }).is_err());
    }

    #[test]
    fn region_construction_is_reproducible() {
        let g = Grid1D::new(-40.0, 40.0, 1601).unwrap();
        let spec = DetectorSpec::Interval { a: 5.0, b: 8.0 };
        assert_eq!(Region::new(g, spec).unwrap(), Region::new(g, spec).unwrap());
    }

    proptest! {
        /// Masks partition the grid and every boundary point sits on the
        /// complement side with its detector neighbor on the detector side.
        #[test]
        fn partition_and_boundary_adjacency(
            n in 16usize..200,
            lo_frac in 0.1f64..0.9,
            hi_frac in 0.1f64..0.9,
            half in proptest::bool::ANY,
        ) {
            let g = Grid1D::new(-10.0, 10.0, n).unwrap();
            let a = -10.0 + 20.0 * lo_frac.min(hi_frac);
            let b = -10.0 + 20.0 * lo_frac.max(hi_frac);
            let spec = if half {
                DetectorSpec::HalfLine { x_d: a }
            } else {
                DetectorSpec::Interval { a, b }
            };
            if let Ok(r) = Region::new(g, spec) {
                let det = r.detector_mask();
                for (m, d) in r.complement_mask().iter().zip(&det) {
                    prop_assert_eq!(m + d, 1.0);
                }
                prop_assert!(r.detector_len() >= 2);
                prop_assert!(r.complement_len() >= 4);
                for bp in r.boundary() {
                    prop_assert!(r.in_complement(bp.index));
                    prop_assert!(!r.in_complement(bp.detector_neighbor()));
                }
            }
        }
    }
}
