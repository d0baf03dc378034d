//! Spatial discretization: radial finite-volume cells per particle and
//! axial cells across the positive electrode / separator / negative
//! electrode sandwich.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::CellParameters;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("{0} must be at least 3 cells, got {1}")]
    TooCoarse(&'static str, usize),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct SpatialGrid {
    /// Radial cells per particle.
    pub n_r: usize,
    pub n_x_p: usize,
    pub n_x_s: usize,
    pub n_x_n: usize,
}

impl SpatialGrid {
    pub fn new(n_r: usize, n_x_p: usize, n_x_s: usize, n_x_n: usize) -> Result<Self, GridError> {
        let g = Self {
            n_r,
            n_x_p,
            n_x_s,
            n_x_n,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), GridError> {
        for (name, n) in [
            ("n_r", self.n_r),
            ("n_x_p", self.n_x_p),
            ("n_x_s", self.n_x_s),
            ("n_x_n", self.n_x_n),
        ] {
            if n < 3 {
                return Err(GridError::TooCoarse(name, n));
            }
        }
        Ok(())
    }

    pub fn n_x_total(&self) -> usize {
        self.n_x_p + self.n_x_s + self.n_x_n
    }

    /// Production default: coarse enough for optimizer loops, fine enough
    /// for sub-mV voltage resolution.
    pub fn default_production() -> Self {
        Self {
            n_r: 20,
            n_x_p: 10,
            n_x_s: 6,
            n_x_n: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Positive,
    Separator,
    Negative,
}

/// Axial cell layout derived from a grid and cell geometry. Cell-centered,
/// uniform within each region, faces shared at the two interfaces.
#[derive(Debug, Clone)]
pub struct AxialLayout {
    /// Cell widths, m.
    pub dx: Vec<f64>,
    /// Region of each cell.
    pub region: Vec<Region>,
    /// Index ranges per region.
    pub range_p: std::ops::Range<usize>,
    pub range_s: std::ops::Range<usize>,
    pub range_n: std::ops::Range<usize>,
}

impl AxialLayout {
    pub fn build(params: &CellParameters, grid: &SpatialGrid) -> Self {
        let mut dx = Vec::with_capacity(grid.n_x_total());
        let mut region = Vec::with_capacity(grid.n_x_total());
        for _ in 0..grid.n_x_p {
            dx.push(params.l_p / grid.n_x_p as f64);
            region.push(Region::Positive);
        }
        for _ in 0..grid.n_x_s {
            dx.push(params.l_s / grid.n_x_s as f64);
            region.push(Region::Separator);
        }
        for _ in 0..grid.n_x_n {
            dx.push(params.l_n / grid.n_x_n as f64);
            region.push(Region::Negative);
        }
        Self {
            dx,
            region,
            range_p: 0..grid.n_x_p,
            range_s: grid.n_x_p..grid.n_x_p + grid.n_x_s,
            range_n: grid.n_x_p + grid.n_x_s..grid.n_x_p + grid.n_x_s + grid.n_x_n,
        }
    }

    pub fn n_cells(&self) -> usize {
        self.dx.len()
    }

    /// Mean of `field` over the cells of `region`, width-weighted.
    pub fn region_average(&self, field: &[f64], region: Region) -> f64 {
        let range = match region {
            Region::Positive => self.range_p.clone(),
            Region::Separator => self.range_s.clone(),
            Region::Negative => self.range_n.clone(),
        };
        let mut num = 0.0;
        let mut den = 0.0;
        for i in range {
            num += field[i] * self.dx[i];
            den += self.dx[i];
        }
        num / den
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rejects_coarse_grids() {
        assert_eq!(
            SpatialGrid::new(2, 5, 5, 5),
            Err(GridError::TooCoarse("n_r", 2))
        );
        assert_eq!(
            SpatialGrid::new(5, 5, 2, 5),
            Err(GridError::TooCoarse("n_x_s", 2))
        );
    }

    #[test]
    fn layout_covers_cell_thickness() {
        let p = CellParameters::default_nmc();
        let g = SpatialGrid::default_production();
        let layout = AxialLayout::build(&p, &g);
        let total: f64 = layout.dx.iter().sum();
        assert_relative_eq!(total, p.total_thickness(), epsilon = 1e-18);
        assert_eq!(layout.n_cells(), g.n_x_total());
        assert_eq!(layout.region[0], Region::Positive);
        assert_eq!(*layout.region.last().unwrap(), Region::Negative);
    }

    #[test]
    fn region_average_weighted() {
        let p = CellParameters::default_nmc();
        let g = SpatialGrid::new(3, 4, 3, 4).unwrap();
        let layout = AxialLayout::build(&p, &g);
        let field: Vec<f64> = (0..layout.n_cells()).map(|i| i as f64).collect();
        let avg = layout.region_average(&field, Region::Positive);
        assert_relative_eq!(avg, 1.5, epsilon = 1e-12);
    }
}
