//! Uniform cell-centered box grids in one or two dimensions.

use crate::error::{ensure_finite, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    /// 1 or 2.
    pub dim: usize,
    pub nx: usize,
    /// Always 1 for one-dimensional grids.
    pub ny: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Grid {
    pub fn new_1d(nx: usize, x_min: f64, x_max: f64) -> Result<Self> {
        let grid = Self {
            dim: 1,
            nx,
            ny: 1,
            x_min,
            x_max,
            y_min: 0.0,
            y_max: 1.0,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn new_2d(nx: usize, ny: usize, x: (f64, f64), y: (f64, f64)) -> Result<Self> {
        let grid = Self {
            dim: 2,
            nx,
            ny,
            x_min: x.0,
            x_max: x.1,
            y_min: y.0,
            y_max: y.1,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim != 1 && self.dim != 2 {
            return Err(Error::InvalidParameter(format!(
                "grid dimension must be 1 or 2 (got {})",
                self.dim
            )));
        }
        if self.nx == 0 || self.ny == 0 || (self.dim == 1 && self.ny != 1) {
            return Err(Error::InvalidParameter(format!(
                "invalid cell counts nx = {}, ny = {}",
                self.nx, self.ny
            )));
        }
        for (name, v) in [
            ("x_min", self.x_min),
            ("x_max", self.x_max),
            ("y_min", self.y_min),
            ("y_max", self.y_max),
        ] {
            ensure_finite(name, v)?;
        }
        if !(self.x_max > self.x_min && self.y_max > self.y_min) {
            return Err(Error::InvalidParameter("domain extents must be increasing".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y_max - self.y_min) / self.ny as f64
    }

    /// Cell spacing along `axis` (0 = x, 1 = y).
    pub fn spacing(&self, axis: usize) -> f64 {
        if axis == 0 {
            self.dx()
        } else {
            self.dy()
        }
    }

    /// Length in 1D, area in 2D.
    pub fn cell_volume(&self) -> f64 {
        if self.dim == 1 {
            self.dx()
        } else {
            self.dx() * self.dy()
        }
    }

    /// Row-major index, x fastest.
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    pub fn center(&self, cell: usize) -> [f64; 2] {
        let ix = cell % self.nx;
        let iy = cell / self.nx;
        [
            self.x_min + (ix as f64 + 0.5) * self.dx(),
            if self.dim == 1 {
                0.5 * (self.y_min + self.y_max)
            } else {
                self.y_min + (iy as f64 + 0.5) * self.dy()
            },
        ]
    }

    pub fn same_shape(&self, other: &Grid) -> bool {
        self.dim == other.dim && self.nx == other.nx && self.ny == other.ny
    }
}

/// Pairwise (cascade) summation; the order is fixed by the input order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        values.iter().sum()
    } else {
        let mid = values.len() / 2;
        pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
    }
}
