//! Uniform 1-D grids and snapshots on them.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    x_min: f64,
    dx: f64,
    nx: usize,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, nx: usize) -> Result<Self> {
        if nx < 3 {
            return Err(Error::param("nx", "nx >= 3", nx as f64));
        }
        if !(x_max > x_min) {
            return Err(Error::param("x_max", "x_max > x_min", x_max));
        }
        Ok(Self {
            x_min,
            dx: (x_max - x_min) / (nx - 1) as f64,
            nx,
        })
    }

    /// Grid `[center - half_width, center + half_width]` with spacing close
    /// to `dx` and `center` on a node.
    pub fn centered(center: f64, half_width: f64, dx: f64) -> Result<Self> {
        if !(dx > 0.0) {
            return Err(Error::param("dx", "dx > 0", dx));
        }
        if !(half_width > dx) {
            return Err(Error::param("half_width", "half_width > dx", half_width));
        }
        let half = math::ceil(half_width / dx) as usize;
        Ok(Self {
            x_min: center - half as f64 * dx,
            dx,
            nx: 2 * half + 1,
        })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.nx - 1)
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }

    /// Nearest node index to `x`, clamped to the grid.
    pub fn index_of(&self, x: f64) -> usize {
        let k = math::round((x - self.x_min) / self.dx);
        (k.max(0.0) as usize).min(self.nx - 1)
    }

    pub fn same_as(&self, other: &Grid1D) -> bool {
        self.nx == other.nx
            && (self.x_min - other.x_min).abs() <= 1e-12 * (1.0 + self.x_min.abs())
            && (self.dx - other.dx).abs() <= 1e-14 * self.dx
    }
}

/// `v(., tau)` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: Grid1D,
    pub tau: f64,
    pub values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid1D, tau: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.nx() {
            return Err(Error::GridMismatch);
        }
        if let Some(i) = values.iter().position(|&v| !(v > 0.0)) {
            return Err(Error::NonPositive { tau, index: i });
        }
        Ok(Self { grid, tau, values })
    }

    pub fn from_fn(grid: Grid1D, tau: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..grid.nx()).map(|i| f(grid.x(i))).collect();
        Self::new(grid, tau, values)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Linear interpolation; constant beyond the ends.
    pub fn sample(&self, x: f64) -> f64 {
        let pos = (x - self.grid.x_min()) / self.grid.dx();
        if pos <= 0.0 {
            return self.values[0];
        }
        let n = self.values.len();
        if pos >= (n - 1) as f64 {
            return self.values[n - 1];
        }
        let i = math::floor(pos) as usize;
        let t = pos - i as f64;
        self.values[i] * (1.0 - t) + self.values[i + 1] * t
    }

    /// Index range of nodes inside `[a, b]`.
    pub fn window(&self, a: f64, b: f64) -> core::ops::Range<usize> {
        let g = &self.grid;
        let lo = math::ceil((a - g.x_min()) / g.dx() - 1e-9).max(0.0) as usize;
        let hi = (math::floor((b - g.x_min()) / g.dx() + 1e-9) + 1.0).max(0.0) as usize;
        lo.min(g.nx())..hi.min(g.nx())
    }
}

/// Max-norm of `a - b` over nodes in `[lo, hi]`.
pub fn max_gap(a: &Field, b: &Field, lo: f64, hi: f64) -> Result<f64> {
    if !a.grid.same_as(&b.grid) {
        return Err(Error::GridMismatch);
    }
    Ok(a.window(lo, hi)
        .map(|i| (a.values[i] - b.values[i]).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_and_window() {
        let g = Grid1D::new(-1.0, 1.0, 201).unwrap();
        assert!((g.dx() - 0.01).abs() < 1e-15);
        let c = Grid1D::centered(0.5, 2.0, 0.01).unwrap();
        assert_eq!(c.nx(), 401);
        assert!((c.x(200) - 0.5).abs() < 1e-14);
        let f = Field::from_fn(g, 0.0, |x| 2.0 + x).unwrap();
        let w = f.window(-0.5, 0.5);
        assert_eq!((w.start, w.end), (50, 151));
        assert!((f.sample(0.123) - 2.123).abs() < 1e-12);
        assert!(Grid1D::new(0.0, 1.0, 2).is_err());
    }

    #[test]
    fn positivity_enforced() {
        let g = Grid1D::new(0.0, 1.0, 3).unwrap();
        assert!(matches!(
            Field::new(g, 0.0, alloc::vec![1.0, 0.0, 1.0]),
            Err(Error::NonPositive { index: 1, .. })
        ));
    }
}
