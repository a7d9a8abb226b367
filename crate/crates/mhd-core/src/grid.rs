//! Periodic structured grid.

use crate::error::{MhdError, Result};

/// Uniform periodic box grid. Node `(i, j, k)` sits at
/// `(i * hx, j * hy, k * hz)`; indexing wraps around in every axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dims: [usize; 3],
    lengths: [f64; 3],
}

impl Grid {
    /// Cube grid with side length 2π, the default test domain.
    pub fn cube(n: usize) -> Self {
        Self::new([n, n, n], [std::f64::consts::TAU; 3]).expect("cube grid")
    }

    pub fn new(dims: [usize; 3], lengths: [f64; 3]) -> Result<Self> {
        for axis in 0..3 {
            if dims[axis] < 4 {
                return Err(MhdError::InvalidParameter(format!(
                    "grid needs at least 4 points per axis, got {} on axis {axis}",
                    dims[axis]
                )));
            }
            if !(lengths[axis] > 0.0 && lengths[axis].is_finite()) {
                return Err(MhdError::InvalidParameter(format!(
                    "box length on axis {axis} must be positive, got {}",
                    lengths[axis]
                )));
            }
        }
        Ok(Self { dims, lengths })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn lengths(&self) -> [f64; 3] {
        self.lengths
    }

    pub fn spacing(&self) -> [f64; 3] {
        [
            self.lengths[0] / self.dims[0] as f64,
            self.lengths[1] / self.dims[1] as f64,
            self.lengths[2] / self.dims[2] as f64,
        ]
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cell volume of the midpoint quadrature rule.
    pub fn cell_volume(&self) -> f64 {
        let h = self.spacing();
        h[0] * h[1] * h[2]
    }

    pub fn volume(&self) -> f64 {
        self.lengths[0] * self.lengths[1] * self.lengths[2]
    }

    /// Row-major linear index of node `(i, j, k)` (already in range).
    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.dims[1] + j) * self.dims[2] + k
    }

    /// Linear index with periodic wrap-around on signed offsets.
    #[inline]
    pub fn index_wrapped(&self, i: isize, j: isize, k: isize) -> usize {
        let i = i.rem_euclid(self.dims[0] as isize) as usize;
        let j = j.rem_euclid(self.dims[1] as isize) as usize;
        let k = k.rem_euclid(self.dims[2] as isize) as usize;
        self.index(i, j, k)
    }

    /// Physical coordinates of node with linear index `idx`.
    #[inline]
    pub fn node_position(&self, idx: usize) -> [f64; 3] {
        let h = self.spacing();
        let k = idx % self.dims[2];
        let j = (idx / self.dims[2]) % self.dims[1];
        let i = idx / (self.dims[1] * self.dims[2]);
        [i as f64 * h[0], j as f64 * h[1], k as f64 * h[2]]
    }

    /// Map a point into the fundamental box `[0, L)` per axis.
    #[inline]
    pub fn wrap_point(&self, x: [f64; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for axis in 0..3 {
            out[axis] = x[axis].rem_euclid(self.lengths[axis]);
        }
        out
    }

    /// Iterate over node coordinates in linear-index order.
    pub fn nodes(&self) -> impl Iterator<Item = [f64; 3]> + '_ {
        (0..self.len()).map(move |idx| self.node_position(idx))
    }
}
