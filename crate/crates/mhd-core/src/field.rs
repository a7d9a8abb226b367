//! Scalar, vector and matrix fields on a periodic grid.

use crate::error::{MhdError, Result};
use crate::grid::Grid;

/// Real-valued field sampled at grid nodes, row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![c; grid.len()],
        }
    }

    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(MhdError::InvalidField(format!(
                "value count {} does not match grid size {}",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(MhdError::InvalidField("non-finite value".into()));
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    /// Sample a closure at every grid node.
    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 3]) -> f64) -> Self {
        let values = grid.nodes().map(f).collect();
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        Self {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map(|v| a * v)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Three-component vector field; components share one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    components: [ScalarField; 3],
}

impl VectorField {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            components: [
                ScalarField::zeros(grid),
                ScalarField::zeros(grid),
                ScalarField::zeros(grid),
            ],
        }
    }

    pub fn constant(grid: &Grid, c: [f64; 3]) -> Self {
        Self {
            components: [
                ScalarField::constant(grid, c[0]),
                ScalarField::constant(grid, c[1]),
                ScalarField::constant(grid, c[2]),
            ],
        }
    }

    pub fn from_components(components: [ScalarField; 3]) -> Result<Self> {
        if components[0].grid() != components[1].grid()
            || components[0].grid() != components[2].grid()
        {
            return Err(MhdError::InvalidField(
                "vector components on different grids".into(),
            ));
        }
        Ok(Self { components })
    }

    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let mut comps = [
            ScalarField::zeros(grid),
            ScalarField::zeros(grid),
            ScalarField::zeros(grid),
        ];
        for (idx, x) in grid.nodes().enumerate() {
            let v = f(x);
            for c in 0..3 {
                comps[c].values_mut()[idx] = v[c];
            }
        }
        Self { components: comps }
    }

    pub fn grid(&self) -> &Grid {
        self.components[0].grid()
    }

    pub fn component(&self, c: usize) -> &ScalarField {
        &self.components[c]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut ScalarField {
        &mut self.components[c]
    }

    pub fn components(&self) -> &[ScalarField; 3] {
        &self.components
    }

    #[inline]
    pub fn at(&self, idx: usize) -> [f64; 3] {
        [
            self.components[0].values()[idx],
            self.components[1].values()[idx],
            self.components[2].values()[idx],
        ]
    }

    #[inline]
    pub fn set(&mut self, idx: usize, v: [f64; 3]) {
        for c in 0..3 {
            self.components[c].values_mut()[idx] = v[c];
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            components: [
                self.components[0].map(&f),
                self.components[1].map(&f),
                self.components[2].map(&f),
            ],
        }
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map(|v| a * v)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            components: [
                self.components[0].add(&other.components[0]),
                self.components[1].add(&other.components[1]),
                self.components[2].add(&other.components[2]),
            ],
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            components: [
                self.components[0].sub(&other.components[0]),
                self.components[1].sub(&other.components[1]),
                self.components[2].sub(&other.components[2]),
            ],
        }
    }

    /// Linear combination `a*self + b*other`.
    pub fn lincomb(&self, a: f64, other: &Self, b: f64) -> Self {
        Self {
            components: [
                self.components[0].zip_with(&other.components[0], |x, y| a * x + b * y),
                self.components[1].zip_with(&other.components[1], |x, y| a * x + b * y),
                self.components[2].zip_with(&other.components[2], |x, y| a * x + b * y),
            ],
        }
    }

    /// Pointwise Euclidean magnitude.
    pub fn magnitude(&self) -> ScalarField {
        let grid = self.grid().clone();
        let values = (0..grid.len())
            .map(|idx| {
                let v = self.at(idx);
                (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
            })
            .collect();
        ScalarField::from_values(&grid, values).expect("finite magnitude")
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(ScalarField::is_finite)
    }
}

/// 3x3 matrix field, entry `(i, j)` stored as component `3*i + j`.
/// Entry convention is the Jacobian one: for a velocity gradient,
/// `(i, j)` holds the derivative of component `i` along axis `j`.
#[derive(Debug, Clone)]
pub struct MatrixField {
    grid: Grid,
    entries: Vec<ScalarField>,
}

impl MatrixField {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            grid: grid.clone(),
            entries: (0..9).map(|_| ScalarField::zeros(grid)).collect(),
        }
    }

    pub fn from_entries(grid: &Grid, entries: Vec<ScalarField>) -> Result<Self> {
        if entries.len() != 9 {
            return Err(MhdError::InvalidField(
                "matrix field needs 9 entries".into(),
            ));
        }
        if entries.iter().any(|e| e.grid() != grid) {
            return Err(MhdError::InvalidField(
                "matrix entries on different grids".into(),
            ));
        }
        Ok(Self {
            grid: grid.clone(),
            entries,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn entry(&self, i: usize, j: usize) -> &ScalarField {
        &self.entries[3 * i + j]
    }

    pub fn entry_mut(&mut self, i: usize, j: usize) -> &mut ScalarField {
        &mut self.entries[3 * i + j]
    }

    /// Matrix value at one node.
    #[inline]
    pub fn at(&self, idx: usize) -> [[f64; 3]; 3] {
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = self.entries[3 * i + j].values()[idx];
            }
        }
        m
    }

    /// Pointwise trace.
    pub fn trace(&self) -> ScalarField {
        let mut out = ScalarField::zeros(&self.grid);
        for i in 0..3 {
            out = out.add(self.entry(i, i));
        }
        out
    }

    /// Pointwise Frobenius norm.
    pub fn frobenius(&self) -> ScalarField {
        let values = (0..self.grid.len())
            .map(|idx| {
                let m = self.at(idx);
                m.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
            })
            .collect();
        ScalarField::from_values(&self.grid, values).expect("finite frobenius")
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(ScalarField::is_finite)
    }
}

/// Matrix-vector product at one node.
#[inline]
pub fn mat_vec(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_wrong_length() {
        let g = Grid::cube(4);
        assert!(ScalarField::from_values(&g, vec![0.0; 63]).is_err());
    }

    #[test]
    fn rejects_nan() {
        let g = Grid::cube(4);
        let mut v = vec![0.0; g.len()];
        v[7] = f64::NAN;
        assert!(ScalarField::from_values(&g, v).is_err());
    }

    #[test]
    fn rejects_mixed_grids() {
        let a = ScalarField::zeros(&Grid::cube(4));
        let b = ScalarField::zeros(&Grid::cube(8));
        assert!(VectorField::from_components([a.clone(), a, b]).is_err());
    }

    #[test]
    fn matrix_trace_of_identity() {
        let g = Grid::cube(4);
        let mut m = MatrixField::zeros(&g);
        for i in 0..3 {
            *m.entry_mut(i, i) = ScalarField::constant(&g, 1.0);
        }
        let tr = m.trace();
        assert!(tr.values().iter().all(|&v| (v - 3.0).abs() < 1e-15));
    }
}
