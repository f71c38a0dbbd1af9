use rayon::prelude::*;

use super::grid::{Grid, GridVector};
use crate::error::GridError;
use crate::symfun::SymMatrix;

/// One real value per grid node.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

/// One covector per grid node.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    grid: Grid,
    values: Vec<GridVector>,
}

/// One symmetric `dim x dim` matrix per grid node.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorField {
    grid: Grid,
    values: Vec<SymMatrix>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.node_count() {
            return Err(GridError::ValueCount {
                expected: grid.node_count(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.node_count()],
        }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    /// Samples `f` at node positions.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64 + Sync + Send) -> Self {
        let values = (0..grid.node_count())
            .into_par_iter()
            .map(|node| f(&grid.position(node)[..grid.dim()]))
            .collect();
        Self { grid, values }
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

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Sync + Send) -> Self {
        Self {
            grid: self.grid,
            values: self.values.par_iter().map(|&v| f(v)).collect(),
        }
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: f64, other: &ScalarField) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + c * b)
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `max |self - other|`.
    pub fn max_abs_diff(&self, other: &ScalarField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

impl VectorField {
    pub fn new(grid: Grid, values: Vec<GridVector>) -> Result<Self, GridError> {
        if values.len() != grid.node_count() {
            return Err(GridError::ValueCount {
                expected: grid.node_count(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[GridVector] {
        &self.values
    }

    #[inline]
    pub fn at(&self, node: usize) -> &[f64] {
        &self.values[node][..self.grid.dim()]
    }

    /// Largest Euclidean norm over nodes.
    pub fn max_norm(&self) -> f64 {
        let d = self.grid.dim();
        self.values
            .iter()
            .map(|v| v[..d].iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}

impl TensorField {
    pub fn new(grid: Grid, values: Vec<SymMatrix>) -> Result<Self, GridError> {
        if values.len() != grid.node_count() {
            return Err(GridError::ValueCount {
                expected: grid.node_count(),
                got: values.len(),
            });
        }
        if values.iter().any(|m| m.dim() != grid.dim()) {
            return Err(GridError::Mismatch);
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Grid, m: SymMatrix) -> Self {
        assert_eq!(m.dim(), grid.dim());
        Self {
            grid,
            values: vec![m; grid.node_count()],
        }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, SymMatrix::zeros(grid.dim()))
    }

    /// Builds the field node by node.
    pub fn from_node_fn(grid: Grid, f: impl Fn(usize) -> SymMatrix + Sync + Send) -> Self {
        let values = (0..grid.node_count()).into_par_iter().map(f).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[SymMatrix] {
        &self.values
    }

    #[inline]
    pub fn at(&self, node: usize) -> &SymMatrix {
        &self.values[node]
    }

    pub fn map(&self, f: impl Fn(&SymMatrix) -> SymMatrix + Sync + Send) -> Self {
        Self {
            grid: self.grid,
            values: self.values.par_iter().map(f).collect(),
        }
    }

    /// Pointwise `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &TensorField, b: f64) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| x.scale(a) + y.scale(b))
                .collect(),
        }
    }

    /// Largest entrywise difference over all nodes.
    pub fn max_abs_diff(&self, other: &TensorField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((*a - *b).max_abs()))
    }

    pub fn trace(&self) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(SymMatrix::trace).collect(),
        }
    }
}
