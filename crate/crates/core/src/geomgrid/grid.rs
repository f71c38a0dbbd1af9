use std::f64::consts::PI;

use crate::error::GridError;

/// Largest supported grid dimension.
pub const MAX_GRID_DIM: usize = 4;

/// A point or a covector on the grid (first `dim` entries are used).
pub type GridVector = [f64; MAX_GRID_DIM];

/// Uniform periodic grid on the torus `prod_a [0, L_a)`.
///
/// Nodes are numbered with axis 0 fastest:
/// `node = i_0 + s_0 (i_1 + s_1 (i_2 + ...))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    dim: usize,
    sizes: [usize; MAX_GRID_DIM],
    lengths: [f64; MAX_GRID_DIM],
    strides: [usize; MAX_GRID_DIM],
    nodes: usize,
}

impl Grid {
    pub fn new(sizes: &[usize], lengths: &[f64]) -> Result<Self, GridError> {
        let dim = sizes.len();
        if !(3..=MAX_GRID_DIM).contains(&dim) {
            return Err(GridError::Dimension(dim));
        }
        if lengths.len() != dim {
            return Err(GridError::AxisCount {
                dim,
                sizes: sizes.len(),
                lengths: lengths.len(),
            });
        }
        let mut g = Grid {
            dim,
            sizes: [1; MAX_GRID_DIM],
            lengths: [1.0; MAX_GRID_DIM],
            strides: [0; MAX_GRID_DIM],
            nodes: 1,
        };
        for axis in 0..dim {
            if sizes[axis] < 3 {
                return Err(GridError::TooFewNodes {
                    axis,
                    size: sizes[axis],
                });
            }
            if !(lengths[axis] > 0.0 && lengths[axis].is_finite()) {
                return Err(GridError::BadLength {
                    axis,
                    length: lengths[axis],
                });
            }
            g.sizes[axis] = sizes[axis];
            g.lengths[axis] = lengths[axis];
            g.strides[axis] = g.nodes;
            g.nodes *= sizes[axis];
        }
        Ok(g)
    }

    /// `size` nodes per axis on `[0, 2 pi)^dim`.
    pub fn cubic(dim: usize, size: usize) -> Result<Self, GridError> {
        Self::new(&vec![size; dim], &vec![2.0 * PI; dim])
    }

    /// Periodic box with 2 pi sides and the given sizes.
    pub fn with_sizes(sizes: &[usize]) -> Result<Self, GridError> {
        Self::new(sizes, &vec![2.0 * PI; sizes.len()])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes[..self.dim]
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths[..self.dim]
    }

    #[inline]
    pub fn spacing(&self, axis: usize) -> f64 {
        self.lengths[axis] / self.sizes[axis] as f64
    }

    /// Largest spacing over the axes.
    pub fn max_spacing(&self) -> f64 {
        (0..self.dim).map(|a| self.spacing(a)).fold(0.0, f64::max)
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.nodes
    }

    #[inline]
    pub fn axis_index(&self, node: usize, axis: usize) -> usize {
        (node / self.strides[axis]) % self.sizes[axis]
    }

    pub fn index_of(&self, node: usize) -> Vec<usize> {
        (0..self.dim).map(|a| self.axis_index(node, a)).collect()
    }

    pub fn node_at(&self, index: &[usize]) -> usize {
        index
            .iter()
            .enumerate()
            .map(|(a, &i)| (i % self.sizes[a]) * self.strides[a])
            .sum()
    }

    /// Node reached by moving `offset` steps along `axis`, wrapping around.
    #[inline]
    pub fn neighbor(&self, node: usize, axis: usize, offset: isize) -> usize {
        let size = self.sizes[axis] as isize;
        let i = self.axis_index(node, axis) as isize;
        let j = (i + offset).rem_euclid(size);
        (node as isize + (j - i) * self.strides[axis] as isize) as usize
    }

    /// Physical coordinates `x_a = i_a h_a`.
    pub fn position(&self, node: usize) -> GridVector {
        let mut x = [0.0; MAX_GRID_DIM];
        for (a, xa) in x.iter_mut().enumerate().take(self.dim) {
            *xa = self.axis_index(node, a) as f64 * self.spacing(a);
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_axis0_fastest() {
        let g = Grid::with_sizes(&[4, 3, 5]).unwrap();
        assert_eq!(g.node_count(), 60);
        assert_eq!(g.index_of(1), vec![1, 0, 0]);
        assert_eq!(g.index_of(4), vec![0, 1, 0]);
        assert_eq!(g.index_of(12), vec![0, 0, 1]);
        for node in 0..60 {
            assert_eq!(g.node_at(&g.index_of(node)), node);
        }
    }

    #[test]
    fn neighbors_wrap() {
        let g = Grid::with_sizes(&[4, 3, 5]).unwrap();
        let n = g.node_at(&[3, 0, 4]);
        assert_eq!(g.index_of(g.neighbor(n, 0, 1)), vec![0, 0, 4]);
        assert_eq!(g.index_of(g.neighbor(n, 1, -1)), vec![3, 2, 4]);
        assert_eq!(g.index_of(g.neighbor(n, 2, 1)), vec![3, 0, 0]);
    }

    #[test]
    fn rejects_bad_grids() {
        assert_eq!(Grid::with_sizes(&[8, 8]), Err(GridError::Dimension(2)));
        assert!(matches!(
            Grid::with_sizes(&[8, 2, 8]),
            Err(GridError::TooFewNodes { axis: 1, size: 2 })
        ));
        assert!(Grid::new(&[8, 8, 8], &[1.0, 1.0]).is_err());
        assert!(Grid::new(&[8, 8, 8], &[1.0, -1.0, 1.0]).is_err());
    }
}
