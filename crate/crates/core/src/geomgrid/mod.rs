//! Periodic grids, finite-difference calculus and conformally flat
//! background geometry.

mod conformal;
pub mod dump;
mod field;
mod grid;
mod ops;

pub use conformal::{
    raise_index, schouten_from_phi, trace_coefficient, transform_schouten, Background,
};
pub(crate) use conformal::conformal_change;
pub use field::{ScalarField, TensorField, VectorField};
pub use grid::{Grid, GridVector, MAX_GRID_DIM};
pub use ops::{covariant_hessian, grad, hess_flat, laplacian_flat};
pub(crate) use ops::{covariant_hessian_at, grad_at};
