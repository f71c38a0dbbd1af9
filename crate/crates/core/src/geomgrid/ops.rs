//! Second-order centered differences on the periodic grid.

use rayon::prelude::*;

use super::conformal::Background;
use super::field::{ScalarField, TensorField, VectorField};
use super::grid::{Grid, GridVector, MAX_GRID_DIM};
use crate::symfun::SymMatrix;

/// `(u_{i+1} - u_{i-1}) / 2h` along every axis.
#[inline]
pub(crate) fn grad_at(grid: &Grid, u: &[f64], node: usize) -> GridVector {
    let mut g = [0.0; MAX_GRID_DIM];
    for (a, ga) in g.iter_mut().enumerate().take(grid.dim()) {
        let up = u[grid.neighbor(node, a, 1)];
        let dn = u[grid.neighbor(node, a, -1)];
        *ga = (up - dn) / (2.0 * grid.spacing(a));
    }
    g
}

/// Compact three-point second differences on the diagonal, four-point
/// cross differences off it.
#[inline]
pub(crate) fn hess_at(grid: &Grid, u: &[f64], node: usize) -> SymMatrix {
    let n = grid.dim();
    let mut h = SymMatrix::zeros(n);
    let c = u[node];
    for a in 0..n {
        let ha = grid.spacing(a);
        let up = grid.neighbor(node, a, 1);
        let dn = grid.neighbor(node, a, -1);
        h.set(a, a, (u[up] - 2.0 * c + u[dn]) / (ha * ha));
        for b in (a + 1)..n {
            let hb = grid.spacing(b);
            let pp = u[grid.neighbor(up, b, 1)];
            let pm = u[grid.neighbor(up, b, -1)];
            let mp = u[grid.neighbor(dn, b, 1)];
            let mm = u[grid.neighbor(dn, b, -1)];
            h.set(a, b, (pp - pm - mp + mm) / (4.0 * ha * hb));
        }
    }
    h
}

/// Covariant Hessian of `u` for `g = e^{2 phi} delta` given `d phi` at the node:
/// `d_i d_j u - (phi_i u_j + phi_j u_i) + delta_ij <d phi, d u>`.
#[inline]
pub(crate) fn covariant_hessian_at(
    grid: &Grid,
    u: &[f64],
    node: usize,
    dphi: &[f64],
) -> (SymMatrix, GridVector) {
    let du = grad_at(grid, u, node);
    let n = grid.dim();
    let mut h = hess_at(grid, u, node);
    let dot: f64 = (0..n).map(|a| dphi[a] * du[a]).sum();
    h -= SymMatrix::sym_outer(&dphi[..n], &du[..n]);
    (h.shift(dot), du)
}

pub fn grad(u: &ScalarField) -> VectorField {
    let grid = *u.grid();
    let vals = u.values();
    let out = (0..grid.node_count())
        .into_par_iter()
        .map(|node| grad_at(&grid, vals, node))
        .collect();
    VectorField::new(grid, out).expect("node count preserved")
}

pub fn hess_flat(u: &ScalarField) -> TensorField {
    let grid = *u.grid();
    let vals = u.values();
    TensorField::from_node_fn(grid, |node| hess_at(&grid, vals, node))
}

/// Flat Laplacian, defined as the trace of [`hess_flat`].
pub fn laplacian_flat(u: &ScalarField) -> ScalarField {
    hess_flat(u).trace()
}

/// Hessian with respect to the background metric `e^{2 phi} delta`, lower indices.
pub fn covariant_hessian(u: &ScalarField, bg: &Background) -> TensorField {
    assert_eq!(u.grid(), bg.grid(), "field and background grids differ");
    let grid = *u.grid();
    let vals = u.values();
    let dphi = bg.dphi();
    TensorField::from_node_fn(grid, |node| {
        covariant_hessian_at(&grid, vals, node, dphi.at(node)).0
    })
}
