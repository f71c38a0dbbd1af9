//! Linearization of the power-form residual at an iterate.
//!
//! Differentiating `sigma_k(g^{-1} bar(w + eps v)) - rho^k e^{2k(w + eps v)}`
//! at `eps = 0` gives
//!
//! ```text
//! L v = e^{-2phi} Q : hess v + b . dv - 2k rho^k e^{2kw} v
//! Q   = T_{k-1} + c_t tr(T_{k-1}) I
//! b   = e^{-2phi} [ (2-t) tr(T_{k-1}) dw - 2 T_{k-1} dw ]        (negative case)
//! ```
//!
//! where `T_{k-1}` is the Newton transformation of the raised augmented
//! Hessian and `hess v` is the covariant Hessian of the background. The
//! first-order coefficient `b` changes sign in the positive case. Because
//! every piece is built from the same discrete operators as the residual,
//! `apply` is the exact Jacobian of the discrete residual.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::continuation::HomotopyPoint;
use crate::error::LinearizedError;
use crate::geomgrid::{covariant_hessian_at, trace_coefficient, GridVector, ScalarField, TensorField, VectorField, MAX_GRID_DIM};
use crate::residual::{raised_bar_at, rhs_power, Case, ProblemSpec};
use crate::symfun::Expansion;

/// Node limit for [`dense_assemble`].
pub const DENSE_LIMIT: usize = 4096;

/// Cached coefficients of the linearized operator at `w`.
#[derive(Clone, Debug)]
pub struct LinearizationState<'a> {
    p: &'a ProblemSpec,
    w: ScalarField,
    bar_field: TensorField,
    t_field: TensorField,
    q_field: TensorField,
    zero_order: ScalarField,
    gradient_coeffs: VectorField,
}

pub fn build_state<'a>(w: &ScalarField, hp: &HomotopyPoint, p: &'a ProblemSpec) -> LinearizationState<'a> {
    let grid = *p.grid();
    let n = p.n();
    let k = p.k();
    let c_t = trace_coefficient(n, p.t());
    let sign = match p.case() {
        Case::Negative => 1.0,
        Case::Positive => -1.0,
    };
    let vals = w.values();
    let rho = hp.rho().values();
    let per_node: Vec<_> = (0..grid.node_count())
        .into_par_iter()
        .map(|node| {
            let bar = raised_bar_at(vals, hp.heff().at(node), node, p);
            let e = Expansion::new(&bar, k);
            let t = *e.newton();
            let q = t.shift(c_t * t.trace());
            let zero = -2.0 * k as f64 * rhs_power(rho[node], vals[node], k);
            let dw = crate::geomgrid::grad_at(&grid, vals, node);
            let tdw = t.mul_vec(&dw[..n]);
            let inv = 1.0 / p.bg().conformal_factor(node);
            let mut b: GridVector = [0.0; MAX_GRID_DIM];
            for a in 0..n {
                b[a] = sign * inv * ((2.0 - p.t()) * t.trace() * dw[a] - 2.0 * tdw[a]);
            }
            (bar, t, q, zero, b)
        })
        .collect();
    let mut bars = Vec::with_capacity(per_node.len());
    let mut ts = Vec::with_capacity(per_node.len());
    let mut qs = Vec::with_capacity(per_node.len());
    let mut zs = Vec::with_capacity(per_node.len());
    let mut bs = Vec::with_capacity(per_node.len());
    for (bar, t, q, z, b) in per_node {
        bars.push(bar);
        ts.push(t);
        qs.push(q);
        zs.push(z);
        bs.push(b);
    }
    LinearizationState {
        p,
        w: w.clone(),
        bar_field: TensorField::new(grid, bars).unwrap(),
        t_field: TensorField::new(grid, ts).unwrap(),
        q_field: TensorField::new(grid, qs).unwrap(),
        zero_order: ScalarField::new(grid, zs).unwrap(),
        gradient_coeffs: VectorField::new(grid, bs).unwrap(),
    }
}

impl<'a> LinearizationState<'a> {
    pub fn problem(&self) -> &'a ProblemSpec {
        self.p
    }

    pub fn w(&self) -> &ScalarField {
        &self.w
    }

    /// Raised augmented Hessian.
    pub fn bar_field(&self) -> &TensorField {
        &self.bar_field
    }

    pub fn t_field(&self) -> &TensorField {
        &self.t_field
    }

    pub fn q_field(&self) -> &TensorField {
        &self.q_field
    }

    pub fn zero_order(&self) -> &ScalarField {
        &self.zero_order
    }

    pub fn gradient_coeffs(&self) -> &VectorField {
        &self.gradient_coeffs
    }

    pub fn apply(&self, direction: &ScalarField) -> ScalarField {
        assert_eq!(direction.grid(), self.p.grid(), "direction lives on another grid");
        let out = self.apply_slice(direction.values());
        ScalarField::new(*self.p.grid(), out).unwrap()
    }

    pub(crate) fn apply_slice(&self, v: &[f64]) -> Vec<f64> {
        let grid = *self.p.grid();
        let bg = self.p.bg();
        let n = grid.dim();
        (0..grid.node_count())
            .into_par_iter()
            .map(|node| {
                let (h, dv) = covariant_hessian_at(&grid, v, node, bg.dphi().at(node));
                let b = self.gradient_coeffs.at(node);
                let first: f64 = (0..n).map(|a| b[a] * dv[a]).sum();
                self.q_field.at(node).contract(&h) / bg.conformal_factor(node)
                    + first
                    + self.zero_order.values()[node] * v[node]
            })
            .collect()
    }

    /// Exact diagonal of the discrete operator.
    pub fn diagonal(&self) -> Vec<f64> {
        let grid = *self.p.grid();
        let bg = self.p.bg();
        (0..grid.node_count())
            .map(|node| {
                let q = self.q_field.at(node);
                let second: f64 = (0..grid.dim())
                    .map(|a| -2.0 * q.get(a, a) / (grid.spacing(a) * grid.spacing(a)))
                    .sum();
                second / bg.conformal_factor(node) + self.zero_order.values()[node]
            })
            .collect()
    }
}

/// Ellipticity and invertibility indicators of a linearization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EllipticityCertificate {
    /// Minimum eigenvalue of `Q` over all nodes.
    pub min_q_eigenvalue: f64,
    /// Maximum eigenvalue of `Q` over all nodes.
    pub max_q_eigenvalue: f64,
    /// Largest value of the zeroth-order coefficient.
    pub max_zero_order: f64,
}

impl EllipticityCertificate {
    pub fn elliptic(&self) -> bool {
        self.min_q_eigenvalue > 0.0
    }

    pub fn zero_order_negative(&self) -> bool {
        self.max_zero_order < 0.0
    }
}

pub fn ellipticity_certificate(state: &LinearizationState) -> EllipticityCertificate {
    let (lo, hi) = state
        .q_field
        .values()
        .par_iter()
        .map(|q| {
            let ev = q.eigenvalues();
            (ev[0], ev[ev.len() - 1])
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (a, b)| (lo.min(a), hi.max(b)));
    EllipticityCertificate {
        min_q_eigenvalue: lo,
        max_q_eigenvalue: hi,
        max_zero_order: state.zero_order.max(),
    }
}

/// Explicit matrix of the operator; column `j` is `apply(e_j)`.
pub fn dense_assemble(state: &LinearizationState) -> Result<DMatrix<f64>, LinearizedError> {
    let nodes = state.p.grid().node_count();
    if nodes > DENSE_LIMIT {
        return Err(LinearizedError::TooLarge {
            nodes,
            limit: DENSE_LIMIT,
        });
    }
    let columns: Vec<Vec<f64>> = (0..nodes)
        .into_par_iter()
        .map(|j| {
            let mut e = vec![0.0; nodes];
            e[j] = 1.0;
            state.apply_slice(&e)
        })
        .collect();
    Ok(DMatrix::from_fn(nodes, nodes, |i, j| columns[j][i]))
}
