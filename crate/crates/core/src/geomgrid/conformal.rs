//! Conformally flat backgrounds `g = e^{2 phi} delta` and the conformal
//! transformation law of the `A^t` tensor.

use super::field::{ScalarField, TensorField, VectorField};
use super::ops::{covariant_hessian_at, grad, hess_at};
use crate::error::ProblemError;
use crate::symfun::SymMatrix;

/// Background geometry on the torus.
///
/// `s` plays the role of the background `A^t` tensor (lower indices). It is
/// taken as given rather than derived from `phi`, so any tensor field in the
/// appropriate cone can be prescribed.
#[derive(Clone, Debug)]
pub struct Background {
    phi: ScalarField,
    s: TensorField,
    t: f64,
    cone_margin: f64,
    dphi: VectorField,
    // e^{2 phi}
    conformal: Vec<f64>,
}

impl Background {
    pub fn new(
        phi: ScalarField,
        s: TensorField,
        t: f64,
        cone_margin: f64,
    ) -> Result<Self, ProblemError> {
        if phi.grid() != s.grid() {
            return Err(crate::error::GridError::Mismatch.into());
        }
        if !(t <= 1.0) {
            return Err(ProblemError::ParameterT(t));
        }
        let dphi = grad(&phi);
        let conformal = phi.values().iter().map(|p| (2.0 * p).exp()).collect();
        Ok(Self {
            phi,
            s,
            t,
            cone_margin: cone_margin.max(0.0),
            dphi,
            conformal,
        })
    }

    /// Flat metric with the given tensor.
    pub fn flat(s: TensorField, t: f64) -> Result<Self, ProblemError> {
        let phi = ScalarField::zeros(*s.grid());
        Self::new(phi, s, t, 0.0)
    }

    pub fn grid(&self) -> &super::Grid {
        self.phi.grid()
    }

    pub fn dim(&self) -> usize {
        self.phi.grid().dim()
    }

    pub fn phi(&self) -> &ScalarField {
        &self.phi
    }

    pub fn s(&self) -> &TensorField {
        &self.s
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn cone_margin(&self) -> f64 {
        self.cone_margin
    }

    pub fn dphi(&self) -> &VectorField {
        &self.dphi
    }

    /// `e^{2 phi}` at a node.
    #[inline]
    pub fn conformal_factor(&self, node: usize) -> f64 {
        self.conformal[node]
    }

    /// Same geometry, different `t`.
    pub fn with_t(&self, t: f64) -> Result<Self, ProblemError> {
        if !(t <= 1.0) {
            return Err(ProblemError::ParameterT(t));
        }
        Ok(Self { t, ..self.clone() })
    }

    /// Same geometry, different tensor.
    pub fn with_s(&self, s: TensorField) -> Result<Self, ProblemError> {
        if s.grid() != self.grid() {
            return Err(crate::error::GridError::Mismatch.into());
        }
        Ok(Self { s, ..self.clone() })
    }

    /// The metric `c e^{2 phi} delta` as a tensor field.
    pub fn metric_scaled(&self, c: f64) -> TensorField {
        let n = self.dim();
        TensorField::from_node_fn(*self.grid(), |node| {
            SymMatrix::scalar(n, c * self.conformal[node])
        })
    }
}

/// `(1 - t) / (n - 2)`.
#[inline]
pub fn trace_coefficient(n: usize, t: f64) -> f64 {
    (1.0 - t) / (n as f64 - 2.0)
}

/// Pointwise transformation law with covariant data of `w`:
///
/// `base - hess - ((1-t)/(n-2)) tr(hess) I + dw dw^T - ((2-t)/2) |dw|^2 I`.
///
/// All traces and norms are flat: for `g = e^{2 phi} delta` the conformal
/// factors of `(Delta_g w) g` and `|dw|_g^2 g` cancel.
#[inline]
pub(crate) fn conformal_change(base: &SymMatrix, hess: &SymMatrix, dw: &[f64], t: f64) -> SymMatrix {
    let n = base.dim();
    let dw = &dw[..n];
    let grad_sq: f64 = dw.iter().map(|x| x * x).sum();
    let diag = -trace_coefficient(n, t) * hess.trace() - 0.5 * (2.0 - t) * grad_sq;
    (*base - *hess + SymMatrix::outer(dw)).shift(diag)
}

/// `A^t` of the metric `e^{2 phi} delta`, lower indices, from the
/// transformation law with a flat base (all operators flat).
pub fn schouten_from_phi(phi: &ScalarField, t: f64) -> TensorField {
    let grid = *phi.grid();
    assert!(grid.dim() >= 3);
    let vals = phi.values();
    let zero = SymMatrix::zeros(grid.dim());
    TensorField::from_node_fn(grid, |node| {
        let h = hess_at(&grid, vals, node);
        let d = super::ops::grad_at(&grid, vals, node);
        conformal_change(&zero, &h, &d, t)
    })
}

/// `A^t` of `e^{2w} g` from the tensor `s` of `g = bg`, using the covariant
/// operators of the background and its `t`.
pub fn transform_schouten(s: &TensorField, w: &ScalarField, bg: &Background) -> TensorField {
    assert!(s.grid() == w.grid() && w.grid() == bg.grid(), "fields live on different grids");
    let grid = *w.grid();
    let vals = w.values();
    let t = bg.t();
    TensorField::from_node_fn(grid, |node| {
        let (h, dw) = covariant_hessian_at(&grid, vals, node, bg.dphi().at(node));
        conformal_change(s.at(node), &h, &dw, t)
    })
}

/// Raises one index with `g^{-1} = e^{-2 phi} delta`.
pub fn raise_index(tensor: &TensorField, bg: &Background) -> TensorField {
    assert_eq!(tensor.grid(), bg.grid(), "fields live on different grids");
    let vals = tensor.values();
    TensorField::from_node_fn(*tensor.grid(), |node| {
        vals[node].scale(1.0 / bg.conformal_factor(node))
    })
}
