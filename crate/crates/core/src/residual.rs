//! The nonlinear operator whose zeros are the conformal factors we want.
//!
//! For the negative case the augmented Hessian is
//!
//! ```text
//! bar(w) = hess w + c_t (lap w) g + ((2-t)/2) |dw|^2 g - dw (x) dw - H
//! ```
//!
//! with `c_t = (1-t)/(n-2)` and `H` the (homotopy-effective) background
//! tensor. The positive case flips the signs of the two gradient terms and
//! adds `H` instead. Newton works on the polynomial form
//! `sigma_k(g^{-1} bar) - rho^k e^{2kw}`, which is defined everywhere.

use rayon::prelude::*;

use crate::continuation::HomotopyPoint;
use crate::error::{ConeViolationAt, GridError, ProblemError};
use crate::geomgrid::{conformal_change, covariant_hessian_at, Background, ScalarField, TensorField};
use crate::symfun::{binomial, signed_root_of, ConeClass, Expansion, SymMatrix};

/// Sign structure of the problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Case {
    /// Background tensor in the negative cone, `f < 0`.
    Negative,
    /// Background tensor in the positive cone, `f > 0` (residuals only).
    Positive,
}

/// Newton/Krylov/continuation controls.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    /// Newton stops once `max |residual| <= newton_tol * max(rho^k)`.
    pub newton_tol: f64,
    /// Relative tolerance of each inner linear solve.
    pub krylov_tol: f64,
    pub krylov_restart: usize,
    pub krylov_max_iter: usize,
    pub max_newton: usize,
    /// Smallest admissible line-search step.
    pub alpha_min: f64,
    pub ds_initial: f64,
    pub ds_max: f64,
    pub ds_min: f64,
    /// Grids with at most this many nodes use a dense LU instead of GMRES.
    pub dense_threshold: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            newton_tol: 1e-12,
            krylov_tol: 1e-3,
            krylov_restart: 40,
            krylov_max_iter: 2000,
            max_newton: 50,
            alpha_min: 1e-6,
            ds_initial: 0.25,
            ds_max: 0.25,
            ds_min: 1e-4,
            dense_threshold: 512,
        }
    }
}

/// A validated problem instance.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    bg: Background,
    k: usize,
    f: ScalarField,
    case: Case,
    pub options: SolverOptions,
}

impl ProblemSpec {
    pub fn new(
        bg: Background,
        k: usize,
        f: ScalarField,
        case: Case,
        options: SolverOptions,
    ) -> Result<Self, ProblemError> {
        let n = bg.dim();
        if k < 1 || k > n {
            return Err(ProblemError::Order { k, n });
        }
        if f.grid() != bg.grid() {
            return Err(GridError::Mismatch.into());
        }
        for (axis, &size) in bg.grid().sizes().iter().enumerate() {
            if size < 8 {
                return Err(ProblemError::GridTooCoarse { axis, size });
            }
        }
        let (expected, bad): (&'static str, Vec<usize>) = match case {
            Case::Negative => {
                if f.max() >= 0.0 {
                    return Err(ProblemError::RhsNotNegative { max: f.max() });
                }
                ("negative", nodes_where(bg.s(), k, |c| !c.is_negative()))
            }
            Case::Positive => {
                if f.min() <= 0.0 {
                    return Err(ProblemError::RhsNotPositive { min: f.min() });
                }
                ("positive", nodes_where(bg.s(), k, |c| !c.is_positive()))
            }
        };
        if let Some(&first) = bad.first() {
            return Err(ProblemError::BackgroundCone {
                expected,
                k,
                count: bad.len(),
                first: bg.grid().index_of(first),
            });
        }
        Ok(Self {
            bg,
            k,
            f,
            case,
            options,
        })
    }

    pub fn bg(&self) -> &Background {
        &self.bg
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.bg.dim()
    }

    pub fn t(&self) -> f64 {
        self.bg.t()
    }

    pub fn f(&self) -> &ScalarField {
        &self.f
    }

    pub fn case(&self) -> Case {
        self.case
    }

    pub fn grid(&self) -> &crate::geomgrid::Grid {
        self.bg.grid()
    }

    /// Same problem with a different `t` (hypotheses re-checked).
    pub fn with_t(&self, t: f64) -> Result<Self, ProblemError> {
        Self::new(self.bg.with_t(t)?, self.k, self.f.clone(), self.case, self.options.clone())
    }

    /// Same problem with a different right-hand side.
    pub fn with_f(&self, f: ScalarField) -> Result<Self, ProblemError> {
        Self::new(self.bg.clone(), self.k, f, self.case, self.options.clone())
    }

    /// `binom(n, k)^{-1/k}`, the scale that puts `sigma_k(c I) = 1`.
    pub fn unit_scale(&self) -> f64 {
        binomial(self.n(), self.k).powf(-1.0 / self.k as f64)
    }
}

fn nodes_where(s: &TensorField, k: usize, bad: impl Fn(ConeClass) -> bool + Sync) -> Vec<usize> {
    (0..s.grid().node_count())
        .into_par_iter()
        .filter(|&node| bad(Expansion::new(s.at(node), k).classify(0.0)))
        .collect()
}

/// Augmented Hessian at one node, lower indices.
#[inline]
pub(crate) fn bar_at(w: &[f64], heff: &SymMatrix, node: usize, p: &ProblemSpec) -> SymMatrix {
    let bg = p.bg();
    let (h, dw) = covariant_hessian_at(bg.grid(), w, node, bg.dphi().at(node));
    match p.case {
        Case::Negative => -conformal_change(heff, &h, &dw, bg.t()),
        Case::Positive => {
            let mut neg = dw;
            neg.iter_mut().for_each(|x| *x = -*x);
            conformal_change(heff, &(-h), &neg, bg.t())
        }
    }
}

/// Augmented Hessian with one index raised, at one node.
#[inline]
pub(crate) fn raised_bar_at(w: &[f64], heff: &SymMatrix, node: usize, p: &ProblemSpec) -> SymMatrix {
    bar_at(w, heff, node, p).scale(1.0 / p.bg().conformal_factor(node))
}

/// `rho^k e^{2kw}` at one node.
#[inline]
pub(crate) fn rhs_power(rho: f64, w: f64, k: usize) -> f64 {
    (rho * (2.0 * w).exp()).powi(k as i32)
}

/// Augmented Hessian field (lower indices) for the homotopy-effective tensor `heff`.
pub fn bar_hessian(w: &ScalarField, heff: &TensorField, p: &ProblemSpec) -> TensorField {
    assert!(w.grid() == p.grid() && heff.grid() == p.grid(), "fields live on different grids");
    let vals = w.values();
    TensorField::from_node_fn(*p.grid(), |node| bar_at(vals, heff.at(node), node, p))
}

/// `sigma_k(g^{-1} bar(w)) - rho^k e^{2kw}` per node.
pub fn residual_power(w: &ScalarField, hp: &HomotopyPoint, p: &ProblemSpec) -> ScalarField {
    evaluate(w, hp, p).residual
}

/// `sigma_k^{1/k}(g^{-1} bar(w)) - rho e^{2w}` per node; requires the
/// positive cone everywhere.
pub fn residual_root(
    w: &ScalarField,
    hp: &HomotopyPoint,
    p: &ProblemSpec,
) -> Result<ScalarField, ConeViolationAt> {
    let vals = w.values();
    let k = p.k();
    let per_node: Vec<Option<f64>> = (0..p.grid().node_count())
        .into_par_iter()
        .map(|node| {
            let e = Expansion::new(&raised_bar_at(vals, hp.heff().at(node), node, p), k);
            if !e.classify(0.0).is_positive() {
                return None;
            }
            let root = signed_root_of(&e).ok()?;
            Some(root - hp.rho().values()[node] * (2.0 * vals[node]).exp())
        })
        .collect();
    let bad: Vec<Vec<usize>> = per_node
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_none())
        .map(|(node, _)| p.grid().index_of(node))
        .collect();
    if !bad.is_empty() {
        return Err(ConeViolationAt { k, nodes: bad });
    }
    Ok(ScalarField::new(*p.grid(), per_node.into_iter().map(Option::unwrap).collect())
        .expect("node count preserved"))
}

/// Nodewise cone classes of the raised augmented Hessian.
#[derive(Clone, Debug, PartialEq)]
pub struct ConeCertificate {
    pub classes: Vec<ConeClass>,
    /// `min over nodes of min_{j<=k} sigma_j`.
    pub margin: f64,
    pub all_positive: bool,
}

pub fn cone_certificate(w: &ScalarField, hp: &HomotopyPoint, p: &ProblemSpec) -> ConeCertificate {
    let vals = w.values();
    let k = p.k();
    let margin_cut = p.bg().cone_margin();
    let per_node: Vec<(ConeClass, f64)> = (0..p.grid().node_count())
        .into_par_iter()
        .map(|node| {
            let e = Expansion::new(&raised_bar_at(vals, hp.heff().at(node), node, p), k);
            (e.classify(margin_cut), e.min_sigma())
        })
        .collect();
    let margin = per_node.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
    let all_positive = per_node.iter().all(|x| x.0.is_positive());
    ConeCertificate {
        classes: per_node.into_iter().map(|x| x.0).collect(),
        margin,
        all_positive,
    }
}

/// Residual plus cone summary from a single sweep over the grid.
#[derive(Clone, Debug)]
pub(crate) struct Evaluation {
    pub residual: ScalarField,
    pub residual_max: f64,
    pub cone_margin: f64,
    pub in_cone: bool,
}

pub(crate) fn evaluate(w: &ScalarField, hp: &HomotopyPoint, p: &ProblemSpec) -> Evaluation {
    let vals = w.values();
    let rho = hp.rho().values();
    let k = p.k();
    let cut = p.bg().cone_margin();
    let per_node: Vec<(f64, f64, bool)> = (0..p.grid().node_count())
        .into_par_iter()
        .map(|node| {
            let e = Expansion::new(&raised_bar_at(vals, hp.heff().at(node), node, p), k);
            let r = e.sigma(k) - rhs_power(rho[node], vals[node], k);
            (r, e.min_sigma(), e.min_sigma() > cut)
        })
        .collect();
    let residual_max = per_node.iter().fold(0.0_f64, |m, x| m.max(x.0.abs()));
    let cone_margin = per_node.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
    let in_cone = per_node.iter().all(|x| x.2);
    let residual = ScalarField::new(*p.grid(), per_node.into_iter().map(|x| x.0).collect())
        .expect("node count preserved");
    Evaluation {
        residual,
        residual_max,
        cone_margin,
        in_cone,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geomgrid::{grad, hess_flat, transform_schouten, Grid};
    use crate::symfun::sigma;

    fn flat_problem(grid: Grid, k: usize, t: f64, s: SymMatrix, f: f64) -> ProblemSpec {
        let bg = Background::flat(TensorField::constant(grid, s), t).unwrap();
        ProblemSpec::new(bg, k, ScalarField::constant(grid, f), Case::Negative, SolverOptions::default())
            .unwrap()
    }

    #[test]
    fn bar_of_constants_is_minus_heff() {
        let g = Grid::cubic(3, 8).unwrap();
        let p = flat_problem(g, 2, 0.0, SymMatrix::scalar(3, -1.0), -1.0);
        let heff = TensorField::from_node_fn(g, |n| SymMatrix::from_fn(3, |i, j| -(1.0 + (n % 3) as f64) * if i == j { 1.0 } else { 0.1 }));
        for w in [ScalarField::zeros(g), ScalarField::constant(g, 0.37)] {
            let bar = bar_hessian(&w, &heff, &p);
            assert_eq!(bar.max_abs_diff(&heff.map(|m| -*m)), 0.0);
        }
    }

    #[test]
    fn bar_matches_stencil_oracle() {
        // w = 0.05 sin x1, phi = 0, t = 0, n = 3, S = 0 at x1 = pi/2.
        let g = Grid::cubic(3, 16).unwrap();
        let bg = Background::flat(TensorField::constant(g, SymMatrix::scalar(3, -1.0)), 0.0).unwrap();
        let p = ProblemSpec::new(bg, 2, ScalarField::constant(g, -1.0), Case::Negative, SolverOptions::default()).unwrap();
        let w = ScalarField::from_fn(g, |x| 0.05 * x[0].sin());
        let zero = TensorField::zeros(g);
        let bar = bar_hessian(&w, &zero, &p);
        let node = g.node_at(&[4, 2, 7]);
        let h = g.spacing(0);
        let wv = |i: usize| 0.05 * (i as f64 * h).sin();
        let d11 = (wv(5) - 2.0 * wv(4) + wv(3)) / (h * h);
        let d1 = (wv(5) - wv(3)) / (2.0 * h);
        // hess + (1/(n-2)) tr(hess) I + |dw|^2 I - dw dw^T
        let expect = SymMatrix::from_diag(&[d11 + d11 + d1 * d1 - d1 * d1, d11 + d1 * d1, d11 + d1 * d1]);
        assert!((*bar.at(node) - expect).max_abs() <= 1e-12);
        assert!(d1.abs() < 1e-15);
    }

    #[test]
    fn bar_is_negated_transformation_law() {
        let g = Grid::cubic(3, 8).unwrap();
        let phi = ScalarField::from_fn(g, |x| 0.1 * x[1].cos());
        let s = TensorField::constant(g, SymMatrix::scalar(3, -1.0));
        let bg = Background::new(phi, s.clone(), 0.3, 0.0).unwrap();
        let p = ProblemSpec::new(bg.clone(), 2, ScalarField::constant(g, -1.0), Case::Negative, SolverOptions::default()).unwrap();
        let w = ScalarField::from_fn(g, |x| 0.2 * (x[0] + x[2]).sin());
        let bar = bar_hessian(&w, &s, &p);
        let tilde = transform_schouten(&s, &w, &bg);
        assert!(bar.max_abs_diff(&tilde.map(|m| -*m)) <= 1e-15);
    }

    #[test]
    fn positive_case_flips_gradient_terms() {
        let g = Grid::cubic(3, 8).unwrap();
        let s = TensorField::constant(g, SymMatrix::scalar(3, 1.0));
        let bg = Background::flat(s.clone(), 0.0).unwrap();
        let p = ProblemSpec::new(bg, 2, ScalarField::constant(g, 1.0), Case::Positive, SolverOptions::default()).unwrap();
        let w = ScalarField::from_fn(g, |x| 0.2 * x[0].sin() + 0.1 * x[1].cos());
        let bar = bar_hessian(&w, &s, &p);
        let h = hess_flat(&w);
        let d = grad(&w);
        for node in 0..g.node_count() {
            let dw = d.at(node);
            let sq: f64 = dw.iter().map(|x| x * x).sum();
            let hh = h.at(node);
            let expect = (*hh + SymMatrix::outer(dw) + *s.at(node)).shift(hh.trace() - sq);
            assert!((*bar.at(node) - expect).max_abs() <= 1e-13);
        }
    }

    #[test]
    fn problem_validation() {
        let g = Grid::cubic(3, 8).unwrap();
        let neg = TensorField::constant(g, SymMatrix::scalar(3, -1.0));
        let bg = Background::flat(neg.clone(), 0.0).unwrap();
        let opts = SolverOptions::default;
        assert!(matches!(
            ProblemSpec::new(bg.clone(), 4, ScalarField::constant(g, -1.0), Case::Negative, opts()),
            Err(ProblemError::Order { k: 4, n: 3 })
        ));
        let mut f = ScalarField::constant(g, -1.0);
        f.values_mut()[5] = 0.0;
        assert!(matches!(
            ProblemSpec::new(bg.clone(), 2, f, Case::Negative, opts()),
            Err(ProblemError::RhsNotNegative { .. })
        ));
        let mixed = TensorField::from_node_fn(g, |n| {
            if n == 9 { SymMatrix::from_diag(&[1.0, 1.0, -3.0]) } else { SymMatrix::scalar(3, -1.0) }
        });
        let bad_bg = Background::flat(mixed, 0.0).unwrap();
        match ProblemSpec::new(bad_bg, 2, ScalarField::constant(g, -1.0), Case::Negative, opts()) {
            Err(ProblemError::BackgroundCone { count, first, .. }) => {
                assert_eq!(count, 1);
                assert_eq!(first, g.index_of(9));
            }
            other => panic!("{other:?}"),
        }
        let small = Grid::cubic(3, 6).unwrap();
        let bg_small = Background::flat(TensorField::constant(small, SymMatrix::scalar(3, -1.0)), 0.0).unwrap();
        assert!(matches!(
            ProblemSpec::new(bg_small, 2, ScalarField::constant(small, -1.0), Case::Negative, opts()),
            Err(ProblemError::GridTooCoarse { .. })
        ));
        assert!(Background::flat(neg, 1.5).is_err());
    }

    #[test]
    fn injected_psd_never_decreases_sigma() {
        let g = Grid::cubic(3, 8).unwrap();
        let p = flat_problem(g, 2, 0.0, SymMatrix::scalar(3, -1.0), -1.0);
        let w = ScalarField::from_fn(g, |x| 0.1 * x[0].sin() * x[1].cos());
        let bar = bar_hessian(&w, p.bg().s(), &p);
        for m in bar.values() {
            assert!(crate::symfun::classify_cone(m, 2).unwrap().is_positive());
            for eps in [1e-3, 0.1, 1.0] {
                assert!(sigma(&m.shift(eps), 2).unwrap() >= sigma(m, 2).unwrap());
            }
        }
    }
}
