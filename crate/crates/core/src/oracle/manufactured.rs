//! Problems with a known solution.

use rayon::prelude::*;

use crate::error::{ConeViolationAt, OracleError};
use crate::expr::TrigSeries;
use crate::geomgrid::{conformal_change, Background, Grid, ScalarField, TensorField};
use crate::residual::{raised_bar_at, Case, ProblemSpec, SolverOptions};
use crate::symfun::{signed_root_of, Expansion, SymMatrix};

#[derive(Clone, Debug)]
pub struct ManufacturedProblem {
    /// Problem whose right-hand side is `f_derived`.
    pub problem: ProblemSpec,
    pub w_exact: ScalarField,
    pub f_derived: ScalarField,
}

/// Right-hand side for which `w_exact` solves the discrete equation
/// exactly: `f = -sigma_k^{1/k}(g^{-1} bar(w_exact)) e^{-2 w_exact}`, with the
/// solver's own difference operators.
pub fn make_manufactured(
    bg: Background,
    k: usize,
    w_exact: ScalarField,
    options: SolverOptions,
) -> Result<ManufacturedProblem, OracleError> {
    let grid = *bg.grid();
    if k < 1 || k > grid.dim() {
        return Err(OracleError::OrderOutOfRange {
            order: k,
            dim: grid.dim(),
        });
    }
    // placeholder right-hand side; validates grid, order and the tensor cone
    let scaffold = ProblemSpec::new(bg, k, ScalarField::constant(grid, -1.0), Case::Negative, options)?;
    let vals = w_exact.values();
    let s = scaffold.bg().s();
    let f: Vec<Option<f64>> = (0..grid.node_count())
        .into_par_iter()
        .map(|node| {
            let e = Expansion::new(&raised_bar_at(vals, s.at(node), node, &scaffold), k);
            if !e.classify(0.0).is_positive() {
                return None;
            }
            signed_root_of(&e).ok().map(|r| -r * (-2.0 * vals[node]).exp())
        })
        .collect();
    finish(scaffold, w_exact, f)
}

/// Right-hand side from the exact derivatives of trigonometric `w` and
/// `phi`; the discrete solution then differs from `w` by `O(h^2)`.
pub fn make_manufactured_analytic(
    grid: Grid,
    k: usize,
    t: f64,
    phi: &TrigSeries,
    s: TensorField,
    w: &TrigSeries,
    options: SolverOptions,
) -> Result<ManufacturedProblem, OracleError> {
    let n = grid.dim();
    if k < 1 || k > n {
        return Err(OracleError::OrderOutOfRange { order: k, dim: n });
    }
    let bg = Background::new(phi.sample(grid), s, t, 0.0)?;
    let scaffold = ProblemSpec::new(bg, k, ScalarField::constant(grid, -1.0), Case::Negative, options)?;
    let f: Vec<Option<f64>> = (0..grid.node_count())
        .into_par_iter()
        .map(|node| {
            let x = grid.position(node);
            let (pv, dp, _) = phi.jet(&x[..n], n);
            let (wv, dw, hw) = w.jet(&x[..n], n);
            let dot: f64 = dp.iter().zip(&dw).map(|(a, b)| a * b).sum();
            let cov = (hw - SymMatrix::sym_outer(&dp, &dw)).shift(dot);
            let bar = -conformal_change(scaffold.bg().s().at(node), &cov, &dw, t);
            let e = Expansion::new(&bar.scale((-2.0 * pv).exp()), k);
            if !e.classify(0.0).is_positive() {
                return None;
            }
            signed_root_of(&e).ok().map(|r| -r * (-2.0 * wv).exp())
        })
        .collect();
    finish(scaffold, w.sample(grid), f)
}

fn finish(
    scaffold: ProblemSpec,
    w_exact: ScalarField,
    f: Vec<Option<f64>>,
) -> Result<ManufacturedProblem, OracleError> {
    let grid = *scaffold.grid();
    let bad: Vec<Vec<usize>> = f
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_none())
        .map(|(node, _)| grid.index_of(node))
        .collect();
    if !bad.is_empty() {
        return Err(ConeViolationAt {
            k: scaffold.k(),
            nodes: bad,
        }
        .into());
    }
    let f: Vec<f64> = f.into_iter().flatten().collect();
    let nonneg = f.iter().filter(|v| !(**v < 0.0)).count();
    if nonneg > 0 {
        return Err(OracleError::RhsNotNegative(nonneg));
    }
    let f_derived = ScalarField::new(grid, f).expect("node count preserved");
    let problem = scaffold.with_f(f_derived.clone())?;
    Ok(ManufacturedProblem {
        problem,
        w_exact,
        f_derived,
    })
}
