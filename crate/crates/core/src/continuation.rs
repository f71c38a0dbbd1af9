//! Homotopy continuation with a damped Newton corrector.
//!
//! The path joins the trivially solvable problem at `s = 0`
//!
//! ```text
//! H(s)   = s S - (1-s) binom(n,k)^{-1/k} g
//! rho(s) = s |f| + (1-s)
//! ```
//!
//! whose solution is `w = 0`, to the target problem at `s = 1`.

use std::fmt;

use rayon::prelude::*;

use crate::error::{NewtonFailure, NewtonFailureKind, ProblemError, SolveError};
use crate::geomgrid::{grad, ScalarField, TensorField};
use crate::krylov::{dense_solve, gmres};
use crate::linearized::{build_state, dense_assemble, ellipticity_certificate, EllipticityCertificate};
use crate::residual::{
    cone_certificate, evaluate, raised_bar_at, residual_root, Case, ProblemSpec,
};
use crate::symfun::{signed_root_of, Expansion};

/// Slack added to both C^0 bounds.
pub const BOUND_SLACK: f64 = 1e-9;

/// A point on the homotopy path.
#[derive(Clone, Debug, PartialEq)]
pub struct HomotopyPoint {
    s: f64,
    heff: TensorField,
    rho: ScalarField,
}

impl HomotopyPoint {
    pub fn at(p: &ProblemSpec, s: f64) -> Self {
        assert!((0.0..=1.0).contains(&s), "homotopy parameter {s} outside [0, 1]");
        let heff = p
            .bg()
            .s()
            .combine(s, &p.bg().metric_scaled(p.unit_scale()), -(1.0 - s));
        let rho = p.f().map(|f| s * f.abs() + (1.0 - s));
        Self { s, heff, rho }
    }

    /// The target problem, `s = 1`.
    pub fn target(p: &ProblemSpec) -> Self {
        Self::at(p, 1.0)
    }

    pub fn from_parts(s: f64, heff: TensorField, rho: ScalarField) -> Self {
        assert_eq!(heff.grid(), rho.grid(), "fields live on different grids");
        Self { s, heff, rho }
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn heff(&self) -> &TensorField {
        &self.heff
    }

    pub fn rho(&self) -> &ScalarField {
        &self.rho
    }

    /// Whether `heff` lies in the negative cone of order `k` at every node.
    pub fn heff_in_negative_cone(&self, k: usize) -> bool {
        self.heff
            .values()
            .par_iter()
            .all(|m| Expansion::new(m, k).classify(0.0).is_negative())
    }
}

/// C^0 bounds for the target problem.
pub fn apriori_bounds(p: &ProblemSpec) -> Result<(f64, f64), ProblemError> {
    apriori_bounds_at(&HomotopyPoint::target(p), p)
}

/// C^0 bounds `delta_lower < w < delta_upper` for the problem at `hp`:
/// `1/2 ln` of the extreme ratios `sigma_k^{1/k}(-g^{-1} H) / rho`.
pub fn apriori_bounds_at(hp: &HomotopyPoint, p: &ProblemSpec) -> Result<(f64, f64), ProblemError> {
    let k = p.k();
    let ratios: Vec<Option<f64>> = (0..p.grid().node_count())
        .into_par_iter()
        .map(|node| {
            let m = (-*hp.heff.at(node)).scale(1.0 / p.bg().conformal_factor(node));
            let e = Expansion::new(&m, k);
            if !e.classify(0.0).is_positive() {
                return None;
            }
            signed_root_of(&e).ok().map(|r| r / hp.rho.values()[node])
        })
        .collect();
    let bad: Vec<usize> = ratios
        .iter()
        .enumerate()
        .filter(|(_, r)| r.is_none())
        .map(|(i, _)| i)
        .collect();
    if let Some(&first) = bad.first() {
        return Err(ProblemError::BackgroundCone {
            expected: "negative",
            k,
            count: bad.len(),
            first: p.grid().index_of(first),
        });
    }
    let (lo, hi) = ratios
        .into_iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r), hi.max(r)));
    Ok((0.5 * lo.ln() - BOUND_SLACK, 0.5 * hi.ln() + BOUND_SLACK))
}

/// One Newton iteration as logged.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord {
    pub s: f64,
    pub iter: usize,
    /// Max-norm of the power residual.
    pub res: f64,
    /// Step that produced this iterate (0 for the initial one).
    pub alpha: f64,
    pub cone_margin: f64,
    /// Smallest eigenvalue of `Q` over the grid.
    pub ell_margin: f64,
}

impl fmt::Display for IterationRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "s={} iter={} res={:e} alpha={} cone_margin={:e} ell_margin={:e}",
            self.s, self.iter, self.res, self.alpha, self.cone_margin, self.ell_margin
        )
    }
}

/// Converged Newton iterate.
#[derive(Clone, Debug)]
pub struct NewtonOutcome {
    pub w: ScalarField,
    pub iterations: usize,
    pub residual: f64,
    pub cone_margin: f64,
    pub ellipticity: EllipticityCertificate,
    pub log: Vec<IterationRecord>,
}

/// Newton's method at fixed `hp`, starting from `w0`.
pub fn newton_solve(
    hp: &HomotopyPoint,
    p: &ProblemSpec,
    w0: &ScalarField,
) -> Result<NewtonOutcome, NewtonFailure> {
    newton_solve_logged(hp, p, w0, &mut Vec::new())
}

/// As [`newton_solve`], appending one record per iterate to `log`
/// (also on failure).
pub fn newton_solve_logged(
    hp: &HomotopyPoint,
    p: &ProblemSpec,
    w0: &ScalarField,
    log: &mut Vec<IterationRecord>,
) -> Result<NewtonOutcome, NewtonFailure> {
    let opts = &p.options;
    let k = p.k() as i32;
    let scale = hp.rho.values().iter().fold(0.0_f64, |m, r| m.max(r.powi(k)));
    let tol = opts.newton_tol * scale;
    let start = log.len();
    let fail = |kind, iterations, residual| NewtonFailure {
        kind,
        iterations,
        residual,
    };

    let mut w = w0.clone();
    let mut ev = evaluate(&w, hp, p);
    if !ev.in_cone {
        return Err(fail(NewtonFailureKind::ConeAtStart, 0, ev.residual_max));
    }
    let mut alpha = 0.0;
    for iter in 0..=opts.max_newton {
        let state = build_state(&w, hp, p);
        let ell = ellipticity_certificate(&state);
        log.push(IterationRecord {
            s: hp.s,
            iter,
            res: ev.residual_max,
            alpha,
            cone_margin: ev.cone_margin,
            ell_margin: ell.min_q_eigenvalue,
        });
        if ev.residual_max <= tol {
            return Ok(NewtonOutcome {
                w,
                iterations: iter,
                residual: ev.residual_max,
                cone_margin: ev.cone_margin,
                ellipticity: ell,
                log: log[start..].to_vec(),
            });
        }
        if iter == opts.max_newton {
            break;
        }
        let rhs: Vec<f64> = ev.residual.values().iter().map(|r| -r).collect();
        let step = if p.grid().node_count() <= opts.dense_threshold {
            let a = dense_assemble(&state).expect("dense threshold below assembly limit");
            dense_solve(a, &rhs)
        } else {
            let inv: Vec<f64> = state.diagonal().iter().map(|d| 1.0 / d).collect();
            gmres(
                |v| state.apply_slice(v),
                &inv,
                &rhs,
                opts.krylov_tol,
                opts.krylov_restart,
                opts.krylov_max_iter,
            )
            .map(|(x, _)| x)
        }
        .map_err(|e| fail(e.into(), iter, ev.residual_max))?;
        let d = ScalarField::new(*p.grid(), step).expect("node count preserved");

        alpha = 1.0;
        loop {
            let trial = w.axpy(alpha, &d);
            let tev = evaluate(&trial, hp, p);
            if tev.in_cone && (tev.residual_max < ev.residual_max || tev.residual_max <= tol) {
                w = trial;
                ev = tev;
                break;
            }
            alpha *= 0.5;
            if alpha < opts.alpha_min {
                return Err(fail(NewtonFailureKind::LineSearchStall, iter + 1, ev.residual_max));
            }
        }
    }
    Err(fail(NewtonFailureKind::IterationCap, opts.max_newton, ev.residual_max))
}

/// One attempted continuation step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathEntry {
    pub s: f64,
    pub accepted: bool,
    pub iterations: usize,
    pub residual: f64,
    pub cone_margin: f64,
    pub ell_margin: f64,
    pub heff_in_cone: bool,
}

/// Pass/fail of the three certificates of an accepted solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Certified {
    pub residual: bool,
    pub cone: bool,
    pub bounds: bool,
}

impl Certified {
    pub fn all(&self) -> bool {
        self.residual && self.cone && self.bounds
    }
}

/// Margins behind each certificate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Margins {
    /// `max |residual_root|` (infinite if the cone check failed).
    pub residual_root: f64,
    pub residual_tolerance: f64,
    pub cone: f64,
    pub ellipticity: f64,
    pub min_w: f64,
    pub max_w: f64,
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub w: ScalarField,
    pub path: Vec<PathEntry>,
    pub log: Vec<IterationRecord>,
    pub bounds: (f64, f64),
    pub certified: Certified,
    pub margins: Margins,
}

/// Evaluates the certificate triad for `w` against the target problem.
pub fn certify(p: &ProblemSpec, w: &ScalarField) -> Result<(Certified, Margins, (f64, f64)), ProblemError> {
    let hp = HomotopyPoint::target(p);
    let bounds = apriori_bounds_at(&hp, p)?;
    let tol = 1e-10 * hp.rho.max();
    let root = residual_root(w, &hp, p).map(|r| r.max_abs()).unwrap_or(f64::INFINITY);
    let cone = cone_certificate(w, &hp, p);
    let ell = ellipticity_certificate(&build_state(w, &hp, p));
    let in_bounds = w.values().iter().all(|&x| bounds.0 < x && x < bounds.1);
    Ok((
        Certified {
            residual: root <= tol,
            cone: cone.all_positive,
            bounds: in_bounds,
        },
        Margins {
            residual_root: root,
            residual_tolerance: tol,
            cone: cone.margin,
            ellipticity: ell.min_q_eigenvalue,
            min_w: w.min(),
            max_w: w.max(),
        },
        bounds,
    ))
}

fn check_solvable(p: &ProblemSpec) -> Result<(), ProblemError> {
    if p.case() != Case::Negative {
        return Err(ProblemError::UnsupportedCase);
    }
    if !(p.t() < 1.0) {
        return Err(ProblemError::SolverParameterT(p.t()));
    }
    Ok(())
}

struct PathResult {
    w: ScalarField,
    path: Vec<PathEntry>,
    log: Vec<IterationRecord>,
}

/// Adaptive stepping in `s` from a solution `w_start` at `s = 0`.
fn follow(
    p: &ProblemSpec,
    w_start: ScalarField,
    point: impl Fn(f64) -> HomotopyPoint,
) -> Result<PathResult, SolveError> {
    let opts = &p.options;
    let k = p.k();
    let mut log = Vec::new();
    let mut path = Vec::new();

    let hp0 = point(0.0);
    let first = newton_solve_logged(&hp0, p, &w_start, &mut log).map_err(|cause| {
        SolveError::StepUnderflow {
            last_good_s: 0.0,
            ds_min: opts.ds_min,
            cause,
        }
    })?;
    path.push(PathEntry {
        s: 0.0,
        accepted: true,
        iterations: first.iterations,
        residual: first.residual,
        cone_margin: first.cone_margin,
        ell_margin: first.ellipticity.min_q_eigenvalue,
        heff_in_cone: hp0.heff_in_negative_cone(k),
    });
    let mut w = first.w;
    let mut s = 0.0;
    let mut ds = opts.ds_initial.min(opts.ds_max);
    let mut streak = 0;
    while s < 1.0 {
        let s_next = if s + ds >= 1.0 { 1.0 } else { s + ds };
        let hp = point(s_next);
        match newton_solve_logged(&hp, p, &w, &mut log) {
            Ok(out) => {
                path.push(PathEntry {
                    s: s_next,
                    accepted: true,
                    iterations: out.iterations,
                    residual: out.residual,
                    cone_margin: out.cone_margin,
                    ell_margin: out.ellipticity.min_q_eigenvalue,
                    heff_in_cone: hp.heff_in_negative_cone(k),
                });
                w = out.w;
                s = s_next;
                streak += 1;
                if streak >= 2 {
                    ds = (2.0 * ds).min(opts.ds_max);
                    streak = 0;
                }
            }
            Err(cause) => {
                path.push(PathEntry {
                    s: s_next,
                    accepted: false,
                    iterations: cause.iterations,
                    residual: cause.residual,
                    cone_margin: f64::NAN,
                    ell_margin: f64::NAN,
                    heff_in_cone: hp.heff_in_negative_cone(k),
                });
                streak = 0;
                ds *= 0.5;
                if ds < opts.ds_min {
                    return Err(SolveError::StepUnderflow {
                        last_good_s: s,
                        ds_min: opts.ds_min,
                        cause,
                    });
                }
            }
        }
    }
    Ok(PathResult { w, path, log })
}

fn finish(p: &ProblemSpec, run: PathResult) -> Result<SolveReport, SolveError> {
    let (certified, margins, bounds) = certify(p, &run.w)?;
    Ok(SolveReport {
        w: run.w,
        path: run.path,
        log: run.log,
        bounds,
        certified,
        margins,
    })
}

/// Solves the target problem by continuation from `w = 0` at `s = 0`.
pub fn continuation_solve(p: &ProblemSpec) -> Result<SolveReport, SolveError> {
    check_solvable(p)?;
    let run = follow(p, ScalarField::zeros(*p.grid()), |s| HomotopyPoint::at(p, s))?;
    finish(p, run)
}

/// Solves the target problem starting from `seed`: a direct Newton solve,
/// falling back to a right-hand-side homotopy for which `seed` is the exact
/// solution at `s = 0`.
pub fn solve_from_seed(p: &ProblemSpec, seed: &ScalarField) -> Result<SolveReport, SolveError> {
    check_solvable(p)?;
    let target = HomotopyPoint::target(p);
    let mut log = Vec::new();
    if let Ok(out) = newton_solve_logged(&target, p, seed, &mut log) {
        let run = PathResult {
            path: vec![PathEntry {
                s: 1.0,
                accepted: true,
                iterations: out.iterations,
                residual: out.residual,
                cone_margin: out.cone_margin,
                ell_margin: out.ellipticity.min_q_eigenvalue,
                heff_in_cone: target.heff_in_negative_cone(p.k()),
            }],
            w: out.w,
            log,
        };
        return finish(p, run);
    }
    let rho_seed = seed_rhs(p, seed, &target).map_err(|cause| SolveError::StepUnderflow {
        last_good_s: 0.0,
        ds_min: p.options.ds_min,
        cause,
    })?;
    let heff = target.heff.clone();
    let f_abs = target.rho.clone();
    let mut run = follow(p, seed.clone(), |s| {
        let rho = ScalarField::new(
            *p.grid(),
            rho_seed
                .values()
                .iter()
                .zip(f_abs.values())
                .map(|(a, b)| (1.0 - s) * a + s * b)
                .collect(),
        )
        .expect("node count preserved");
        HomotopyPoint::from_parts(s, heff.clone(), rho)
    })?;
    log.append(&mut run.log);
    run.log = log;
    finish(p, run)
}

/// `rho` for which `seed` solves the problem with tensor `hp.heff`.
fn seed_rhs(p: &ProblemSpec, seed: &ScalarField, hp: &HomotopyPoint) -> Result<ScalarField, NewtonFailure> {
    let k = p.k();
    let vals = seed.values();
    let per_node: Vec<Option<f64>> = (0..p.grid().node_count())
        .into_par_iter()
        .map(|node| {
            let e = Expansion::new(&raised_bar_at(vals, hp.heff.at(node), node, p), k);
            if !e.classify(p.bg().cone_margin()).is_positive() {
                return None;
            }
            signed_root_of(&e).ok().map(|r| r * (-2.0 * vals[node]).exp())
        })
        .collect();
    if per_node.iter().any(Option::is_none) {
        return Err(NewtonFailure {
            kind: NewtonFailureKind::ConeAtStart,
            iterations: 0,
            residual: f64::INFINITY,
        });
    }
    Ok(ScalarField::new(*p.grid(), per_node.into_iter().flatten().collect()).expect("node count preserved"))
}

/// Solves from each seed and returns the largest pairwise max-norm distance
/// between the solutions (0 for fewer than two seeds).
pub fn uniqueness_probe(p: &ProblemSpec, seeds: &[ScalarField]) -> Result<f64, SolveError> {
    let sols = seeds
        .iter()
        .map(|seed| solve_from_seed(p, seed).map(|r| r.w))
        .collect::<Result<Vec<_>, _>>()?;
    let mut worst: f64 = 0.0;
    for i in 0..sols.len() {
        for j in (i + 1)..sols.len() {
            worst = worst.max(sols[i].max_abs_diff(&sols[j]));
        }
    }
    Ok(worst)
}

/// One row of a sweep in `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub t: f64,
    pub converged: bool,
    /// Largest accepted `s`.
    pub last_s: f64,
    pub max_abs_w: f64,
    pub max_grad_w: f64,
    pub max_bar_eigenvalue: f64,
    pub ell_margin: f64,
    pub certified: bool,
    pub error: Option<String>,
}

impl SweepRow {
    fn failed(t: f64, last_s: f64, error: String) -> Self {
        Self {
            t,
            converged: false,
            last_s,
            max_abs_w: f64::NAN,
            max_grad_w: f64::NAN,
            max_bar_eigenvalue: f64::NAN,
            ell_margin: f64::NAN,
            certified: false,
            error: Some(error),
        }
    }
}

pub const SWEEP_COLUMNS: &str =
    "t,converged,last_s,max_abs_w,max_grad_w,max_bar_eigenvalue,ellipticity_margin,certified";

impl fmt::Display for SweepRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{},{},{},{},{}",
            self.t,
            self.converged as u8,
            self.last_s,
            self.max_abs_w,
            self.max_grad_w,
            self.max_bar_eigenvalue,
            self.ell_margin,
            self.certified as u8
        )
    }
}

/// Solves the problem for each `t` in turn.
pub fn t_sweep(p: &ProblemSpec, t_values: &[f64]) -> Vec<SweepRow> {
    t_values
        .iter()
        .map(|&t| {
            let pt = match p.with_t(t) {
                Ok(pt) => pt,
                Err(e) => return SweepRow::failed(t, 0.0, e.to_string()),
            };
            match continuation_solve(&pt) {
                Ok(rep) => {
                    let hp = HomotopyPoint::target(&pt);
                    let bars = crate::residual::bar_hessian(&rep.w, hp.heff(), &pt);
                    let max_eig = bars
                        .values()
                        .par_iter()
                        .enumerate()
                        .map(|(node, m)| m.scale(1.0 / pt.bg().conformal_factor(node)).max_eigenvalue())
                        .collect::<Vec<_>>()
                        .into_iter()
                        .fold(f64::NEG_INFINITY, f64::max);
                    SweepRow {
                        t,
                        converged: true,
                        last_s: 1.0,
                        max_abs_w: rep.w.max_abs(),
                        max_grad_w: grad(&rep.w).max_norm(),
                        max_bar_eigenvalue: max_eig,
                        ell_margin: rep.margins.ellipticity,
                        certified: rep.certified.all(),
                        error: None,
                    }
                }
                Err(SolveError::StepUnderflow { last_good_s, ref cause, .. }) => {
                    SweepRow::failed(t, last_good_s, cause.to_string())
                }
                Err(e) => SweepRow::failed(t, 0.0, e.to_string()),
            }
        })
        .collect()
}
