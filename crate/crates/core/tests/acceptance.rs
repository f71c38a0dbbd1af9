//! Acceptance suite. Runs every criterion in order, prints one PASS/FAIL
//! line each and exits non-zero if any fails.

use std::time::Instant;

use nalgebra::SVD;
use sigmak::continuation::{continuation_solve, uniqueness_probe, HomotopyPoint, SolveReport};
use sigmak::expr::TrigSeries;
use sigmak::geomgrid::{Background, Grid, ScalarField, TensorField};
use sigmak::linearized::{build_state, dense_assemble, ellipticity_certificate};
use sigmak::oracle::{
    make_manufactured, make_manufactured_analytic, run_family, Family, ManufacturedProblem, DEFAULT_SEED,
};
use sigmak::residual::{bar_hessian, residual_power, Case, ProblemSpec, SolverOptions};
use sigmak::symfun::{binomial, signed_root, SymMatrix};

struct Outcome {
    pass: bool,
    detail: String,
}

#[derive(Default)]
struct Shared {
    /// `(label, every node strictly inside the bounds)` for criteria 5-7.
    solves: Vec<(String, bool)>,
}

impl Shared {
    fn record(&mut self, label: impl Into<String>, rep: &SolveReport) {
        let (lo, hi) = rep.bounds;
        let inside = rep.w.values().iter().all(|&x| lo < x && x < hi);
        self.solves.push((label.into(), inside));
    }
}

fn dims() -> Vec<usize> {
    vec![3, 4, 5]
}

fn families(list: &[Family], trials: usize) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for &fam in list {
        let r = run_family(fam, trials, DEFAULT_SEED, &dims());
        pass &= r.passed();
        parts.push(format!("{} {}/{} worst={:.2e}", fam.name(), r.checks - r.failures, r.checks, r.worst));
    }
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

fn identity_suite(_: &mut Shared) -> Outcome {
    families(
        &[Family::SigmaVsEigen, Family::NewtonVsDelta, Family::Contraction, Family::Trace],
        1000,
    )
}

fn derivative_identity(_: &mut Shared) -> Outcome {
    families(&[Family::Derivative], 100)
}

fn concavity_monotonicity(_: &mut Shared) -> Outcome {
    families(&[Family::Concavity, Family::Monotonicity], 10_000)
}

/// Negative-definite anisotropic tensor `-(e^{2 phi}) diag(1 + 0.2 sin x1, 1, ..)`.
fn anisotropic_tensor(grid: Grid, phi: &ScalarField) -> TensorField {
    let n = grid.dim();
    TensorField::from_node_fn(grid, |node| {
        let x = grid.position(node);
        let mut d = vec![1.0; n];
        d[0] += 0.2 * x[0].sin();
        let mut m = SymMatrix::from_diag(&d);
        m.set(0, 1, 0.1 * x[2].cos());
        m.scale(-(2.0 * phi.values()[node]).exp())
    })
}

fn w_series(n: usize) -> TrigSeries {
    let mut s = String::from("0.1*sin(1,1) + 0.05*cos(2,1) + 0.03*sin(1,1)*sin(3,1)");
    if n == 4 {
        s.push_str(" + 0.04*cos(4,1)");
    }
    s.parse().unwrap()
}

fn phi_series() -> TrigSeries {
    "0.1*cos(3,1)".parse().unwrap()
}

fn manufactured(n: usize, k: usize, t: f64, size: usize) -> ManufacturedProblem {
    let grid = Grid::cubic(n, size).unwrap();
    let phi = phi_series().sample(grid);
    let s = anisotropic_tensor(grid, &phi);
    let bg = Background::new(phi, s, t, 0.0).unwrap();
    make_manufactured(bg, k, w_series(n).sample(grid), SolverOptions::default()).unwrap()
}

const MANUFACTURED_CASES: [(usize, usize, f64); 5] = [(3, 1, 0.0), (3, 2, 0.0), (3, 3, 0.0), (3, 2, 0.5), (4, 2, 0.0)];

fn linearization_consistency(_: &mut Shared) -> Outcome {
    let mut worst_err: f64 = 0.0;
    let mut worst_order_dev: f64 = 0.0;
    let mut states = 0;
    let mut pass = true;
    for n in [3, 4] {
        let grid = Grid::cubic(n, 16).unwrap();
        for k in 1..=n {
            for t in [0.0, 0.5] {
                let phi = phi_series().sample(grid);
                let s = anisotropic_tensor(grid, &phi);
                let bg = Background::new(phi, s, t, 0.0).unwrap();
                let f = ScalarField::from_fn(grid, |x| -(1.0 + 0.3 * x[0].sin()));
                let p = ProblemSpec::new(bg, k, f, Case::Negative, SolverOptions::default()).unwrap();
                for j in 0..5 {
                    let a = 0.02 * (j + 1) as f64;
                    let w = ScalarField::from_fn(grid, |x| a * (x[0] + j as f64).sin() + 0.5 * a * (x[1] * 2.0).cos());
                    let v = ScalarField::from_fn(grid, |x| (x[1] + 0.3 * j as f64).cos() * x[2].sin() + 0.5);
                    let hp = HomotopyPoint::at(&p, 0.2 * j as f64 + 0.1);
                    let lv = build_state(&w, &hp, &p).apply(&v);
                    let err = |eps: f64| {
                        let rp = residual_power(&w.axpy(eps, &v), &hp, &p);
                        let rm = residual_power(&w.axpy(-eps, &v), &hp, &p);
                        let fd = rp.axpy(-1.0, &rm).map(|x| x / (2.0 * eps));
                        fd.max_abs_diff(&lv)
                    };
                    let (e2, e1) = (err(2e-4), err(1e-4));
                    let order = (e2 / e1).log2();
                    states += 1;
                    worst_err = worst_err.max(e1);
                    worst_order_dev = worst_order_dev.max((order - 2.0).abs());
                    if e1 > 1e-5 || !(1.8..=2.2).contains(&order) {
                        pass = false;
                    }
                }
            }
        }
    }
    Outcome {
        pass,
        detail: format!("{states} states, max mismatch {worst_err:.2e} at eps=1e-4, max |order-2| {worst_order_dev:.3}"),
    }
}

fn constant_problem(n: usize, k: usize, t: f64, size: usize) -> ProblemSpec {
    let g = Grid::cubic(n, size).unwrap();
    let c = binomial(n, k).powf(-1.0 / k as f64);
    let bg = Background::flat(TensorField::constant(g, SymMatrix::scalar(n, -c)), t).unwrap();
    ProblemSpec::new(bg, k, ScalarField::constant(g, -1.0), Case::Negative, SolverOptions::default()).unwrap()
}

fn trivial_path(sh: &mut Shared) -> Outcome {
    let p = constant_problem(3, 2, 0.0, 16);
    match continuation_solve(&p) {
        Ok(rep) => {
            sh.record("trivial", &rep);
            let pass = rep.w.max_abs() <= 1e-12 && rep.certified.all();
            Outcome {
                pass,
                detail: format!(
                    "max|w| {:.2e}, residual {:.2e}, cone {}, bounds {}",
                    rep.w.max_abs(),
                    rep.margins.residual_root,
                    rep.certified.cone,
                    rep.certified.bounds
                ),
            }
        }
        Err(e) => Outcome {
            pass: false,
            detail: e.to_string(),
        },
    }
}

fn manufactured_recovery(sh: &mut Shared) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (n, k, t) in MANUFACTURED_CASES {
        let m = manufactured(n, k, t, 16);
        match continuation_solve(&m.problem) {
            Ok(rep) => {
                let err = rep.w.max_abs_diff(&m.w_exact);
                sh.record(format!("manufactured ({n},{k},{t})"), &rep);
                pass &= err <= 1e-9 && rep.certified.all();
                parts.push(format!("({n},{k},{t}) err={err:.1e}"));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("({n},{k},{t}) {e}"));
            }
        }
    }
    Outcome {
        pass,
        detail: parts.join(", "),
    }
}

fn manufactured_convergence(sh: &mut Shared) -> Outcome {
    let mut errs = Vec::new();
    for size in [16, 32] {
        let grid = Grid::cubic(3, size).unwrap();
        let phi = phi_series();
        let s = anisotropic_tensor(grid, &phi.sample(grid));
        let w = w_series(3);
        let m = make_manufactured_analytic(grid, 2, 0.0, &phi, s, &w, SolverOptions::default()).unwrap();
        match continuation_solve(&m.problem) {
            Ok(rep) => {
                sh.record(format!("analytic {size}^3"), &rep);
                errs.push(rep.w.max_abs_diff(&m.w_exact));
            }
            Err(e) => {
                return Outcome {
                    pass: false,
                    detail: format!("{size}^3: {e}"),
                }
            }
        }
    }
    let order = (errs[0] / errs[1]).log2();
    Outcome {
        pass: (1.8..=2.2).contains(&order),
        detail: format!("err16={:.3e} err32={:.3e} order={order:.3}", errs[0], errs[1]),
    }
}

fn c0_certificate(sh: &mut Shared) -> Outcome {
    let bad: Vec<&str> = sh.solves.iter().filter(|s| !s.1).map(|s| s.0.as_str()).collect();
    Outcome {
        pass: !sh.solves.is_empty() && bad.is_empty(),
        detail: format!("{} accepted solves checked, violations in {:?}", sh.solves.len(), bad),
    }
}

fn uniqueness(_: &mut Shared) -> Outcome {
    let mut pass = true;
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (n, k, t) in MANUFACTURED_CASES {
        let m = manufactured(n, k, t, 16);
        let grid = *m.problem.grid();
        let seeds = vec![
            ScalarField::zeros(grid),
            m.w_exact.axpy(1.0, &ScalarField::from_fn(grid, |x| 0.05 * x[1].sin())),
            ScalarField::from_fn(grid, |x| -0.1 + 0.03 * x[0].cos()),
        ];
        match uniqueness_probe(&m.problem, &seeds) {
            Ok(d) => {
                worst = worst.max(d);
                pass &= d <= 1e-8;
            }
            Err(e) => {
                pass = false;
                parts.push(format!("({n},{k},{t}) {e}"));
            }
        }
    }
    Outcome {
        pass,
        detail: format!("max pairwise distance {worst:.2e} {}", parts.join(", ")),
    }
}

fn det_ricci(_: &mut Shared) -> Outcome {
    let grid = Grid::cubic(3, 16).unwrap();
    let phi = phi_series().sample(grid);
    let s = anisotropic_tensor(grid, &phi);
    let bg = Background::new(phi, s, 0.0, 0.0).unwrap();
    let f = ScalarField::from_fn(grid, |x| -(1.0 + 0.3 * x[0].sin() * x[1].cos()));
    let p = ProblemSpec::new(bg, 3, f.clone(), Case::Negative, SolverOptions::default()).unwrap();
    let rep = match continuation_solve(&p) {
        Ok(r) => r,
        Err(e) => {
            return Outcome {
                pass: false,
                detail: e.to_string(),
            }
        }
    };
    let bars = bar_hessian(&rep.w, p.bg().s(), &p);
    let mut worst: f64 = 0.0;
    for node in 0..grid.node_count() {
        let raised = bars.at(node).scale(1.0 / p.bg().conformal_factor(node));
        let lhs = signed_root(&raised, 3).unwrap_or(f64::NAN);
        let rhs = -f.values()[node] * (2.0 * rep.w.values()[node]).exp();
        worst = worst.max((lhs - rhs).abs());
    }
    Outcome {
        pass: rep.certified.all() && worst <= 1e-9,
        detail: format!("certified {}, max |det^(1/3) + f e^(2w)| = {worst:.2e}", rep.certified.all()),
    }
}

fn ellipticity(_: &mut Shared) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (n, k, t) in MANUFACTURED_CASES.iter().copied().filter(|c| c.0 == 3) {
        let m = manufactured(n, k, t, 8);
        let rep = match continuation_solve(&m.problem) {
            Ok(r) => r,
            Err(e) => {
                pass = false;
                parts.push(format!("({n},{k},{t}) {e}"));
                continue;
            }
        };
        let state = build_state(&rep.w, &HomotopyPoint::target(&m.problem), &m.problem);
        let cert = ellipticity_certificate(&state);
        let a = dense_assemble(&state).unwrap();
        let smin = SVD::new(a, false, false).singular_values.min();
        pass &= smin > 0.0 && cert.min_q_eigenvalue > 0.0;
        parts.push(format!("({n},{k},{t}) s_min={smin:.2e} q_min={:.2e}", cert.min_q_eigenvalue));
    }
    Outcome {
        pass,
        detail: parts.join(", "),
    }
}

fn main() {
    let criteria: [(&str, fn(&mut Shared) -> Outcome); 11] = [
        ("identity suite", identity_suite),
        ("derivative identity", derivative_identity),
        ("concavity and monotonicity", concavity_monotonicity),
        ("linearization consistency", linearization_consistency),
        ("trivial-path solve", trivial_path),
        ("manufactured recovery", manufactured_recovery),
        ("manufactured convergence", manufactured_convergence),
        ("C0 certificate", c0_certificate),
        ("uniqueness", uniqueness),
        ("det-Ricci preset", det_ricci),
        ("ellipticity and invertibility", ellipticity),
    ];
    let mut shared = Shared::default();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run(&mut shared);
        if !out.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<30} {} ({:.1}s) {}",
            i + 1,
            name,
            if out.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            out.detail
        );
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
