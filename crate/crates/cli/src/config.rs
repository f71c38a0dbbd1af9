//! Run configuration: a flat `key = value` file.
//!
//! ```text
//! # comment
//! dim      = 3
//! size     = 16              # or: sizes = 16,16,12
//! lengths  = 6.283185307179586,6.283185307179586,6.283185307179586
//! k        = 2
//! t        = 0
//! phi      = 0.1*cos(3,1)    # default 0
//! S        = uniform(-unit)  # or uniform(c), diag(e1,..,en), or an expression
//! f        = -1 - 0.3*sin(1,1)   # or: manufactured | analytic
//! w_exact  = 0.1*sin(1,1)    # required by manufactured / analytic
//! ```
//!
//! `uniform(c)` means `c g`, an expression `e` means `e(x) g`, and
//! `diag(e1,..,en)` means `e^{2 phi} diag(e1(x),..,en(x))`. Inside
//! `uniform(..)` the word `unit` stands for `binom(n,k)^{-1/k}`. Solver keys:
//! `newton_tol`, `krylov_tol`, `krylov_restart`, `krylov_max_iter`,
//! `max_newton`, `dense_threshold`, `cone_margin`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use sigmak::expr::TrigSeries;
use sigmak::geomgrid::{Background, Grid, ScalarField, TensorField};
use sigmak::oracle::{make_manufactured, make_manufactured_analytic};
use sigmak::residual::{Case, ProblemSpec, SolverOptions};
use sigmak::symfun::{binomial, SymMatrix};

const KEYS: &[&str] = &[
    "dim",
    "size",
    "sizes",
    "lengths",
    "k",
    "t",
    "phi",
    "S",
    "f",
    "w_exact",
    "newton_tol",
    "krylov_tol",
    "krylov_restart",
    "krylov_max_iter",
    "max_newton",
    "dense_threshold",
    "cone_margin",
];

#[derive(Clone, Debug, PartialEq)]
pub enum TensorSpec {
    /// `c g`; `unit_multiple` counts copies of `binom(n,k)^{-1/k}`.
    Uniform { constant: f64, unit_multiple: f64 },
    Scalar(TrigSeries),
    Diag(Vec<TrigSeries>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum RhsSpec {
    Field(TrigSeries),
    Manufactured,
    Analytic,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub sizes: Vec<usize>,
    pub lengths: Vec<f64>,
    pub k: usize,
    pub t: f64,
    pub phi: TrigSeries,
    pub s: TensorSpec,
    pub f: RhsSpec,
    pub w_exact: Option<TrigSeries>,
    pub options: SolverOptions,
    pub cone_margin: f64,
}

/// Overrides from the command line.
#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub tol: Option<f64>,
    pub max_newton: Option<usize>,
    pub det_ricci: bool,
}

/// A built problem plus the exact solution when one is known.
pub struct Built {
    pub problem: ProblemSpec,
    pub w_exact: Option<ScalarField>,
}

fn split_top_level(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(s[start..].trim());
    out
}

fn call_args<'a>(value: &'a str, name: &str) -> Option<&'a str> {
    value
        .strip_prefix(name)
        .map(str::trim_start)
        .and_then(|r| r.strip_prefix('('))
        .and_then(|r| r.trim_end().strip_suffix(')'))
}

fn series(key: &str, value: &str) -> Result<TrigSeries> {
    value.parse().with_context(|| format!("key '{key}'"))
}

fn parse_uniform(arg: &str) -> Result<TensorSpec> {
    let arg = arg.trim();
    if let Some(rest) = arg.strip_suffix("unit") {
        let coef = match rest.trim().trim_end_matches('*').trim() {
            "" | "+" => 1.0,
            "-" => -1.0,
            c => c.parse::<f64>().map_err(|_| anyhow!("bad multiple of unit in uniform({arg})"))?,
        };
        return Ok(TensorSpec::Uniform {
            constant: 0.0,
            unit_multiple: coef,
        });
    }
    let c: f64 = arg.parse().map_err(|_| anyhow!("uniform() needs a number or a multiple of 'unit', got '{arg}'"))?;
    Ok(TensorSpec::Uniform {
        constant: c,
        unit_multiple: 0.0,
    })
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected 'key = value'", i + 1))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                bail!("line {}: unknown key '{key}'", i + 1);
            }
            if map.insert(key.to_string(), value.trim().to_string()).is_some() {
                bail!("line {}: duplicate key '{key}'", i + 1);
            }
        }
        let get = |k: &str| map.get(k).map(String::as_str);
        let num = |k: &str| -> Result<Option<f64>> {
            get(k).map(|v| v.parse::<f64>().with_context(|| format!("key '{k}'"))).transpose()
        };
        let int = |k: &str| -> Result<Option<usize>> {
            get(k).map(|v| v.parse::<usize>().with_context(|| format!("key '{k}'"))).transpose()
        };

        let sizes: Vec<usize> = match (get("sizes"), int("size")?, int("dim")?) {
            (Some(list), None, dim) => {
                let s = list
                    .split(',')
                    .map(|x| x.trim().parse::<usize>())
                    .collect::<Result<Vec<_>, _>>()
                    .context("key 'sizes'")?;
                if let Some(d) = dim {
                    if d != s.len() {
                        bail!("dim = {d} but {} sizes given", s.len());
                    }
                }
                s
            }
            (None, Some(size), Some(dim)) => vec![size; dim],
            (None, Some(_), None) => bail!("'size' needs 'dim'"),
            (Some(_), Some(_), _) => bail!("give either 'size' or 'sizes', not both"),
            (None, None, _) => bail!("missing grid: give 'dim' and 'size', or 'sizes'"),
        };
        let lengths = match get("lengths") {
            Some(list) => list
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .context("key 'lengths'")?,
            None => vec![2.0 * PI; sizes.len()],
        };
        let k = int("k")?.ok_or_else(|| anyhow!("missing key 'k'"))?;
        let t = num("t")?.unwrap_or(0.0);
        let phi = match get("phi") {
            Some(v) => series("phi", v)?,
            None => TrigSeries::constant(0.0),
        };
        let s_text = get("S").ok_or_else(|| anyhow!("missing key 'S'"))?;
        let s = if let Some(arg) = call_args(s_text, "uniform") {
            parse_uniform(arg)?
        } else if let Some(arg) = call_args(s_text, "diag") {
            TensorSpec::Diag(split_top_level(arg).into_iter().map(|e| series("S", e)).collect::<Result<_>>()?)
        } else {
            TensorSpec::Scalar(series("S", s_text)?)
        };
        let f = match get("f").ok_or_else(|| anyhow!("missing key 'f'"))? {
            "manufactured" => RhsSpec::Manufactured,
            "analytic" => RhsSpec::Analytic,
            v => RhsSpec::Field(series("f", v)?),
        };
        let w_exact = get("w_exact").map(|v| series("w_exact", v)).transpose()?;
        if matches!(f, RhsSpec::Manufactured | RhsSpec::Analytic) && w_exact.is_none() {
            bail!("f = manufactured/analytic requires 'w_exact'");
        }
        let d = SolverOptions::default();
        let options = SolverOptions {
            newton_tol: num("newton_tol")?.unwrap_or(d.newton_tol),
            krylov_tol: num("krylov_tol")?.unwrap_or(d.krylov_tol),
            krylov_restart: int("krylov_restart")?.unwrap_or(d.krylov_restart),
            krylov_max_iter: int("krylov_max_iter")?.unwrap_or(d.krylov_max_iter),
            max_newton: int("max_newton")?.unwrap_or(d.max_newton),
            dense_threshold: int("dense_threshold")?.unwrap_or(d.dense_threshold),
            ..d
        };
        let cone_margin = num("cone_margin")?.unwrap_or(0.0);
        Ok(Self {
            sizes,
            lengths,
            k,
            t,
            phi,
            s,
            f,
            w_exact,
            options,
            cone_margin,
        })
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(tol) = o.tol {
            self.options.newton_tol = tol;
        }
        if let Some(m) = o.max_newton {
            self.options.max_newton = m;
        }
        if o.det_ricci {
            self.k = self.sizes.len();
            self.t = 0.0;
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        Ok(Grid::new(&self.sizes, &self.lengths)?)
    }

    /// Same configuration on a cubic grid with `size` nodes per axis.
    pub fn with_size(&self, size: usize) -> Self {
        Self {
            sizes: vec![size; self.sizes.len()],
            ..self.clone()
        }
    }

    fn check_axes(&self, n: usize) -> Result<()> {
        let mut used = self.phi.min_dim();
        used = used.max(self.w_exact.as_ref().map_or(0, TrigSeries::min_dim));
        if let RhsSpec::Field(f) = &self.f {
            used = used.max(f.min_dim());
        }
        match &self.s {
            TensorSpec::Scalar(e) => used = used.max(e.min_dim()),
            TensorSpec::Diag(es) => {
                if es.len() != n {
                    bail!("diag() needs {n} entries, got {}", es.len());
                }
                used = used.max(es.iter().map(TrigSeries::min_dim).max().unwrap_or(0));
            }
            TensorSpec::Uniform { .. } => {}
        }
        if used > n {
            bail!("expression uses axis {used} on a {n}-dimensional grid");
        }
        Ok(())
    }

    fn tensor(&self, grid: Grid, phi: &ScalarField) -> TensorField {
        let n = grid.dim();
        let e2 = |node: usize| (2.0 * phi.values()[node]).exp();
        match &self.s {
            TensorSpec::Uniform {
                constant,
                unit_multiple,
            } => {
                let c = constant + unit_multiple * binomial(n, self.k).powf(-1.0 / self.k as f64);
                TensorField::from_node_fn(grid, |node| SymMatrix::scalar(n, c * e2(node)))
            }
            TensorSpec::Scalar(e) => TensorField::from_node_fn(grid, |node| {
                let x = grid.position(node);
                SymMatrix::scalar(n, e.value(&x[..n]) * e2(node))
            }),
            TensorSpec::Diag(es) => TensorField::from_node_fn(grid, |node| {
                let x = grid.position(node);
                let d: Vec<f64> = es.iter().map(|e| e.value(&x[..n])).collect();
                SymMatrix::from_diag(&d).scale(e2(node))
            }),
        }
    }

    /// Builds and validates the problem.
    pub fn build(&self) -> Result<Built> {
        let grid = self.grid()?;
        let n = grid.dim();
        self.check_axes(n)?;
        if self.k < 1 || self.k > n {
            bail!("order k = {} must satisfy 1 <= k <= n = {n}", self.k);
        }
        let phi = self.phi.sample(grid);
        let s = self.tensor(grid, &phi);
        let exact = self.w_exact.as_ref().map(|w| w.sample(grid));
        let problem = match &self.f {
            RhsSpec::Field(f) => {
                let bg = Background::new(phi, s, self.t, self.cone_margin)?;
                ProblemSpec::new(bg, self.k, f.sample(grid), Case::Negative, self.options.clone())?
            }
            RhsSpec::Manufactured => {
                let bg = Background::new(phi, s, self.t, self.cone_margin)?;
                make_manufactured(bg, self.k, exact.clone().unwrap(), self.options.clone())?.problem
            }
            RhsSpec::Analytic => {
                let m = make_manufactured_analytic(
                    grid,
                    self.k,
                    self.t,
                    &self.phi,
                    s,
                    self.w_exact.as_ref().unwrap(),
                    self.options.clone(),
                )?;
                let bg = Background::new(m.problem.bg().phi().clone(), m.problem.bg().s().clone(), self.t, self.cone_margin)?;
                ProblemSpec::new(bg, self.k, m.f_derived, Case::Negative, self.options.clone())?
            }
        };
        Ok(Built {
            problem,
            w_exact: exact,
        })
    }
}
