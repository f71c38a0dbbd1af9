//! Trigonometric field expressions.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor ('*' factor)*
//! factor := number | sin(axis, freq) | cos(axis, freq)
//! ```
//!
//! Axes are 1-based. A leading sign is allowed. Values, gradients and
//! Hessians are evaluated in closed form.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::geomgrid::{Grid, ScalarField};
use crate::symfun::SymMatrix;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("bad field expression at column {column}: {msg}")]
pub struct ExprError {
    pub column: usize,
    pub msg: String,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Trig {
    Sin,
    Cos,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Wave {
    trig: Trig,
    axis: usize,
    freq: f64,
}

impl Wave {
    /// Value and first two derivatives along its axis.
    fn eval(&self, x: &[f64]) -> (f64, f64, f64) {
        let a = self.freq * x[self.axis];
        let (s, c) = a.sin_cos();
        let w = self.freq;
        match self.trig {
            Trig::Sin => (s, w * c, -w * w * s),
            Trig::Cos => (c, -w * s, -w * w * c),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Term {
    coef: f64,
    waves: Vec<Wave>,
}

/// A finite sum of products of sines and cosines.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigSeries {
    terms: Vec<Term>,
    source: String,
}

impl TrigSeries {
    pub fn constant(c: f64) -> Self {
        Self {
            terms: vec![Term {
                coef: c,
                waves: Vec::new(),
            }],
            source: c.to_string(),
        }
    }

    /// Largest axis index used, plus one.
    pub fn min_dim(&self) -> usize {
        self.terms
            .iter()
            .flat_map(|t| t.waves.iter().map(|w| w.axis + 1))
            .max()
            .unwrap_or(0)
    }

    /// Whether the expression has no wave factors.
    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|t| t.waves.is_empty())
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coef * t.waves.iter().map(|w| w.eval(x).0).product::<f64>())
            .sum()
    }

    /// Value, gradient and Hessian in `n` dimensions.
    pub fn jet(&self, x: &[f64], n: usize) -> (f64, Vec<f64>, SymMatrix) {
        let mut v = 0.0;
        let mut g = vec![0.0; n];
        let mut h = SymMatrix::zeros(n);
        for t in &self.terms {
            let e: Vec<(f64, f64, f64)> = t.waves.iter().map(|w| w.eval(x)).collect();
            let others = |skip: &[usize]| -> f64 {
                e.iter()
                    .enumerate()
                    .filter(|(i, _)| !skip.contains(i))
                    .map(|(_, x)| x.0)
                    .product()
            };
            v += t.coef * others(&[]);
            for (i, wi) in t.waves.iter().enumerate() {
                g[wi.axis] += t.coef * e[i].1 * others(&[i]);
                let a = wi.axis;
                h.set(a, a, h.get(a, a) + t.coef * e[i].2 * others(&[i]));
                for (j, wj) in t.waves.iter().enumerate() {
                    if j == i {
                        continue;
                    }
                    let b = wj.axis;
                    // off-diagonal pairs counted once, same-axis pairs in
                    // both orders
                    if a <= b {
                        let add = t.coef * e[i].1 * e[j].1 * others(&[i, j]);
                        h.set(a, b, h.get(a, b) + add);
                    }
                }
            }
        }
        (v, g, h)
    }

    /// Samples the expression at grid nodes.
    pub fn sample(&self, grid: Grid) -> ScalarField {
        ScalarField::from_fn(grid, |x| self.value(x))
    }
}

impl fmt::Display for TrigSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError {
            column: self.pos + 1,
            msg: msg.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<(), ExprError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected '{}'", c as char))
        }
    }

    fn number(&mut self) -> Result<f64, ExprError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            let exp_sign = (c == b'-' || c == b'+')
                && self.pos > start
                && matches!(self.src[self.pos - 1], b'e' | b'E');
            if c.is_ascii_digit() || c == b'.' || c == b'e' || c == b'E' || exp_sign {
                self.pos += 1;
            } else {
                break;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => {
                self.pos = start;
                self.err(format!("expected a number, found '{text}'"))
            }
        }
    }

    fn factor(&mut self, term: &mut Term) -> Result<(), ExprError> {
        match self.peek() {
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                term.coef *= self.number()?;
                Ok(())
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphabetic() {
                    self.pos += 1;
                }
                let trig = match &self.src[start..self.pos] {
                    b"sin" => Trig::Sin,
                    b"cos" => Trig::Cos,
                    other => {
                        self.pos = start;
                        return self.err(format!("unknown function '{}'", String::from_utf8_lossy(other)));
                    }
                };
                self.expect(b'(')?;
                let axis_at = self.pos;
                let axis = self.number()?;
                if axis.fract() != 0.0 || axis < 1.0 {
                    self.pos = axis_at;
                    return self.err("axis must be a positive integer");
                }
                self.expect(b',')?;
                let freq = self.number()?;
                self.expect(b')')?;
                term.waves.push(Wave {
                    trig,
                    axis: axis as usize - 1,
                    freq,
                });
                Ok(())
            }
            _ => self.err("expected a number, sin or cos"),
        }
    }

    fn term(&mut self, sign: f64) -> Result<Term, ExprError> {
        let mut term = Term {
            coef: sign,
            waves: Vec::new(),
        };
        self.factor(&mut term)?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            self.factor(&mut term)?;
        }
        Ok(term)
    }

    fn series(&mut self) -> Result<Vec<Term>, ExprError> {
        let mut terms = Vec::new();
        let mut sign = 1.0;
        if let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            sign = if c == b'-' { -1.0 } else { 1.0 };
        }
        terms.push(self.term(sign)?);
        loop {
            match self.peek() {
                None => return Ok(terms),
                Some(c @ (b'+' | b'-')) => {
                    self.pos += 1;
                    terms.push(self.term(if c == b'-' { -1.0 } else { 1.0 })?);
                }
                Some(_) => return self.err("expected '+', '-' or '*'"),
            }
        }
    }
}

impl FromStr for TrigSeries {
    type Err = ExprError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut p = Parser {
            src: s.as_bytes(),
            pos: 0,
        };
        if p.peek().is_none() {
            return p.err("empty expression");
        }
        let terms = p.series()?;
        Ok(Self {
            terms,
            source: s.trim().to_string(),
        })
    }
}
