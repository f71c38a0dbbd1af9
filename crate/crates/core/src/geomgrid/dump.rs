//! Field dump format.
//!
//! ```text
//! # dim=<n> sizes=<s1,...> lengths=<l1,...>
//! i_1,...,i_n,v_1[,v_2,...]
//! ```
//!
//! One row per node in layout order (axis 0 fastest). Scalars carry one
//! value column, tensors the `n(n+1)/2` entries of the row-major upper
//! triangle. Floats are written with the shortest round-trip representation.

use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use thiserror::Error;

use super::field::{ScalarField, TensorField};
use super::grid::Grid;
use crate::error::GridError;
use crate::symfun::SymMatrix;

#[derive(Debug, Error)]
pub enum DumpError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Grid(#[from] GridError),
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

/// Header line (without newline); stable for identical grids.
pub fn header(grid: &Grid) -> String {
    format!(
        "# dim={} sizes={} lengths={}",
        grid.dim(),
        join(grid.sizes()),
        join(grid.lengths())
    )
}

fn write_rows(
    out: &mut impl Write,
    grid: &Grid,
    mut row: impl FnMut(usize, &mut String),
) -> io::Result<()> {
    writeln!(out, "{}", header(grid))?;
    let mut line = String::new();
    for node in 0..grid.node_count() {
        line.clear();
        for i in grid.index_of(node) {
            write!(line, "{i},").unwrap();
        }
        row(node, &mut line);
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn write_scalar(out: &mut impl Write, field: &ScalarField) -> io::Result<()> {
    let vals = field.values();
    write_rows(out, field.grid(), |node, line| {
        write!(line, "{}", vals[node]).unwrap();
    })
}

pub fn write_tensor(out: &mut impl Write, field: &TensorField) -> io::Result<()> {
    write_rows(out, field.grid(), |node, line| {
        line.push_str(&join(&field.at(node).packed_upper()));
    })
}

/// Parses a header line into a grid.
pub fn parse_header(line: &str) -> Result<Grid, DumpError> {
    let bad = |msg: &str| DumpError::Parse {
        line: 1,
        msg: msg.to_string(),
    };
    let body = line
        .trim()
        .strip_prefix('#')
        .ok_or_else(|| bad("missing '#' header"))?;
    let (mut dim, mut sizes, mut lengths) = (None, None, None);
    for tok in body.split_whitespace() {
        let (k, v) = tok.split_once('=').ok_or_else(|| bad("expected key=value"))?;
        match k {
            "dim" => dim = Some(v.parse::<usize>().map_err(|_| bad("bad dim"))?),
            "sizes" => {
                sizes = Some(
                    v.split(',')
                        .map(str::parse::<usize>)
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|_| bad("bad sizes"))?,
                )
            }
            "lengths" => {
                lengths = Some(
                    v.split(',')
                        .map(str::parse::<f64>)
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|_| bad("bad lengths"))?,
                )
            }
            _ => return Err(bad(&format!("unknown header key '{k}'"))),
        }
    }
    let (dim, sizes, lengths) = match (dim, sizes, lengths) {
        (Some(d), Some(s), Some(l)) => (d, s, l),
        _ => return Err(bad("header needs dim, sizes and lengths")),
    };
    if sizes.len() != dim {
        return Err(bad("dim does not match sizes"));
    }
    Ok(Grid::new(&sizes, &lengths)?)
}

fn read_rows(
    input: impl BufRead,
    width: impl Fn(&Grid) -> usize,
) -> Result<(Grid, Vec<Vec<f64>>), DumpError> {
    let mut lines = input.lines();
    let first = lines.next().ok_or(DumpError::Parse {
        line: 1,
        msg: "empty file".into(),
    })??;
    let grid = parse_header(&first)?;
    let ncols = width(&grid);
    let mut rows = vec![Vec::new(); grid.node_count()];
    let mut seen = vec![false; grid.node_count()];
    let mut count = 0;
    for (i, line) in lines.enumerate() {
        let line = line?;
        let lineno = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: String| DumpError::Parse { line: lineno, msg };
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != grid.dim() + ncols {
            return Err(err(format!(
                "expected {} columns, got {}",
                grid.dim() + ncols,
                cols.len()
            )));
        }
        let index = cols[..grid.dim()]
            .iter()
            .map(|c| c.parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| err(e.to_string()))?;
        if index.iter().zip(grid.sizes()).any(|(i, s)| i >= s) {
            return Err(err("index outside grid".into()));
        }
        let node = grid.node_at(&index);
        if seen[node] {
            return Err(err("duplicate node".into()));
        }
        seen[node] = true;
        rows[node] = cols[grid.dim()..]
            .iter()
            .map(|c| c.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| err(e.to_string()))?;
        count += 1;
    }
    if count != grid.node_count() {
        return Err(GridError::ValueCount {
            expected: grid.node_count(),
            got: count,
        }
        .into());
    }
    Ok((grid, rows))
}

pub fn read_scalar(input: impl BufRead) -> Result<ScalarField, DumpError> {
    let (grid, rows) = read_rows(input, |_| 1)?;
    Ok(ScalarField::new(grid, rows.into_iter().map(|r| r[0]).collect())?)
}

pub fn read_tensor(input: impl BufRead) -> Result<TensorField, DumpError> {
    let (grid, rows) = read_rows(input, |g| g.dim() * (g.dim() + 1) / 2)?;
    let n = grid.dim();
    let values = rows
        .iter()
        .map(|r| SymMatrix::from_packed_upper(n, r).expect("column count checked"))
        .collect();
    Ok(TensorField::new(grid, values)?)
}
