use std::fmt;
use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub, SubAssign};

/// Largest supported matrix dimension.
pub const MAX_DIM: usize = 6;

/// Dense symmetric `n x n` matrix with `n <= MAX_DIM`.
///
/// Entries are kept in a fixed-size square buffer so the type is `Copy` and
/// never allocates; every constructor writes both triangles, so the value is
/// symmetric by construction.
#[derive(Clone, Copy, PartialEq)]
pub struct SymMatrix {
    n: usize,
    a: [[f64; MAX_DIM]; MAX_DIM],
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&n), "matrix dimension {n} not in 1..={MAX_DIM}");
        Self {
            n,
            a: [[0.0; MAX_DIM]; MAX_DIM],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::scalar(n, 1.0)
    }

    /// `c * I`.
    pub fn scalar(n: usize, c: f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.a[i][i] = c;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.a[i][i] = d;
        }
        m
    }

    /// Builds the matrix from the upper triangle (`i <= j`) of `f`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                m.a[i][j] = v;
                m.a[j][i] = v;
            }
        }
        m
    }

    /// Builds from full rows, averaging the two triangles.
    pub fn from_rows_symmetrized(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        Self::from_fn(n, |i, j| 0.5 * (rows[i][j] + rows[j][i]))
    }

    /// Row-major upper triangle, `n(n+1)/2` entries.
    pub fn from_packed_upper(n: usize, packed: &[f64]) -> Option<Self> {
        if packed.len() != n * (n + 1) / 2 {
            return None;
        }
        let mut it = packed.iter();
        Some(Self::from_fn(n, |_, _| *it.next().unwrap()))
    }

    pub fn packed_upper(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n * (self.n + 1) / 2);
        for i in 0..self.n {
            for j in i..self.n {
                out.push(self.a[i][j]);
            }
        }
        out
    }

    /// `u u^T`.
    pub fn outer(u: &[f64]) -> Self {
        Self::from_fn(u.len(), |i, j| u[i] * u[j])
    }

    /// `u v^T + v u^T`.
    pub fn sym_outer(u: &[f64], v: &[f64]) -> Self {
        Self::from_fn(u.len(), |i, j| u[i] * v[j] + v[i] * u[j])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i][j]
    }

    /// Sets entry `(i, j)` and its mirror.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i][j] = v;
        self.a[j][i] = v;
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.a[i][i]).sum()
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut m = *self;
        m.map_in_place(|x| x * c);
        m
    }

    /// `self + c I`.
    pub fn shift(&self, c: f64) -> Self {
        let mut m = *self;
        for i in 0..self.n {
            m.a[i][i] += c;
        }
        m
    }

    /// Frobenius inner product `tr(self * other)`.
    pub fn contract(&self, other: &SymMatrix) -> f64 {
        debug_assert_eq!(self.n, other.n);
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                s += self.a[i][j] * other.a[i][j];
            }
        }
        s
    }

    /// `self * v`.
    pub fn mul_vec(&self, v: &[f64]) -> [f64; MAX_DIM] {
        let mut out = [0.0; MAX_DIM];
        for (i, o) in out.iter_mut().enumerate().take(self.n) {
            *o = (0..self.n).map(|j| self.a[i][j] * v[j]).sum();
        }
        out
    }

    /// Product of two matrices that are known to commute (for example a
    /// matrix and a polynomial in it). The result is symmetrized to remove
    /// rounding asymmetry.
    pub(crate) fn mul_commuting(&self, other: &SymMatrix) -> SymMatrix {
        let n = self.n;
        let mut p = [[0.0; MAX_DIM]; MAX_DIM];
        for (i, row) in p.iter_mut().enumerate().take(n) {
            for (j, pij) in row.iter_mut().enumerate().take(n) {
                let mut s = 0.0;
                for l in 0..n {
                    s += self.a[i][l] * other.a[l][j];
                }
                *pij = s;
            }
        }
        Self::from_fn(n, |i, j| 0.5 * (p[i][j] + p[j][i]))
    }

    /// General product as full rows (not symmetric in general).
    pub fn matmul_rows(&self, other: &SymMatrix) -> Vec<Vec<f64>> {
        let n = self.n;
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|l| self.a[i][l] * other.a[l][j]).sum())
                    .collect()
            })
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                m = m.max(self.a[i][j].abs());
            }
        }
        m
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.contract(self).sqrt()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.a[i][..self.n].to_vec()).collect()
    }

    fn map_in_place(&mut self, f: impl Fn(f64) -> f64) {
        for i in 0..self.n {
            for j in 0..self.n {
                self.a[i][j] = f(self.a[i][j]);
            }
        }
    }

    /// Eigenvalues in ascending order (cyclic Jacobi).
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigen().0
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigenvalues().last().unwrap()
    }

    /// Eigen-decomposition by cyclic Jacobi rotations.
    ///
    /// Returns eigenvalues in ascending order and the matching orthonormal
    /// eigenvectors as columns (`vectors[i][m]` is component `i` of vector `m`).
    pub fn eigen(&self) -> (Vec<f64>, Vec<Vec<f64>>) {
        let n = self.n;
        let mut a = self.a;
        let mut v = [[0.0; MAX_DIM]; MAX_DIM];
        for (i, row) in v.iter_mut().enumerate().take(n) {
            row[i] = 1.0;
        }
        let scale = self.frobenius_norm().max(f64::MIN_POSITIVE);
        for _sweep in 0..100 {
            let mut off = 0.0;
            for i in 0..n {
                for j in (i + 1)..n {
                    off += 2.0 * a[i][j] * a[i][j];
                }
            }
            if off.sqrt() <= 1e-14 * scale {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[p][q];
                    if apq == 0.0 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for r in 0..n {
                        let arp = a[r][p];
                        let arq = a[r][q];
                        a[r][p] = c * arp - s * arq;
                        a[r][q] = s * arp + c * arq;
                    }
                    for r in 0..n {
                        let apr = a[p][r];
                        let aqr = a[q][r];
                        a[p][r] = c * apr - s * aqr;
                        a[q][r] = s * apr + c * aqr;
                    }
                    for row in v.iter_mut().take(n) {
                        let vp = row[p];
                        let vq = row[q];
                        row[p] = c * vp - s * vq;
                        row[q] = s * vp + c * vq;
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&x, &y| a[x][x].total_cmp(&a[y][y]));
        let values = order.iter().map(|&m| a[m][m]).collect();
        let vectors = (0..n)
            .map(|i| order.iter().map(|&m| v[i][m]).collect())
            .collect();
        (values, vectors)
    }

    /// `Q diag(lambda) Q^T` for orthogonal `Q` given by columns.
    pub fn from_spectrum(values: &[f64], vectors: &[Vec<f64>]) -> Self {
        let n = values.len();
        Self::from_fn(n, |i, j| {
            (0..n)
                .map(|m| vectors[i][m] * values[m] * vectors[j][m])
                .sum()
        })
    }
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows()).finish()
    }
}

impl Index<(usize, usize)> for SymMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.a[i][j]
    }
}

impl Add for SymMatrix {
    type Output = SymMatrix;
    fn add(mut self, rhs: SymMatrix) -> SymMatrix {
        self += rhs;
        self
    }
}

impl AddAssign for SymMatrix {
    fn add_assign(&mut self, rhs: SymMatrix) {
        debug_assert_eq!(self.n, rhs.n);
        for i in 0..self.n {
            for j in 0..self.n {
                self.a[i][j] += rhs.a[i][j];
            }
        }
    }
}

impl Sub for SymMatrix {
    type Output = SymMatrix;
    fn sub(mut self, rhs: SymMatrix) -> SymMatrix {
        self -= rhs;
        self
    }
}

impl SubAssign for SymMatrix {
    fn sub_assign(&mut self, rhs: SymMatrix) {
        debug_assert_eq!(self.n, rhs.n);
        for i in 0..self.n {
            for j in 0..self.n {
                self.a[i][j] -= rhs.a[i][j];
            }
        }
    }
}

impl Neg for SymMatrix {
    type Output = SymMatrix;
    fn neg(self) -> SymMatrix {
        self.scale(-1.0)
    }
}

impl Mul<f64> for SymMatrix {
    type Output = SymMatrix;
    fn mul(self, c: f64) -> SymMatrix {
        self.scale(c)
    }
}

impl Mul<SymMatrix> for f64 {
    type Output = SymMatrix;
    fn mul(self, m: SymMatrix) -> SymMatrix {
        m.scale(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packed_roundtrip() {
        let m = SymMatrix::from_fn(3, |i, j| (i * 3 + j) as f64);
        let p = m.packed_upper();
        assert_eq!(p, vec![0.0, 1.0, 2.0, 4.0, 5.0, 8.0]);
        assert_eq!(SymMatrix::from_packed_upper(3, &p).unwrap(), m);
        assert!(SymMatrix::from_packed_upper(3, &p[..5]).is_none());
    }

    #[test]
    fn jacobi_reconstructs() {
        let m = SymMatrix::from_fn(4, |i, j| 1.0 / (1.0 + i as f64 + j as f64) + if i == j { 0.3 } else { 0.0 });
        let (vals, vecs) = m.eigen();
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let back = SymMatrix::from_spectrum(&vals, &vecs);
        assert!((back - m).max_abs() < 1e-13);
    }

    #[test]
    fn jacobi_diagonal_is_exact() {
        let m = SymMatrix::from_diag(&[3.0, -1.0, 2.0]);
        assert_eq!(m.eigenvalues(), vec![-1.0, 2.0, 3.0]);
    }
}
