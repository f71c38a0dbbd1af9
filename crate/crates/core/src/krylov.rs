//! Restarted GMRES with right diagonal preconditioning, and a dense LU
//! fallback for small systems.

use nalgebra::{DMatrix, DVector};

use crate::error::KrylovError;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrylovStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `A x = b` from `x = 0`, with `A` given by `apply` and the
/// preconditioner `M^{-1} = diag(inv_diag)` applied on the right.
///
/// Stops when `|b - A x| <= tol |b|`.
pub fn gmres(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    inv_diag: &[f64],
    b: &[f64],
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> Result<(Vec<f64>, KrylovStats), KrylovError> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok((
            x,
            KrylovStats {
                iterations: 0,
                relative_residual: 0.0,
            },
        ));
    }
    let m = restart.max(1);
    let mut total = 0;
    let mut rel;
    let mut r = b.to_vec();
    loop {
        let beta = norm(&r);
        rel = beta / bnorm;
        if rel <= tol {
            return Ok((
                x,
                KrylovStats {
                    iterations: total,
                    relative_residual: rel,
                },
            ));
        }
        if total >= max_iter {
            break;
        }
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        // Hessenberg columns, already rotated.
        let mut hess: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut cs: Vec<f64> = Vec::with_capacity(m);
        let mut sn: Vec<f64> = Vec::with_capacity(m);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut used = 0;
        for j in 0..m {
            let z: Vec<f64> = basis[j].iter().zip(inv_diag).map(|(v, d)| v * d).collect();
            let mut w = apply(&z);
            let mut h = vec![0.0; j + 2];
            for (i, q) in basis.iter().enumerate() {
                let hij = dot(&w, q);
                h[i] = hij;
                w.iter_mut().zip(q).for_each(|(wv, qv)| *wv -= hij * qv);
            }
            let hnext = norm(&w);
            h[j + 1] = hnext;
            for i in 0..j {
                let t = cs[i] * h[i] + sn[i] * h[i + 1];
                h[i + 1] = -sn[i] * h[i] + cs[i] * h[i + 1];
                h[i] = t;
            }
            let denom = h[j].hypot(h[j + 1]);
            let (c, s) = if denom == 0.0 { (1.0, 0.0) } else { (h[j] / denom, h[j + 1] / denom) };
            h[j] = denom;
            h[j + 1] = 0.0;
            g[j + 1] = -s * g[j];
            g[j] *= c;
            cs.push(c);
            sn.push(s);
            hess.push(h);
            used = j + 1;
            total += 1;
            rel = g[j + 1].abs() / bnorm;
            if rel <= tol || total >= max_iter || hnext == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / hnext).collect());
        }
        // Back substitution for the least-squares coefficients.
        let mut y = vec![0.0; used];
        for i in (0..used).rev() {
            let mut s = g[i];
            for l in (i + 1)..used {
                s -= hess[l][i] * y[l];
            }
            if hess[i][i] == 0.0 {
                return Err(KrylovError::Singular);
            }
            y[i] = s / hess[i][i];
        }
        let mut dx = vec![0.0; n];
        for (yi, q) in y.iter().zip(&basis) {
            dx.iter_mut().zip(q).for_each(|(d, qv)| *d += yi * qv);
        }
        x.iter_mut()
            .zip(dx.iter().zip(inv_diag))
            .for_each(|(xv, (d, p))| *xv += d * p);
        let ax = apply(&x);
        r = b.iter().zip(&ax).map(|(bv, av)| bv - av).collect();
    }
    Err(KrylovError::NotConverged {
        iterations: total,
        relative_residual: rel,
    })
}

/// Dense LU solve.
pub fn dense_solve(a: DMatrix<f64>, b: &[f64]) -> Result<Vec<f64>, KrylovError> {
    let lu = a.lu();
    lu.solve(&DVector::from_column_slice(b))
        .map(|x| x.iter().copied().collect())
        .ok_or(KrylovError::Singular)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize) -> impl Fn(&[f64]) -> Vec<f64> {
        move |v: &[f64]| {
            (0..n)
                .map(|i| {
                    let l = if i > 0 { v[i - 1] } else { 0.0 };
                    let r = if i + 1 < n { v[i + 1] } else { 0.0 };
                    // nonsymmetric: upwind-ish off-diagonals
                    -4.0 * v[i] + 1.5 * l + 0.5 * r
                })
                .collect()
        }
    }

    #[test]
    fn solves_nonsymmetric_system() {
        let n = 200;
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.1).sin()).collect();
        let inv: Vec<f64> = vec![-0.25; n];
        let (x, stats) = gmres(tridiag(n), &inv, &b, 1e-10, 20, 1000).unwrap();
        let ax = tridiag(n)(&x);
        let res: f64 = ax.iter().zip(&b).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(res <= 1e-10 * norm(&b));
        assert!(stats.iterations > 0);
    }

    #[test]
    fn zero_rhs_is_trivial() {
        let (x, stats) = gmres(tridiag(5), &[1.0; 5], &[0.0; 5], 1e-3, 5, 10).unwrap();
        assert_eq!(x, vec![0.0; 5]);
        assert_eq!(stats.iterations, 0);
    }

    #[test]
    fn reports_non_convergence() {
        let n = 400;
        let b = vec![1.0; n];
        let err = gmres(tridiag(n), &vec![1.0; n], &b, 1e-14, 2, 3).unwrap_err();
        assert!(matches!(err, KrylovError::NotConverged { iterations: 3, .. }));
    }

    #[test]
    fn dense_agrees() {
        let n = 30;
        let op = tridiag(n);
        let a = DMatrix::from_fn(n, n, |i, j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            op(&e)[i]
        });
        let b: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let xd = dense_solve(a, &b).unwrap();
        let (xg, _) = gmres(op, &vec![-0.25; n], &b, 1e-13, 30, 100).unwrap();
        for (p, q) in xd.iter().zip(&xg) {
            assert!((p - q).abs() < 1e-10);
        }
    }
}
