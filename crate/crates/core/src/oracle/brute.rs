//! Literal, slow evaluations used to check the fast kernels.

use crate::error::OracleError;
use crate::symfun::SymMatrix;

/// Largest dimension accepted by [`newton_delta`].
pub const DELTA_LIMIT: usize = 5;

/// `sigma_k` as the sum over `k`-subsets of eigenvalue products.
pub fn sigma_eig(a: &SymMatrix, k: usize) -> Result<f64, OracleError> {
    let ev = a.eigenvalues();
    subset_sum(&ev, k)
}

/// `sum over |I| = k of prod_{i in I} x_i`.
pub fn subset_sum(x: &[f64], k: usize) -> Result<f64, OracleError> {
    let n = x.len();
    if k > n {
        return Err(OracleError::OrderOutOfRange { order: k, dim: n });
    }
    let mut total = 0.0;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize == k {
            total += (0..n)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| x[i])
                .product::<f64>();
        }
    }
    Ok(total)
}

/// All permutations of `0..m` with their signs.
fn permutations(m: usize) -> Vec<(Vec<usize>, f64)> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; m], &mut out);
    out.into_iter()
        .map(|p| {
            let inversions = (0..m)
                .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
                .filter(|&(i, j)| p[i] > p[j])
                .count();
            let sign = if inversions % 2 == 0 { 1.0 } else { -1.0 };
            (p, sign)
        })
        .collect()
}

/// Ordered tuples of `len` distinct indices from `0..n` avoiding `skip`.
fn distinct_tuples(n: usize, len: usize, skip: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|t: Vec<usize>| {
                (0..n)
                    .filter(|c| *c != skip && !t.contains(c))
                    .map(|c| {
                        let mut u = t.clone();
                        u.push(c);
                        u
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
    }
    out
}

/// Newton transformation from the generalized Kronecker delta:
///
/// `T_q(A)^i_j = (1/q!) delta^{i_1..i_q i}_{j_1..j_q j} A^{j_1}_{i_1} ... A^{j_q}_{i_q}`.
pub fn newton_delta(a: &SymMatrix, q: usize) -> Result<SymMatrix, OracleError> {
    let n = a.dim();
    if n > DELTA_LIMIT {
        return Err(OracleError::TooLarge {
            n,
            limit: DELTA_LIMIT,
        });
    }
    if q > n {
        return Err(OracleError::OrderOutOfRange { order: q, dim: n });
    }
    let perms = permutations(q + 1);
    let fact: f64 = (1..=q).map(|x| x as f64).product();
    let mut out = [[0.0; 6]; 6];
    for i in 0..n {
        // upper indices (i_1..i_q, i) must be distinct for a nonzero delta
        for upper in distinct_tuples(n, q, i) {
            let mut up = upper.clone();
            up.push(i);
            for (p, sign) in &perms {
                let lower: Vec<usize> = p.iter().map(|&m| up[m]).collect();
                let prod: f64 = (0..q).map(|m| a.get(lower[m], up[m])).product();
                out[i][lower[q]] += sign * prod;
            }
        }
    }
    Ok(SymMatrix::from_fn(n, |i, j| 0.5 * (out[i][j] + out[j][i]) / fact))
}
