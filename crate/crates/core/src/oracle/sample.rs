//! Seeded random matrices.

use nalgebra::DMatrix;
use rand::Rng;

use crate::symfun::{Expansion, SymMatrix};

/// Symmetric matrix with entries uniform in `[-scale, scale]`.
pub fn random_symmetric(rng: &mut impl Rng, n: usize, scale: f64) -> SymMatrix {
    let mut m = SymMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            m.set(i, j, rng.random_range(-scale..=scale));
        }
    }
    m
}

/// Orthogonal matrix as a list of columns (QR of a random matrix).
pub fn random_orthogonal(rng: &mut impl Rng, n: usize) -> Vec<Vec<f64>> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let q = a.qr().q();
    (0..n).map(|i| (0..n).map(|j| q[(i, j)]).collect()).collect()
}

/// `Q diag(values) Q^T` for a random orthogonal `Q`.
pub fn random_rotated(rng: &mut impl Rng, values: &[f64]) -> SymMatrix {
    let q = random_orthogonal(rng, values.len());
    SymMatrix::from_spectrum(values, &q)
}

/// Positive semidefinite matrix of random rank.
pub fn random_psd(rng: &mut impl Rng, n: usize) -> SymMatrix {
    let rank = rng.random_range(0..=n);
    let values: Vec<f64> = (0..n)
        .map(|i| if i < rank { rng.random_range(0.0..2.0) } else { 0.0 })
        .collect();
    random_rotated(rng, &values)
}

/// Matrix in the positive cone of order `k` with margin `margin`,
/// by rejection on the spectrum. Eigenvalues are drawn from `[-1, 2]`, so
/// samples reach close to the cone boundary.
pub fn random_positive_cone(rng: &mut impl Rng, n: usize, k: usize, margin: f64) -> SymMatrix {
    loop {
        let values: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..2.0)).collect();
        let m = random_rotated(rng, &values);
        if Expansion::new(&m, k).classify(margin).is_positive() {
            return m;
        }
    }
}

/// Matrix in the negative cone of order `k`.
pub fn random_negative_cone(rng: &mut impl Rng, n: usize, k: usize, margin: f64) -> SymMatrix {
    -random_positive_cone(rng, n, k, margin)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn orthogonal_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = random_orthogonal(&mut rng, 5);
        for i in 0..5 {
            for j in 0..5 {
                let d: f64 = (0..5).map(|r| q[i][r] * q[j][r]).sum();
                assert!((d - if i == j { 1.0 } else { 0.0 }).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn cone_samples_are_in_cone() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for k in 1..=4 {
            let m = random_negative_cone(&mut rng, 4, k, 1e-8);
            assert!(Expansion::new(&m, k).classify(0.0).is_negative());
        }
        let p = random_psd(&mut rng, 4);
        assert!(p.min_eigenvalue() > -1e-13);
    }
}
