//! Pointwise algebra of elementary symmetric functions.
//!
//! `sigma_k` of a symmetric matrix is the k-th elementary symmetric function
//! of its eigenvalues; the `q`-th Newton transformation is the matrix
//! polynomial `T_q(A) = sigma_q I - sigma_{q-1} A + ... + (-1)^q A^q`, which is
//! the gradient of `sigma_{q+1}` with respect to `A`.
//!
//! Both are produced together by the trace recursion
//!
//! ```text
//! T_0 = I,   sigma_q = tr(A T_{q-1}) / q,   T_q = sigma_q I - A T_{q-1}
//! ```
//!
//! so the hot path never needs an eigensolver.

mod matrix;

pub use matrix::{SymMatrix, MAX_DIM};

use crate::error::SymFunError;

/// Gårding cone membership of a symmetric matrix for a fixed order `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConeClass {
    /// `sigma_j(A) > 0` for every `1 <= j <= k`.
    PositiveCone(usize),
    /// `-A` lies in the positive cone of order `k`.
    NegativeCone(usize),
    Neither,
}

impl ConeClass {
    pub fn is_positive(self) -> bool {
        matches!(self, ConeClass::PositiveCone(_))
    }

    pub fn is_negative(self) -> bool {
        matches!(self, ConeClass::NegativeCone(_))
    }
}

/// All `sigma_0..=sigma_k` of a matrix together with `T_{k-1}`.
#[derive(Clone, Copy, Debug)]
pub struct Expansion {
    order: usize,
    sigmas: [f64; MAX_DIM + 1],
    newton: SymMatrix,
}

impl Expansion {
    /// Runs the trace recursion up to order `k` (`1 <= k <= n`).
    pub fn new(a: &SymMatrix, k: usize) -> Self {
        let n = a.dim();
        debug_assert!((1..=n).contains(&k));
        let mut sigmas = [0.0; MAX_DIM + 1];
        sigmas[0] = 1.0;
        let mut t = SymMatrix::identity(n);
        for q in 1..=k {
            let at = a.mul_commuting(&t);
            let s = at.trace() / q as f64;
            sigmas[q] = s;
            if q < k {
                t = (-at).shift(s);
            }
        }
        Self {
            order: k,
            sigmas,
            newton: t,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// `sigma_j` for `j <= order`.
    pub fn sigma(&self, j: usize) -> f64 {
        assert!(j <= self.order);
        self.sigmas[j]
    }

    /// `T_{order-1}`, the derivative of `sigma_order`.
    pub fn newton(&self) -> &SymMatrix {
        &self.newton
    }

    /// `min_{1<=j<=order} sigma_j`.
    pub fn min_sigma(&self) -> f64 {
        self.sigmas[1..=self.order]
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// `min_{1<=j<=order} (-1)^j sigma_j`, i.e. the same quantity for `-A`.
    pub fn min_sigma_negated(&self) -> f64 {
        (1..=self.order)
            .map(|j| if j % 2 == 0 { self.sigmas[j] } else { -self.sigmas[j] })
            .fold(f64::INFINITY, f64::min)
    }

    /// Cone class with the decision threshold `sigma_j > margin`.
    pub fn classify(&self, margin: f64) -> ConeClass {
        if self.min_sigma() > margin {
            ConeClass::PositiveCone(self.order)
        } else if self.min_sigma_negated() > margin {
            ConeClass::NegativeCone(self.order)
        } else {
            ConeClass::Neither
        }
    }

    fn signed_sigmas(&self) -> Vec<f64> {
        self.sigmas[1..=self.order].to_vec()
    }
}

fn check_order(a: &SymMatrix, k: usize, lo: usize) -> Result<(), SymFunError> {
    if k < lo || k > a.dim() {
        return Err(SymFunError::OrderOutOfRange {
            order: k,
            dim: a.dim(),
        });
    }
    Ok(())
}

/// k-th elementary symmetric function of the eigenvalues of `a`
/// (`sigma_0 = 1`).
pub fn sigma(a: &SymMatrix, k: usize) -> Result<f64, SymFunError> {
    check_order(a, k, 0)?;
    if k == 0 {
        return Ok(1.0);
    }
    Ok(Expansion::new(a, k).sigma(k))
}

/// All of `sigma_0..=sigma_n`.
pub fn sigmas(a: &SymMatrix) -> Vec<f64> {
    let e = Expansion::new(a, a.dim());
    (0..=a.dim()).map(|j| e.sigma(j)).collect()
}

/// q-th Newton transformation `T_q(a)`.
pub fn newton_transform(a: &SymMatrix, q: usize) -> Result<SymMatrix, SymFunError> {
    check_order(a, q, 0)?;
    if q == a.dim() {
        // Cayley-Hamilton: T_n(A) = 0, but evaluate it rather than assume.
        let e = Expansion::new(a, q);
        let at = a.mul_commuting(e.newton());
        return Ok((-at).shift(e.sigma(q)));
    }
    Ok(*Expansion::new(a, q + 1).newton())
}

/// Strict cone classification (zero margin).
pub fn classify_cone(a: &SymMatrix, k: usize) -> Result<ConeClass, SymFunError> {
    classify_cone_with_margin(a, k, 0.0)
}

/// Cone classification with the test `sigma_j > margin`, `margin >= 0`.
pub fn classify_cone_with_margin(
    a: &SymMatrix,
    k: usize,
    margin: f64,
) -> Result<ConeClass, SymFunError> {
    check_order(a, k, 1)?;
    Ok(Expansion::new(a, k).classify(margin))
}

/// Signed k-th root: `sigma_k^{1/k}` on the positive cone and
/// `-|sigma_k|^{1/k}` on the negative cone.
pub fn signed_root(a: &SymMatrix, k: usize) -> Result<f64, SymFunError> {
    check_order(a, k, 1)?;
    signed_root_of(&Expansion::new(a, k))
}

pub(crate) fn signed_root_of(e: &Expansion) -> Result<f64, SymFunError> {
    let k = e.order();
    let s = e.sigma(k);
    match e.classify(0.0) {
        ConeClass::PositiveCone(_) => Ok(s.powf(1.0 / k as f64)),
        ConeClass::NegativeCone(_) => Ok(-s.abs().powf(1.0 / k as f64)),
        ConeClass::Neither => Err(SymFunError::ConeViolation {
            order: k,
            sigmas: e.signed_sigmas(),
        }),
    }
}

/// Binomial coefficient as a float.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(sigma(&SymMatrix::identity(3), 2).unwrap(), 3.0);
        assert_eq!(sigma(&SymMatrix::from_diag(&[1.0, 2.0, 3.0]), 3).unwrap(), 6.0);
        assert_eq!(sigma(&SymMatrix::from_diag(&[1.0, 2.0, 3.0]), 0).unwrap(), 1.0);
        assert!(matches!(
            sigma(&SymMatrix::identity(3), 4),
            Err(SymFunError::OrderOutOfRange { order: 4, dim: 3 })
        ));
    }

    #[test]
    fn newton_examples() {
        let a = SymMatrix::from_diag(&[1.0, 2.0, 3.0]);
        assert_eq!(newton_transform(&a, 0).unwrap(), SymMatrix::identity(3));
        assert_eq!(
            newton_transform(&a, 1).unwrap(),
            SymMatrix::from_diag(&[5.0, 4.0, 3.0])
        );
        // T_n vanishes by Cayley-Hamilton.
        assert!(newton_transform(&a, 3).unwrap().max_abs() < 1e-12);
        assert!(newton_transform(&a, 4).is_err());
    }

    #[test]
    fn newton_of_identity_is_binomial() {
        for n in 1..=MAX_DIM {
            for q in 0..=n {
                let t = newton_transform(&SymMatrix::identity(n), q).unwrap();
                let c = binomial(n - 1, q);
                assert!((t - SymMatrix::scalar(n, c)).max_abs() < 1e-12, "n={n} q={q}");
            }
        }
    }

    #[test]
    fn cone_examples() {
        let neg = SymMatrix::scalar(3, -1.0);
        assert_eq!(classify_cone(&neg, 2).unwrap(), ConeClass::NegativeCone(2));
        let a = SymMatrix::from_diag(&[1.0, 1.0, -3.0]);
        assert_eq!(classify_cone(&a, 2).unwrap(), ConeClass::Neither);
        let b = SymMatrix::from_diag(&[3.0, 1.0, 1.0]);
        assert_eq!(classify_cone(&b, 3).unwrap(), ConeClass::PositiveCone(3));
        assert!(classify_cone(&b, 0).is_err());
    }

    #[test]
    fn cone_margin_is_strict() {
        let a = SymMatrix::identity(3);
        // sigma_1 = 3, sigma_2 = 3
        assert!(classify_cone_with_margin(&a, 2, 2.9).unwrap().is_positive());
        assert_eq!(
            classify_cone_with_margin(&a, 2, 3.0).unwrap(),
            ConeClass::Neither
        );
    }

    #[test]
    fn signed_root_examples() {
        let r = signed_root(&SymMatrix::identity(3), 2).unwrap();
        assert!(approx(r, 3f64.sqrt(), 1e-15));
        let r = signed_root(&SymMatrix::scalar(3, -1.0), 2).unwrap();
        assert!(approx(r, -(3f64.sqrt()), 1e-15));
        match signed_root(&SymMatrix::from_diag(&[1.0, -1.0, 0.0]), 2) {
            Err(SymFunError::ConeViolation { order, sigmas }) => {
                assert_eq!(order, 2);
                assert_eq!(sigmas, vec![0.0, -1.0]);
            }
            other => panic!("expected cone violation, got {other:?}"),
        }
    }

    #[test]
    fn inclusion_chain_spot_check() {
        let a = SymMatrix::from_diag(&[2.0, 1.5, -0.4, 0.3]);
        for k in 1..=4 {
            if classify_cone(&a, k).unwrap().is_positive() {
                for j in 1..k {
                    assert!(classify_cone(&a, j).unwrap().is_positive());
                }
            }
        }
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(4, 2), 6.0);
        assert_eq!(binomial(5, 0), 1.0);
        assert_eq!(binomial(3, 4), 0.0);
    }
}
