use proptest::prelude::*;
use sigmak::continuation::HomotopyPoint;
use sigmak::geomgrid::{Background, Grid, ScalarField, TensorField};
use sigmak::oracle::{sigma_eig, random_rotated};
use sigmak::residual::{residual_power, Case, ProblemSpec, SolverOptions};
use sigmak::symfun::{classify_cone, sigma, ConeClass, SymMatrix};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn matrix() -> impl Strategy<Value = SymMatrix> {
    (3usize..=5).prop_flat_map(|n| {
        prop::collection::vec(-2.0f64..2.0, n * (n + 1) / 2)
            .prop_map(move |v| SymMatrix::from_packed_upper(n, &v).unwrap())
    })
}

fn cone_order(c: ConeClass) -> Option<(bool, usize)> {
    match c {
        ConeClass::PositiveCone(k) => Some((true, k)),
        ConeClass::NegativeCone(k) => Some((false, k)),
        ConeClass::Neither => None,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn homogeneity(a in matrix(), c in 0.1f64..3.0) {
        let n = a.dim();
        for k in 1..=n {
            let lhs = sigma(&a.scale(c), k).unwrap();
            let rhs = c.powi(k as i32) * sigma(&a, k).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-11 * (1.0 + rhs.abs()) * c.powi(k as i32).max(1.0) * 10.0);
            prop_assert_eq!(
                cone_order(classify_cone(&a.scale(c), k).unwrap()),
                cone_order(classify_cone(&a, k).unwrap())
            );
        }
    }

    #[test]
    fn agrees_with_eigenvalue_oracle(a in matrix()) {
        for k in 0..=a.dim() {
            let fast = sigma(&a, k).unwrap();
            let slow = sigma_eig(&a, k).unwrap();
            prop_assert!((fast - slow).abs() <= 1e-10 * (1.0 + slow.abs()) * 4f64.powi(k as i32));
        }
    }

    #[test]
    fn orthogonal_invariance(vals in prop::collection::vec(-2.0f64..2.0, 3..=5), seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_rotated(&mut rng, &vals);
        let d = SymMatrix::from_diag(&vals);
        for k in 1..=vals.len() {
            prop_assert!((sigma(&a, k).unwrap() - sigma(&d, k).unwrap()).abs() <= 1e-11 * 4f64.powi(k as i32));
        }
    }

    #[test]
    fn inclusion_chain(a in matrix()) {
        for k in 2..=a.dim() {
            match classify_cone(&a, k).unwrap() {
                ConeClass::PositiveCone(_) => prop_assert!(classify_cone(&a, k - 1).unwrap().is_positive()),
                ConeClass::NegativeCone(_) => prop_assert!(classify_cone(&a, k - 1).unwrap().is_negative()),
                ConeClass::Neither => {}
            }
        }
    }

    #[test]
    fn sign_duality_on_constants(c in -0.5f64..0.5, amp in 0.0f64..0.4, k in 1usize..=3) {
        let g = Grid::cubic(3, 8).unwrap();
        let s = TensorField::from_node_fn(g, |node| {
            let x = g.position(node);
            SymMatrix::from_diag(&[-1.0 - amp * x[0].sin(), -1.0, -1.2])
        });
        let f = ScalarField::from_fn(g, |x| -(1.0 + amp * x[1].cos()));
        let w = ScalarField::constant(g, c);
        let neg = ProblemSpec::new(Background::flat(s.clone(), 0.3).unwrap(), k, f.clone(), Case::Negative, SolverOptions::default()).unwrap();
        let pos = ProblemSpec::new(
            Background::flat(s.map(|m| -*m), 0.3).unwrap(),
            k,
            f.map(|v| -v),
            Case::Positive,
            SolverOptions::default(),
        ).unwrap();
        let rn = residual_power(&w, &HomotopyPoint::target(&neg), &neg);
        let rp = residual_power(&w, &HomotopyPoint::target(&pos), &pos);
        prop_assert_eq!(rn.max_abs_diff(&rp), 0.0);
    }

    #[test]
    fn residual_commutes_with_grid_shifts(shift in 1usize..8, axis in 0usize..3, k in 1usize..=3) {
        let g = Grid::cubic(3, 8).unwrap();
        let bg = Background::flat(TensorField::constant(g, SymMatrix::scalar(3, -1.0)), 0.0).unwrap();
        let p = ProblemSpec::new(bg, k, ScalarField::constant(g, -1.5), Case::Negative, SolverOptions::default()).unwrap();
        let w = ScalarField::from_fn(g, |x| 0.1 * x[0].sin() * x[1].cos() + 0.05 * (2.0 * x[2]).sin());
        let shifted = ScalarField::new(g, (0..g.node_count()).map(|node| w.values()[g.neighbor(node, axis, shift as isize)]).collect()).unwrap();
        let hp = HomotopyPoint::target(&p);
        let r = residual_power(&w, &hp, &p);
        let rs = residual_power(&shifted, &hp, &p);
        for node in 0..g.node_count() {
            prop_assert!((rs.values()[node] - r.values()[g.neighbor(node, axis, shift as isize)]).abs() <= 1e-14);
        }
    }
}
