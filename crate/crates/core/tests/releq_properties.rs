use nalgebra::DVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relmodes::group::{homogeneous_moment_map, invariant_inner_product, GroupAction};
use relmodes::hamiltonian::{abs2, PolynomialHamiltonian};
use relmodes::releq::{
    orthogonal_velocity, orthogonal_velocity_in, re_residual, slice_hessian_test, velocity_space, Verdict,
};
use relmodes::symplectic::SymplecticSpace;
use relmodes::tolerance::Tolerances;

/// `T^2` acting diagonally on `C^2`.
fn two_torus() -> (GroupAction, PolynomialHamiltonian) {
    let action = GroupAction::torus(SymplecticSpace::new(2).unwrap(), vec![vec![1, 0], vec![0, 1]]).unwrap();
    let (a, b) = (abs2(2, 0), abs2(2, 1));
    let h = &(&(&a + &b.scale(2.0)) + &(&a * &b)) + &(&a * &a);
    (action, PolynomialHamiltonian::new(h).unwrap())
}

/// Circle with weights (1, -1) and a relative equilibrium on the first axis.
fn circle() -> (GroupAction, PolynomialHamiltonian) {
    let action = GroupAction::torus(SymplecticSpace::new(2).unwrap(), vec![vec![1], vec![-1]]).unwrap();
    let (a, b) = (abs2(2, 0), abs2(2, 1));
    let h = &(&a + &b.scale(2.0)) + &(&a * &b);
    (action, PolynomialHamiltonian::new(h).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn velocity_ignores_inner_product_scale(a in 0.1f64..2.0, c in 0.01f64..100.0) {
        let (action, h) = two_torus();
        let map = homogeneous_moment_map(&action).unwrap();
        let tol = Tolerances::default();
        let m = DVector::from_row_slice(&[a, 0.0, 0.0, 0.0]);
        let b = invariant_inner_product(&action, 0).unwrap();
        let (e1, _) = orthogonal_velocity_in(&h, &action, &map, &m, &b, &tol).unwrap();
        let (e2, _) = orthogonal_velocity_in(&h, &action, &map, &m, &(c * &b), &tol).unwrap();
        prop_assert!((&e1 - &e2).amax() <= 1e-8 * (1.0 + e1.amax()));
    }

    #[test]
    fn velocity_minimises_residual(a in 0.1f64..2.0, seed in any::<u64>()) {
        let (action, h) = two_torus();
        let map = homogeneous_moment_map(&action).unwrap();
        let tol = Tolerances::default();
        let m = DVector::from_row_slice(&[a, 0.0, 0.0, 0.0]);
        let (eta, r) = orthogonal_velocity(&h, &action, &map, &m, &tol).unwrap();
        let basis = velocity_space(&action, &map, &m, &tol).unwrap();
        prop_assert_eq!(basis.ncols(), 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..200 {
            let t = rng.random_range(-10.0..10.0);
            let trial = &basis * DVector::from_element(1, t);
            let rt = re_residual(&h, &action, &map, &m, trial.as_slice()).unwrap();
            prop_assert!(r <= rt + 1e-12, "eta {eta} residual {r} beaten by {trial} with {rt}");
        }
    }

    #[test]
    fn verdict_is_constant_along_orbits(a in 0.1f64..1.5, seed in any::<u64>()) {
        let (action, h) = circle();
        let map = homogeneous_moment_map(&action).unwrap();
        let tol = Tolerances::default();
        let m = DVector::from_row_slice(&[a, 0.0, 0.0, 0.0]);
        let base = slice_hessian_test(&h, &action, &map, &m, &tol).unwrap();
        let g = action.sample_element(&mut ChaCha8Rng::seed_from_u64(seed));
        let moved = slice_hessian_test(&h, &action, &map, &(&g.matrix * &m), &tol).unwrap();
        prop_assert_eq!(base.verdict, moved.verdict);
        // Abelian: conjugation is trivial, so eta is unchanged.
        for (x, y) in base.eta.iter().zip(&moved.eta) {
            prop_assert!((x - y).abs() <= 1e-8 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn positive_slice_reports_are_consistent(a in 0.0f64..1.5) {
        let (action, h) = circle();
        let map = homogeneous_moment_map(&action).unwrap();
        let r = slice_hessian_test(&h, &action, &map, &DVector::from_row_slice(&[a, 0.0, 0.0, 0.0]), &Tolerances::default()).unwrap();
        prop_assert_eq!(r.verdict, Verdict::PositiveDefiniteSlice);
        let slice = r.slice.as_ref().unwrap();
        prop_assert_eq!(r.positive_count, slice.slice_dim);
        let zeros = r.hessian_eigenvalues.iter().filter(|v| v.abs() <= r.zero_threshold).count();
        prop_assert_eq!(zeros + r.positive_count, r.hessian_eigenvalues.len());
        prop_assert!(r.orbit_tangent_residual <= 1e-8);
    }
}
