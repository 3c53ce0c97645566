use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use relmodes::group::{equivariance_residual, homogeneous_moment_map, isotropy_algebra, GroupAction};
use relmodes::lab::BUILTINS;
use relmodes::reduction::{category_lower_bound, sample_zero_level, stratify};
use relmodes::symplectic::SymplecticSpace;
use relmodes::tolerance::Tolerances;

/// Realification of a complex `n x n` matrix `x + i y` acting on `(Re z, Im z)`.
fn realify(x: &DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(x);
    m.view_mut((0, n), (n, n)).copy_from(&(-y));
    m.view_mut((n, 0), (n, n)).copy_from(y);
    m.view_mut((n, n), (n, n)).copy_from(x);
    m
}

/// `U(2)` acting on `C^2` through skew-Hermitian generators.
fn unitary_two() -> GroupAction {
    let z = DMatrix::zeros(2, 2);
    let e = |i: usize, j: usize| {
        let mut m = DMatrix::zeros(2, 2);
        m[(i, j)] = 1.0;
        m
    };
    let gens = vec![
        realify(&z, &e(0, 0)),
        realify(&z, &e(1, 1)),
        realify(&(e(0, 1) - e(1, 0)), &z),
        realify(&z, &(e(0, 1) + e(1, 0))),
    ];
    GroupAction::general(SymplecticSpace::new(2).unwrap(), gens, None, vec![]).unwrap()
}

fn torus_weights() -> impl Strategy<Value = Vec<Vec<i64>>> {
    (1usize..=4, 1usize..=2).prop_flat_map(|(n, d)| prop::collection::vec(prop::collection::vec(-3i64..=3, d), n))
}

fn vector(dim: usize) -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(-1.0f64..1.0, dim).prop_map(DVector::from_vec)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn moment_identity_torus(w in torus_weights(), seed in any::<u64>()) {
        let n = w.len();
        let action = GroupAction::torus(SymplecticSpace::new(n).unwrap(), w).unwrap();
        let map = homogeneous_moment_map(&action).unwrap();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        // 16 points per case, about a thousand over the run.
        for _ in 0..16 {
            let v = DVector::from_fn(2 * n, |_, _| rand::Rng::random_range(&mut rng, -1.0..1.0));
            let mu = map.value(&v);
            for (i, xi) in action.generators().iter().enumerate() {
                let expected = 0.5 * action.space().omega(&(xi * &v), &v);
                prop_assert!((mu.mu[i] - expected).abs() <= 1e-14 * (1.0 + v.norm_squared()));
            }
        }
    }

    #[test]
    fn moment_differential_matches_differences(v in vector(4)) {
        let action = unitary_two();
        let map = homogeneous_moment_map(&action).unwrap();
        let d = map.differential(&v);
        let h = 1e-6;
        for j in 0..4 {
            let mut e = DVector::zeros(4);
            e[j] = h;
            let fd = (map.value(&(&v + &e)).as_vector() - map.value(&(&v - &e)).as_vector()) / (2.0 * h);
            for i in 0..4 {
                prop_assert!((fd[i] - d[(i, j)]).abs() <= 1e-6 * (1.0 + d[(i, j)].abs()));
            }
        }
    }

    #[test]
    fn isotropy_plus_orbit_is_group_dimension(v in vector(4), zero_second in any::<bool>()) {
        let mut v = v;
        if zero_second {
            v[1] = 0.0;
            v[3] = 0.0;
        }
        prop_assume!(v.norm() > 1e-3);
        let action = unitary_two();
        let tol = Tolerances::default();
        let iso = isotropy_algebra(&action, &v, tol.rank_policy()).unwrap();
        let orbit = action.orbit_tangent_matrix(&v);
        let rank = orbit.svd(false, false).singular_values.iter().filter(|s| **s > 1e-9 * v.norm()).count();
        prop_assert_eq!(iso.dim() + rank, action.dim());
        // Every unit vector of C^2 has isotropy U(1) in U(2).
        prop_assert_eq!(iso.dim(), 1);
    }

    #[test]
    fn moment_map_is_homogeneous(w in torus_weights(), v in vector(8), t in 0.01f64..10.0) {
        let n = w.len();
        let action = GroupAction::torus(SymplecticSpace::new(n).unwrap(), w).unwrap();
        let map = homogeneous_moment_map(&action).unwrap();
        let v = v.rows(0, 2 * n).into_owned();
        let a = map.value(&(t * &v)).as_vector();
        let b = t * t * map.value(&v).as_vector();
        prop_assert!((a - &b).amax() <= 1e-12 * (1.0 + b.amax()));
    }
}

#[test]
fn builtins_are_equivariant() {
    for b in BUILTINS {
        let Ok(s) = b.scenario() else { continue };
        let sys = s.build().unwrap();
        let r = equivariance_residual(&sys.action, &sys.map, 64, 1);
        assert!(r <= 1e-9, "{}: {r}", b.name);
    }
    let action = unitary_two();
    let map = homogeneous_moment_map(&action).unwrap();
    assert!(equivariance_residual(&action, &map, 64, 1) <= 1e-9);
}

#[test]
fn samples_match_their_strata_and_bound_is_positive() {
    let tol = Tolerances::default();
    for b in BUILTINS {
        let Ok(s) = b.scenario() else { continue };
        let sys = s.build().unwrap();
        let Ok(samples) = sample_zero_level(&sys.action, &sys.map, 24, 3, &tol) else {
            continue;
        };
        for v in &samples {
            for t in [0.1, 3.0] {
                assert!(sys.map.value(&(t * v)).norm() <= 1e-9 * t * t, "{}", b.name);
            }
        }
        let link = stratify(&sys.action, &samples).unwrap();
        assert_eq!(link.tag_mismatches, 0, "{}", b.name);
        assert!(category_lower_bound(&link).n >= 1, "{}", b.name);
    }
}
