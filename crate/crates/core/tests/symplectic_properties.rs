use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use relmodes::linalg::projector;
use relmodes::symplectic::{hamiltonian_matrix, symplectic_complement, williamson, QuadraticForm, SymplecticSpace};

/// Random symmetric positive definite `2n x 2n` matrix `A^T A + I/2`.
fn spd() -> impl Strategy<Value = (usize, DMatrix<f64>)> {
    (1usize..=5).prop_flat_map(|n| {
        prop::collection::vec(-1.0f64..1.0, 4 * n * n).prop_map(move |e| {
            let a = DMatrix::from_row_slice(2 * n, 2 * n, &e);
            (n, a.transpose() * &a + 0.5 * DMatrix::identity(2 * n, 2 * n))
        })
    })
}

/// `|Im|` of the eigenvalues of `xi`, ascending, each listed once per conjugate pair.
fn imaginary_spectrum(xi: &DMatrix<f64>) -> Vec<f64> {
    let mut im: Vec<f64> = xi
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.im > 0.0)
        .map(|z| z.im)
        .collect();
    im.sort_by(f64::total_cmp);
    im
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn williamson_normal_form((n, q) in spd()) {
        let space = SymplecticSpace::new(n).unwrap();
        let form = QuadraticForm::new(q.clone()).unwrap();
        let w = williamson(&space, &form, None).unwrap();
        prop_assert!(w.symplectic_residual(&space) <= 1e-9, "S^T J S - J = {}", w.symplectic_residual(&space));
        let qn = q.norm();
        prop_assert!(w.diagonal_residual(&form) <= 1e-9 * qn);
        let xi = hamiltonian_matrix(&space, &form).unwrap();
        let im = imaginary_spectrum(xi.matrix());
        prop_assert_eq!(im.len(), n);
        let mut freqs = w.freqs.clone();
        freqs.sort_by(f64::total_cmp);
        for (a, b) in freqs.iter().zip(&im) {
            prop_assert!((a - b).abs() <= 1e-9 * qn.max(1.0), "{:?} vs {:?}", freqs, im);
        }
    }

    #[test]
    fn hamiltonian_matrix_is_symmetric_after_j((_n, q) in spd()) {
        let n = q.nrows() / 2;
        let space = SymplecticSpace::new(n).unwrap();
        let xi = hamiltonian_matrix(&space, &QuadraticForm::new(q).unwrap()).unwrap();
        let jx = space.j() * xi.matrix();
        prop_assert!((&jx - jx.transpose()).norm() <= 1e-10 * jx.norm());
    }

    #[test]
    fn complement_twice_is_identity(
        n in 1usize..=4,
        k in 1usize..=4,
        entries in prop::collection::vec(-1.0f64..1.0, 32),
    ) {
        let k = k.min(2 * n);
        let space = SymplecticSpace::new(n).unwrap();
        let vectors: Vec<DVector<f64>> = (0..k)
            .map(|c| DVector::from_iterator(2 * n, (0..2 * n).map(|r| entries[(c * 2 * n + r) % 32] + (r == c) as u8 as f64)))
            .collect();
        let span = relmodes::linalg::columns(2 * n, &vectors);
        let Ok(once) = symplectic_complement(&space, &vectors) else { return Ok(()); };
        let back: Vec<DVector<f64>> = once.column_iter().map(|c| c.into_owned()).collect();
        let twice = symplectic_complement(&space, &back).unwrap();
        let svd = span.clone().svd(true, false);
        let u = svd.u.unwrap();
        let rank = svd.singular_values.iter().filter(|s| **s > 1e-9).count();
        let orig = projector(&u.columns(0, rank).into_owned());
        prop_assert!((projector(&twice) - orig).amax() <= 1e-9);
    }
}
