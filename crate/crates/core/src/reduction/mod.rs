//! Singular reduction at zero momentum: sampling the zero level set,
//! stratifying its link, the resonance torus of the quadratic part, and
//! Lusternik-Schnirelmann lower bounds.

pub mod category;
pub mod hull;
pub mod resonance;
pub mod strata;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

pub use category::{category_lower_bound, table_category, CategoryBound, StratumCategory};
pub use resonance::{resonance_torus, ResonanceTorus};
pub use strata::{stratify, IsotropyLabel, LinkDescriptor, LinkModel, StratumDescriptor, TaggedSample};

use crate::error::{Error, Result};
use crate::group::{GroupAction, GroupKind, MomentMap};
use crate::linalg::{self, Vector};
use crate::tolerance::Tolerances;

/// Coordinates (0-based complex indices) allowed to be nonzero on the zero
/// level, or `EmptyLevelSet` when it is `{0}`. `None` means unrestricted.
pub fn zero_level_support(action: &GroupAction) -> Result<Option<Vec<usize>>> {
    if action.kind() != GroupKind::Torus || action.dim() == 0 {
        return Ok(None);
    }
    match hull::zero_level(action.weights().expect("torus weights")) {
        hull::ZeroLevel::Nonempty { support, .. } => Ok(Some(support)),
        empty => Err(Error::EmptyLevelSet {
            certificate: empty.describe(),
        }),
    }
}

/// Points of `Phi^{-1}(0) ∩ S^{2n-1}` by projected Newton from random sphere
/// points. Deterministic in `seed`; sample `i` uses its own random stream.
pub fn sample_zero_level(
    action: &GroupAction,
    map: &MomentMap,
    count: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<Vec<Vector>> {
    let n = action.space().n();
    let support = zero_level_support(action)?;
    let mask: Vec<bool> = match &support {
        Some(s) => (0..2 * n).map(|i| s.contains(&(i % n))).collect(),
        None => vec![true; 2 * n],
    };
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut last = f64::INFINITY;
            for _ in 0..50 {
                let mut v = Vector::from_fn(2 * n, |j, _| {
                    let g: f64 = StandardNormal.sample(&mut rng);
                    if mask[j] {
                        g
                    } else {
                        0.0
                    }
                });
                v /= v.norm();
                match project_to_zero_level(map, v, tol) {
                    Ok(p) => return Ok(p),
                    Err(r) => last = r,
                }
            }
            Err(Error::NewtonStall {
                iterations: 50 * 60,
                residual: last,
            })
        })
        .collect()
}

/// Projected Newton `v <- v - dPhi^+ Phi(v)` followed by normalisation.
pub fn project_to_zero_level(map: &MomentMap, mut v: Vector, tol: &Tolerances) -> std::result::Result<Vector, f64> {
    if map.dim() == 0 {
        return Ok(v);
    }
    let mut r = f64::INFINITY;
    for _ in 0..60 {
        let phi = map.value(&v).as_vector();
        r = phi.norm();
        if r <= 0.1 * tol.zero_level && (v.norm() - 1.0).abs() <= tol.sphere {
            return Ok(v);
        }
        let d = map.differential(&v);
        let step = linalg::lstsq(&d, &(-phi), 1e-10);
        v += step;
        let norm = v.norm();
        if norm.is_nan() || norm <= 1e-3 {
            return Err(r);
        }
        v /= norm;
    }
    if r <= tol.zero_level && (v.norm() - 1.0).abs() <= tol.sphere {
        Ok(v)
    } else {
        Err(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::homogeneous_moment_map;
    use crate::symplectic::SymplecticSpace;

    #[test]
    fn opposite_weights_sample_balanced_circles() {
        let sp = SymplecticSpace::new(2).unwrap();
        let a = GroupAction::torus(sp, vec![vec![1], vec![-1]]).unwrap();
        let m = homogeneous_moment_map(&a).unwrap();
        let pts = sample_zero_level(&a, &m, 50, 7, &Tolerances::default()).unwrap();
        for p in pts {
            let r1 = (p[0] * p[0] + p[2] * p[2]).sqrt();
            let r2 = (p[1] * p[1] + p[3] * p[3]).sqrt();
            assert!((r1 - 0.5f64.sqrt()).abs() < 1e-10 && (r2 - 0.5f64.sqrt()).abs() < 1e-10);
        }
    }

    #[test]
    fn same_sign_weights_are_empty() {
        let sp = SymplecticSpace::new(2).unwrap();
        let a = GroupAction::torus(sp, vec![vec![1], vec![1]]).unwrap();
        let m = homogeneous_moment_map(&a).unwrap();
        let err = sample_zero_level(&a, &m, 5, 1, &Tolerances::default()).unwrap_err();
        assert!(matches!(err, Error::EmptyLevelSet { .. }));
    }

    #[test]
    fn trivial_group_samples_sphere() {
        let a = GroupAction::trivial(SymplecticSpace::new(3).unwrap());
        let m = homogeneous_moment_map(&a).unwrap();
        let pts = sample_zero_level(&a, &m, 10, 1, &Tolerances::default()).unwrap();
        assert_eq!(pts.len(), 10);
        assert!(pts.iter().all(|p| (p.norm() - 1.0).abs() < 1e-14));
    }

    #[test]
    fn sampling_is_deterministic() {
        let sp = SymplecticSpace::new(3).unwrap();
        let a = GroupAction::torus(sp, vec![vec![1], vec![1], vec![-1]]).unwrap();
        let m = homogeneous_moment_map(&a).unwrap();
        let t = Tolerances::default();
        assert_eq!(
            sample_zero_level(&a, &m, 20, 3, &t).unwrap(),
            sample_zero_level(&a, &m, 20, 3, &t).unwrap()
        );
    }
}
