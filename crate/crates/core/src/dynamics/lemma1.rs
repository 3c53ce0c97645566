//! Scan for relative equilibria of the quadratic part on the zero level:
//! the normalised distance of `dq(v)` from the row space of `dPhi(v)`.

use serde::Serialize;

use crate::group::MomentMap;
use crate::linalg::{self, Vector};
use crate::symplectic::QuadraticForm;

#[derive(Debug, Clone, Serialize)]
pub struct Lemma1Scan {
    pub samples: usize,
    pub min_distance: f64,
    pub argmin: Vec<f64>,
    pub q_definite: bool,
    /// The minimum is at or below the flag threshold, or `q` is not definite.
    pub hypothesis_violation: bool,
}

/// `|dq(v) - proj_{row dPhi(v)} dq(v)| / |dq(v)|`, zero when `dq(v) = 0`.
pub fn lemma1_distance(map: &MomentMap, q: &QuadraticForm, v: &Vector) -> f64 {
    let dq = q.gradient(v);
    let n = dq.norm();
    if n == 0.0 {
        return 0.0;
    }
    if map.dim() == 0 {
        return 1.0;
    }
    let dt = map.differential(v).transpose();
    let c = linalg::lstsq(&dt, &dq, 1e-12);
    (&dq - dt * c).norm() / n
}

pub fn lemma1_scan(map: &MomentMap, q: &QuadraticForm, samples: &[Vector], flag: f64) -> Lemma1Scan {
    let mut min_distance = f64::INFINITY;
    let mut argmin = Vec::new();
    for v in samples {
        let d = lemma1_distance(map, q, v);
        if d < min_distance {
            min_distance = d;
            argmin = v.iter().copied().collect();
        }
    }
    let q_definite = q.is_definite(1e-9);
    Lemma1Scan {
        samples: samples.len(),
        min_distance,
        argmin,
        q_definite,
        hypothesis_violation: !q_definite || min_distance <= flag,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{homogeneous_moment_map, GroupAction};
    use crate::linalg::Mat;
    use crate::reduction::sample_zero_level;
    use crate::symplectic::SymplecticSpace;
    use crate::tolerance::Tolerances;

    fn setup(q: &[f64]) -> (MomentMap, QuadraticForm, Vec<Vector>) {
        let sp = SymplecticSpace::new(2).unwrap();
        let a = GroupAction::torus(sp, vec![vec![1], vec![-1]]).unwrap();
        let map = homogeneous_moment_map(&a).unwrap();
        let form = QuadraticForm::new(Mat::from_diagonal(&Vector::from_row_slice(q))).unwrap();
        let pts = sample_zero_level(&a, &map, 200, 5, &Tolerances::default()).unwrap();
        (map, form, pts)
    }

    #[test]
    fn definite_form_stays_away() {
        // |dq|^2 = 20 r^2, projection 2 r^2: distance sqrt(18/20).
        let (map, q, pts) = setup(&[1.0, 2.0, 1.0, 2.0]);
        let s = lemma1_scan(&map, &q, &pts, 1e-3);
        assert!((s.min_distance - 0.9f64.sqrt()).abs() < 1e-10);
        assert!(!s.hypothesis_violation);
        let scaled: Vec<Vector> = pts.iter().map(|p| 3.0 * p).collect();
        assert!((lemma1_scan(&map, &q, &scaled, 1e-3).min_distance - s.min_distance).abs() < 1e-12);
    }

    #[test]
    fn indefinite_form_is_flagged() {
        let (map, q, pts) = setup(&[1.0, -1.0, 1.0, -1.0]);
        let s = lemma1_scan(&map, &q, &pts, 1e-3);
        assert!(s.min_distance < 1e-12);
        assert!(s.hypothesis_violation);
    }
}
