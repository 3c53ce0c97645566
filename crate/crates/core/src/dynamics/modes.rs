//! Normal modes of the quadratic part adapted to the symmetry, and the
//! periodic families of the linearised flow on the zero momentum level that
//! seed the shooting.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{GroupAction, GroupKind, MomentMap};
use crate::hamiltonian::HamiltonianOracle;
use crate::linalg::{self, Mat, Vector};
use crate::reduction::hull;
use crate::symplectic::{williamson, QuadraticForm, SymplecticSpace};

/// Symplectic frame in which `q` and every moment component are diagonal:
/// `q = sum omega_k |zeta_k|^2 / 2`, `Phi_i = sum w_{k,i} |zeta_k|^2 / 2`.
#[derive(Debug, Clone, Serialize)]
pub struct ModeFrame {
    #[serde(serialize_with = "crate::report::ser_mat")]
    pub s: Mat,
    pub freqs: Vec<f64>,
    /// `weights[k][i]`.
    pub weights: Vec<Vec<f64>>,
}

impl ModeFrame {
    /// Point with mode amplitudes `r_k` and phases `phi_k`.
    pub fn point(&self, amplitudes: &[f64], phases: &[f64]) -> Vector {
        let n = self.freqs.len();
        let mut local = Vector::zeros(2 * n);
        for k in 0..n {
            local[k] = amplitudes[k] * phases[k].cos();
            local[n + k] = amplitudes[k] * phases[k].sin();
        }
        &self.s * local
    }
}

/// Williamson frame of `q + sum eps_i Q_i` for small generic `eps`, which
/// diagonalises the commuting family `q, Q_1, ..., Q_d`.
pub fn mode_frame(space: &SymplecticSpace, q: &QuadraticForm, map: &MomentMap) -> Result<ModeFrame> {
    let n = space.n();
    let eig = q.eigenvalues();
    let lmin = eig.first().copied().unwrap_or(0.0);
    if lmin <= 0.0 {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: lmin });
    }
    let mut perturbed = q.matrix().clone();
    for (i, qi) in map.components().iter().enumerate() {
        let size = linalg::norm2(qi).max(1e-300);
        let eps = 1e-3 * lmin / size / (1.0 + 0.618_033_988_749_895 * (i as f64 + 1.0));
        perturbed += eps * qi;
    }
    let wd = williamson(space, &QuadraticForm::new(perturbed)?, None)?;
    let s = wd.s;
    let scale = linalg::norm2(q.matrix()).max(1.0);
    let diag = |m: &Mat, what: &str| -> Result<Vec<f64>> {
        let c = s.transpose() * m * &s;
        let mut vals = Vec::with_capacity(n);
        for k in 0..n {
            vals.push(c[(k, k)] + c[(n + k, n + k)]);
        }
        let mut off = 0.0_f64;
        for a in 0..2 * n {
            for b in 0..2 * n {
                if a != b {
                    off = off.max(c[(a, b)].abs());
                }
            }
            let k = a % n;
            off = off.max((c[(a, a)] - 0.5 * vals[k]).abs());
        }
        if off > 1e-7 * scale {
            return Err(Error::InvalidInput(format!(
                "normal-mode frame does not diagonalise {what} (off-diagonal {off:.3e})"
            )));
        }
        Ok(vals)
    };
    let freqs = diag(q.matrix(), "the quadratic part")?;
    let mut weights = vec![Vec::with_capacity(map.dim()); n];
    for (i, qi) in map.components().iter().enumerate() {
        let w = diag(qi, &format!("moment component {i}"))?;
        for k in 0..n {
            weights[k].push(w[k]);
        }
    }
    Ok(ModeFrame { s, freqs, weights })
}

/// A family of relative periodic orbits of the linearised flow on the zero
/// momentum level: modes in `support` with squared amplitudes `lambda`
/// return to the group orbit after `period` with element `exp(theta . xi)`.
#[derive(Debug, Clone, Serialize)]
pub struct LinearFamily {
    pub support: Vec<usize>,
    pub lambda: Vec<f64>,
    pub period: f64,
    pub theta: Vec<f64>,
}

/// Supports admitting `omega_k = <c, w_k> + c0` with `c0 > 0` on the zero
/// level. For torus actions supports are decided with the exact weight
/// combinatorics of the (rounded) mode weights; otherwise only single modes
/// are used.
pub fn linear_families(action: &GroupAction, frame: &ModeFrame) -> Vec<LinearFamily> {
    let n = frame.freqs.len();
    let d = action.dim();
    let int_weights: Option<Vec<Vec<i64>>> = if action.kind() == GroupKind::Torus {
        let rounded: Vec<Vec<i64>> = frame
            .weights
            .iter()
            .map(|w| w.iter().map(|x| x.round() as i64).collect())
            .collect();
        let exact = frame
            .weights
            .iter()
            .flatten()
            .zip(rounded.iter().flatten())
            .all(|(a, b)| (a - *b as f64).abs() < 1e-6);
        exact.then_some(rounded)
    } else {
        None
    };
    let supports: Vec<(Vec<usize>, Vec<f64>)> = match &int_weights {
        Some(w) => hull::all_supports(n)
            .into_iter()
            .filter_map(|s| {
                let l = hull::admissible(w, &s)?;
                Some((s, l.iter().map(hull::to_f64).collect()))
            })
            .collect(),
        None => (0..n).map(|k| (vec![k], vec![1.0])).collect(),
    };
    let wmax = frame.freqs.iter().fold(0.0_f64, |a, b| a.max(*b));
    let mut out = Vec::new();
    for (s, lambda) in supports {
        // Unknowns (c_1..c_d, c0).
        let a = Mat::from_fn(s.len(), d + 1, |r, c| if c < d { frame.weights[s[r]][c] } else { 1.0 });
        let b = Vector::from_iterator(s.len(), s.iter().map(|&k| frame.freqs[k]));
        let sol = linalg::lstsq(&a, &b, 1e-12);
        if (&a * &sol - &b).norm() > 1e-9 * wmax {
            continue;
        }
        let c0 = sol[d];
        if c0 <= 1e-9 * wmax {
            continue;
        }
        let period = std::f64::consts::TAU / c0;
        out.push(LinearFamily {
            support: s,
            lambda,
            period,
            theta: (0..d).map(|i| sol[i] * period).collect(),
        });
    }
    out
}

/// Scale factor `s` with `h(s v) - h(0) = excess`, by bisection on the ray
/// followed by Newton polishing.
pub fn scale_to_energy(oracle: &dyn HamiltonianOracle, v: &Vector, excess: f64) -> Result<f64> {
    let h0 = oracle.value(&Vector::zeros(v.len()));
    let f = |s: f64| oracle.value(&(s * v)) - h0 - excess;
    let mut hi = 1e-6;
    let mut tries = 0;
    while f(hi) < 0.0 {
        hi *= 2.0;
        tries += 1;
        if tries > 200 {
            return Err(Error::NotConverged(format!(
                "energy {excess} not reached along the seed direction"
            )));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    let mut s = 0.5 * (lo + hi);
    for _ in 0..3 {
        let g = oracle.gradient(&(s * v)).dot(v);
        if g.abs() > 1e-300 {
            let next = s - f(s) / g;
            if next > lo && next < hi.max(lo) * 1.0001 {
                s = next;
            }
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::homogeneous_moment_map;
    use crate::hamiltonian::{abs2, quadratic_part, PolynomialHamiltonian};

    #[test]
    fn weinstein_modes() {
        let sp = SymplecticSpace::new(2).unwrap();
        let a = GroupAction::trivial(sp.clone());
        let map = homogeneous_moment_map(&a).unwrap();
        let h = PolynomialHamiltonian::new(&abs2(2, 0) + &abs2(2, 1).scale(2.0)).unwrap();
        let q = quadratic_part(&h).unwrap();
        let f = mode_frame(&sp, &q, &map).unwrap();
        assert!((f.freqs[0] - 2.0).abs() < 1e-12 && (f.freqs[1] - 4.0).abs() < 1e-12);
        let fam = linear_families(&a, &f);
        let periods: Vec<f64> = fam.iter().map(|x| x.period).collect();
        assert_eq!(periods.len(), 2);
        assert!((periods[0] - std::f64::consts::PI).abs() < 1e-12);
        assert!((periods[1] - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn circle_families() {
        let sp = SymplecticSpace::new(3).unwrap();
        let a = GroupAction::torus(sp.clone(), vec![vec![1], vec![1], vec![-1]]).unwrap();
        let map = homogeneous_moment_map(&a).unwrap();
        let p = &(&abs2(3, 0) + &abs2(3, 1).scale(2.0)) + &abs2(3, 2).scale(3.0);
        let q = quadratic_part(&PolynomialHamiltonian::new(p).unwrap()).unwrap();
        let f = mode_frame(&sp, &q, &map).unwrap();
        let fam = linear_families(&a, &f);
        let supports: Vec<Vec<usize>> = fam.iter().map(|x| x.support.clone()).collect();
        assert_eq!(supports, vec![vec![0, 2], vec![1, 2]]);
        // omega = (2, 4, 6): c0 = 4 and 5.
        assert!((fam[0].period - std::f64::consts::TAU / 4.0).abs() < 1e-12);
        assert!((fam[1].period - std::f64::consts::TAU / 5.0).abs() < 1e-12);
    }

    #[test]
    fn energy_scaling() {
        let r = &abs2(1, 0);
        let h = PolynomialHamiltonian::new(r + &(r * r)).unwrap();
        let v = Vector::from_row_slice(&[1.0, 0.0]);
        let s = scale_to_energy(&h, &v, 0.1).unwrap();
        assert!((s * s + s.powi(4) - 0.1).abs() < 1e-15);
    }
}
