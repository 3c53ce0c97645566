//! Relative equilibria: the residual of `d(h - <Phi, eta>)(m) = 0`, the
//! orthogonal velocity, symplectic-slice bookkeeping and the slice-Hessian
//! test for nonlinear stability.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{self, GroupAction, MomentMap, MomentValue};
use crate::hamiltonian::HamiltonianOracle;
use crate::linalg::{self, Mat, RankInfo, Vector};
use crate::tolerance::Tolerances;

/// `ker dPhi(m)` and the tangent space of the `G_mu`-orbit through `m`.
#[derive(Debug, Clone, Serialize)]
pub struct SliceData {
    #[serde(serialize_with = "crate::report::ser_mat")]
    pub kernel_basis: Mat,
    #[serde(serialize_with = "crate::report::ser_mat")]
    pub orbit_tangent_basis: Mat,
    pub slice_dim: usize,
    pub kernel_rank: RankInfo,
    pub orbit_rank: RankInfo,
    /// Largest component of an orbit tangent vector outside the kernel.
    pub containment_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    PositiveDefiniteSlice,
    Indefinite,
    DegenerateRank,
    NotRelEq,
}

#[derive(Debug, Clone, Serialize)]
pub struct RelEqReport {
    pub point: Vec<f64>,
    pub mu: MomentValue,
    pub eta: Vec<f64>,
    pub residual: f64,
    /// Ascending eigenvalues of the Hessian of `h - <Phi, eta>` on `ker dPhi(m)`.
    pub hessian_eigenvalues: Vec<f64>,
    pub positive_count: usize,
    pub zero_threshold: f64,
    /// Largest `|t_i^T H t_j|` over the orbit tangent basis.
    pub orbit_tangent_residual: f64,
    pub slice: Option<SliceData>,
    pub verdict: Verdict,
}

impl RelEqReport {
    /// Report for a point that failed the relative-equilibrium gate.
    pub fn not_rel_eq(m: &Vector, mu: MomentValue, residual: f64) -> Self {
        Self {
            point: m.iter().copied().collect(),
            mu,
            eta: Vec::new(),
            residual,
            hessian_eigenvalues: Vec::new(),
            positive_count: 0,
            zero_threshold: 0.0,
            orbit_tangent_residual: 0.0,
            slice: None,
            verdict: Verdict::NotRelEq,
        }
    }
}

/// `|| grad h(m) - dPhi(m)^T eta ||`.
pub fn re_residual(
    oracle: &dyn HamiltonianOracle,
    action: &GroupAction,
    map: &MomentMap,
    m: &Vector,
    eta: &[f64],
) -> Result<f64> {
    action.space().check_vector(m, "point")?;
    if eta.len() != action.dim() {
        return Err(Error::DimensionMismatch(format!(
            "eta has length {}, expected {}",
            eta.len(),
            action.dim()
        )));
    }
    let d = map.differential(m);
    let eta = Vector::from_column_slice(eta);
    Ok((oracle.gradient(m) - d.transpose() * eta).norm())
}

/// Orthonormal basis (generator coordinates) of the complement of `g_m`
/// inside `g_mu` with respect to the invariant inner product.
pub fn velocity_space(action: &GroupAction, map: &MomentMap, m: &Vector, tol: &Tolerances) -> Result<Mat> {
    if action.dim() == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    velocity_space_in(action, map, m, &group::invariant_inner_product(action, 0)?, tol)
}

/// As [`velocity_space`] with the inner product `b` on the algebra.
pub fn velocity_space_in(action: &GroupAction, map: &MomentMap, m: &Vector, b: &Mat, tol: &Tolerances) -> Result<Mat> {
    let d = action.dim();
    if d == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    let policy = tol.rank_policy();
    let mu = map.value(m);
    let g_mu = group::isotropy_algebra_of_momentum(action, &mu, policy)?.basis;
    let g_m = group::isotropy_algebra(action, m, policy)?.basis;
    if g_mu.ncols() == 0 {
        return Ok(Mat::zeros(d, 0));
    }
    if g_m.ncols() == 0 {
        return Ok(g_mu);
    }
    let c = g_m.transpose() * b * &g_mu;
    let (null, _) = linalg::null_space(&c, c.amax(), policy, "velocity space")?;
    if null.ncols() == 0 {
        return Ok(Mat::zeros(d, 0));
    }
    let m_basis = &g_mu * null;
    let (q, _) = linalg::range_basis(&m_basis, 1.0, policy, "velocity space basis")?;
    Ok(q)
}

/// The unique `eta` in the complement of `g_m` in `g_mu` with
/// `d(h - <Phi, eta>)(m) = 0`, and the residual reached.
pub fn orthogonal_velocity(
    oracle: &dyn HamiltonianOracle,
    action: &GroupAction,
    map: &MomentMap,
    m: &Vector,
    tol: &Tolerances,
) -> Result<(Vector, f64)> {
    let b = if action.dim() == 0 {
        Mat::zeros(0, 0)
    } else {
        group::invariant_inner_product(action, 0)?
    };
    orthogonal_velocity_in(oracle, action, map, m, &b, tol)
}

/// As [`orthogonal_velocity`] with the inner product `b` on the algebra.
pub fn orthogonal_velocity_in(
    oracle: &dyn HamiltonianOracle,
    action: &GroupAction,
    map: &MomentMap,
    m: &Vector,
    b: &Mat,
    tol: &Tolerances,
) -> Result<(Vector, f64)> {
    action.space().check_vector(m, "point")?;
    let grad = oracle.gradient(m);
    let gate = tol.releq * (1.0 + grad.norm());
    let d = action.dim();
    if d == 0 {
        let r = grad.norm();
        if r > gate {
            return Err(Error::NotRelEq {
                residual: r,
                threshold: gate,
            });
        }
        return Ok((Vector::zeros(0), r));
    }
    let dt = map.differential(m).transpose();
    let full = linalg::lstsq(&dt, &grad, 1e-12);
    let best = (&dt * &full - &grad).norm();
    if best > gate {
        return Err(Error::NotRelEq {
            residual: best,
            threshold: gate,
        });
    }
    let basis = velocity_space_in(action, map, m, b, tol)?;
    if basis.ncols() == 0 {
        let r = grad.norm();
        if r > gate {
            return Err(Error::NotRelEq {
                residual: r,
                threshold: gate,
            });
        }
        return Ok((Vector::zeros(d), r));
    }
    let coeffs = linalg::lstsq(&(&dt * &basis), &grad, 1e-12);
    let eta = &basis * coeffs;
    let r = (&dt * &eta - &grad).norm();
    if r > gate {
        return Err(Error::NotRelEq {
            residual: r,
            threshold: gate,
        });
    }
    Ok((eta, r))
}

/// Kernel of `dPhi(m)` and the `G_mu`-orbit tangent space at `m`.
pub fn slice_data(
    action: &GroupAction,
    map: &MomentMap,
    m: &Vector,
    mu: &MomentValue,
    tol: &Tolerances,
) -> Result<SliceData> {
    action.space().check_vector(m, "point")?;
    let policy = tol.rank_policy();
    let dim = action.space().dim();
    let dphi = map.differential(m);
    let qnorm = map.components().iter().fold(0.0_f64, |a, q| a.max(linalg::norm2(q)));
    let (kernel_basis, kernel_rank) = if dphi.nrows() == 0 {
        (
            Mat::identity(dim, dim),
            RankInfo {
                singular_values: vec![],
                rank: 0,
                threshold: 0.0,
                gap_ratio: None,
            },
        )
    } else {
        linalg::null_space(&dphi, 2.0 * qnorm * m.norm(), policy, "ker dPhi(m)")?
    };
    let (orbit_tangent_basis, orbit_rank) = if action.dim() == 0 {
        (
            Mat::zeros(dim, 0),
            RankInfo {
                singular_values: vec![],
                rank: 0,
                threshold: 0.0,
                gap_ratio: None,
            },
        )
    } else {
        let g_mu = group::isotropy_algebra_of_momentum(action, mu, policy)?.basis;
        let t = action.orbit_tangent_matrix(m) * g_mu;
        let gnorm = action.generators().iter().fold(0.0_f64, |a, g| a.max(linalg::norm2(g)));
        linalg::range_basis(&t, gnorm * m.norm(), policy, "orbit tangent")?
    };
    let containment_residual = if orbit_tangent_basis.ncols() == 0 || kernel_basis.ncols() == 0 {
        if orbit_tangent_basis.ncols() == 0 {
            0.0
        } else {
            1.0
        }
    } else {
        let p = linalg::projector(&kernel_basis);
        (&orbit_tangent_basis - p * &orbit_tangent_basis).amax()
    };
    let slice_dim = kernel_basis.ncols().saturating_sub(orbit_tangent_basis.ncols());
    Ok(SliceData {
        kernel_basis,
        orbit_tangent_basis,
        slice_dim,
        kernel_rank,
        orbit_rank,
        containment_residual,
    })
}

/// Hessian of `h - <Phi, eta>` at `m` restricted to `ker dPhi(m)`, and the
/// resulting verdict: positive semidefinite of rank equal to the slice
/// dimension, semidefinite of lower rank, or indefinite.
pub fn slice_hessian_test(
    oracle: &dyn HamiltonianOracle,
    action: &GroupAction,
    map: &MomentMap,
    m: &Vector,
    tol: &Tolerances,
) -> Result<RelEqReport> {
    let (eta, residual) = orthogonal_velocity(oracle, action, map, m, tol)?;
    let mu = map.value(m);
    let slice = slice_data(action, map, m, &mu, tol)?;
    let h = oracle.hessian(m) - 2.0 * map.pairing_matrix(eta.as_slice());
    let k = &slice.kernel_basis;
    let restricted = k.transpose() * &h * k;
    let (vals, _) = linalg::sym_eigen(&restricted);
    let radius = vals.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let zero_threshold = tol.hessian_zero * radius;
    let negatives = vals.iter().filter(|&&v| v < -zero_threshold).count();
    let positive_count = vals.iter().filter(|&&v| v > zero_threshold).count();
    let t = &slice.orbit_tangent_basis;
    let orbit_tangent_residual = if t.ncols() == 0 {
        0.0
    } else {
        (t.transpose() * &h * t).amax()
    };
    let verdict = if negatives > 0 {
        Verdict::Indefinite
    } else if positive_count == slice.slice_dim {
        Verdict::PositiveDefiniteSlice
    } else {
        Verdict::DegenerateRank
    };
    Ok(RelEqReport {
        point: m.iter().copied().collect(),
        mu,
        eta: eta.iter().copied().collect(),
        residual,
        hessian_eigenvalues: vals,
        positive_count,
        zero_threshold,
        orbit_tangent_residual,
        slice: Some(slice),
        verdict,
    })
}
