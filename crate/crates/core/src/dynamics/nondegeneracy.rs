//! Weak nondegeneracy of a periodic orbit: the space of tangent vectors to
//! the energy level (and momentum level) with `x - P x` a multiple of
//! `X_h(c(0))`, where `P = g^{-1} M` is the relative monodromy.

use serde::Serialize;

use super::shooting::RpoRecord;
use crate::error::{Error, Result};
use crate::group::{GroupAction, MomentMap};
use crate::hamiltonian::HamiltonianOracle;
use crate::linalg::{self, Mat, RankInfo, RankPolicy};
use crate::symplectic::standard_j;
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, Serialize)]
pub struct Nondegeneracy {
    pub dim: usize,
    pub expected: usize,
    pub weakly_nondegenerate: bool,
    pub rank: RankInfo,
}

/// Dimension of `{x in ker dh ∩ ker dPhi : (I - P) x in span X_h}` and the
/// verdict against `expected` (default: one plus the dimension of the group
/// orbit through the point).
pub fn weak_nondegeneracy(
    record: &RpoRecord,
    oracle: &dyn HamiltonianOracle,
    action: &GroupAction,
    map: &MomentMap,
    expected: Option<usize>,
    tol: &Tolerances,
) -> Result<Nondegeneracy> {
    let x = record.point();
    let dim = x.len();
    let grad = oracle.gradient(&x);
    let field = standard_j(dim / 2) * &grad;
    let fnorm = field.norm();
    if fnorm == 0.0 {
        return Err(Error::InvalidInput(
            "periodic orbit passes through an equilibrium".into(),
        ));
    }
    let mut constraints = Mat::zeros(1 + map.dim(), dim);
    constraints.set_row(0, &(&grad / grad.norm()).transpose());
    let dphi = map.differential(&x);
    for i in 0..map.dim() {
        constraints.set_row(1 + i, &dphi.row(i));
    }
    let policy = tol.rank_policy();
    let (tangent, _) = linalg::null_space(&constraints, constraints.amax(), policy, "tangent space")?;
    let g = record.group_element(action);
    let g_inv = g.clone().try_inverse().unwrap_or_else(|| g.transpose());
    let p = g_inv * &record.monodromy;
    let defect = (Mat::identity(dim, dim) - p) * &tangent;
    let mut bordered = Mat::zeros(dim, tangent.ncols() + 1);
    bordered.view_mut((0, 0), (dim, tangent.ncols())).copy_from(&defect);
    bordered.set_column(tangent.ncols(), &(&field / fnorm));
    let (_, s, _) = linalg::sorted_svd(&bordered);
    let nondeg_policy = RankPolicy {
        zero_tol: tol.nondeg_zero,
        gap_ratio: tol.rank_gap.max(1e-3),
    };
    let rank = linalg::decide_rank(&s, 1.0, nondeg_policy, "weak nondegeneracy").map_err(|e| match e {
        Error::IllConditioned { context, gap_ratio, .. } => Error::RankAmbiguous { context, gap_ratio },
        other => other,
    })?;
    let n_dim = bordered.ncols() - rank.rank;
    let orbit_dim = if action.dim() == 0 {
        0
    } else {
        let t = action.orbit_tangent_matrix(&x);
        let scale = x.norm() * action.generators().iter().fold(0.0_f64, |a, g| a.max(linalg::norm2(g)));
        linalg::range_basis(&t, scale, policy, "orbit tangent")?.1.rank
    };
    let expected = expected.unwrap_or(1 + orbit_dim);
    Ok(Nondegeneracy {
        dim: n_dim,
        expected,
        weakly_nondegenerate: n_dim == expected,
        rank,
    })
}
