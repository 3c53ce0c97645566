//! Dense linear-algebra helpers shared by every module.
//!
//! All rank decisions go through [`decide_rank`], which compares singular
//! values against a scale-aware zero threshold and reports the gap between
//! the last kept and the first discarded value.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use serde::Serialize;

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Thresholds used for numerical rank decisions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankPolicy {
    /// Singular values at or below `zero_tol * scale` count as zero.
    pub zero_tol: f64,
    /// Required ratio between the first discarded and last kept value.
    pub gap_ratio: f64,
}

impl Default for RankPolicy {
    fn default() -> Self {
        Self {
            zero_tol: 1e-9,
            gap_ratio: 1e-6,
        }
    }
}

/// Outcome of a rank decision, kept for reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankInfo {
    pub singular_values: Vec<f64>,
    pub rank: usize,
    pub threshold: f64,
    /// `s[rank] / s[rank-1]` when both exist.
    pub gap_ratio: Option<f64>,
}

/// Decide the numerical rank of a descending list of singular values.
pub fn decide_rank(singular_values: &[f64], scale: f64, policy: RankPolicy, context: &str) -> Result<RankInfo> {
    let smax = singular_values.first().copied().unwrap_or(0.0);
    let threshold = policy.zero_tol * scale.max(smax);
    let rank = singular_values.iter().filter(|&&s| s > threshold).count();
    let gap_ratio = if rank > 0 && rank < singular_values.len() {
        Some(singular_values[rank] / singular_values[rank - 1])
    } else {
        None
    };
    if let Some(g) = gap_ratio {
        if g > policy.gap_ratio {
            return Err(Error::IllConditioned {
                context: context.to_string(),
                gap_ratio: g,
                singular_values: singular_values.to_vec(),
            });
        }
    }
    Ok(RankInfo {
        singular_values: singular_values.to_vec(),
        rank,
        threshold,
        gap_ratio,
    })
}

/// SVD with singular values sorted in descending order.
///
/// Returns `(U, sigma, V)` where `U` is `rows x k`, `V` is `cols x k` and
/// `k = min(rows, cols)`.
pub fn sorted_svd(a: &Mat) -> (Mat, Vec<f64>, Mat) {
    let (r, c) = a.shape();
    let k = r.min(c);
    if k == 0 {
        return (Mat::zeros(r, 0), Vec::new(), Mat::zeros(c, 0));
    }
    let svd = SVD::new(a.clone(), true, true);
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let mut us = Mat::zeros(r, k);
    let mut vs = Mat::zeros(c, k);
    let mut s = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        us.set_column(dst, &u.column(src));
        vs.set_column(dst, &vt.row(src).transpose());
        s.push(svd.singular_values[src]);
    }
    (us, s, vs)
}

/// Orthonormal basis (as columns) of the null space of `a`.
pub fn null_space(a: &Mat, scale: f64, policy: RankPolicy, context: &str) -> Result<(Mat, RankInfo)> {
    let (r, c) = a.shape();
    if c == 0 {
        return Ok((
            Mat::zeros(0, 0),
            RankInfo {
                singular_values: vec![],
                rank: 0,
                threshold: 0.0,
                gap_ratio: None,
            },
        ));
    }
    // Pad with zero rows so the SVD returns a full right basis.
    let padded = if r < c {
        let mut p = Mat::zeros(c, c);
        p.view_mut((0, 0), (r, c)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let (_, s, v) = sorted_svd(&padded);
    let info = decide_rank(&s, scale, policy, context)?;
    let basis = v.columns(info.rank, c - info.rank).into_owned();
    Ok((basis, info))
}

/// Orthonormal basis (as columns) of the column space of `a`.
pub fn range_basis(a: &Mat, scale: f64, policy: RankPolicy, context: &str) -> Result<(Mat, RankInfo)> {
    let (r, c) = a.shape();
    if c == 0 || r == 0 {
        return Ok((
            Mat::zeros(r, 0),
            RankInfo {
                singular_values: vec![],
                rank: 0,
                threshold: 0.0,
                gap_ratio: None,
            },
        ));
    }
    let (u, s, _) = sorted_svd(a);
    let info = decide_rank(&s, scale, policy, context)?;
    Ok((u.columns(0, info.rank).into_owned(), info))
}

/// Orthonormal basis of the orthogonal complement of the span of the
/// orthonormal columns of `q` inside `R^dim`.
pub fn orthogonal_complement(q: &Mat, dim: usize) -> Mat {
    if q.ncols() == 0 {
        return Mat::identity(dim, dim);
    }
    let proj = Mat::identity(dim, dim) - q * q.transpose();
    let eig = SymmetricEigen::new(proj);
    let cols: Vec<Vector> = (0..dim)
        .filter(|&i| eig.eigenvalues[i] > 0.5)
        .map(|i| eig.eigenvectors.column(i).into_owned())
        .collect();
    if cols.is_empty() {
        Mat::zeros(dim, 0)
    } else {
        Mat::from_columns(&cols)
    }
}

/// Orthogonal projector onto the span of orthonormal columns.
pub fn projector(q: &Mat) -> Mat {
    q * q.transpose()
}

/// Symmetric eigen-decomposition with eigenvalues sorted ascending.
pub fn sym_eigen(a: &Mat) -> (Vec<f64>, Mat) {
    let n = a.nrows();
    let sym = 0.5 * (a + a.transpose());
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let mut vecs = Mat::zeros(n, n);
    let mut vals = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
        vals.push(eig.eigenvalues[src]);
    }
    (vals, vecs)
}

/// Solve `a x = b` in the least-squares sense with a minimum-norm answer,
/// discarding singular values below `rcond * sigma_max`.
pub fn lstsq(a: &Mat, b: &Vector, rcond: f64) -> Vector {
    let c = a.ncols();
    if c == 0 {
        return Vector::zeros(0);
    }
    let (u, s, v) = sorted_svd(a);
    let smax = s.first().copied().unwrap_or(0.0);
    let mut x = Vector::zeros(c);
    for (i, &si) in s.iter().enumerate() {
        if si > rcond * smax && si > 0.0 {
            let coef = u.column(i).dot(b) / si;
            x += coef * v.column(i);
        }
    }
    x
}

/// Largest absolute entry of `a - a^T`.
pub fn asymmetry(a: &Mat) -> f64 {
    (a - a.transpose()).amax()
}

/// Spectral norm.
pub fn norm2(a: &Mat) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    sorted_svd(a).1.first().copied().unwrap_or(0.0)
}

/// Stack column vectors into a matrix with `rows` rows (works for an empty list).
pub fn columns(rows: usize, cols: &[Vector]) -> Mat {
    if cols.is_empty() {
        Mat::zeros(rows, 0)
    } else {
        Mat::from_columns(cols)
    }
}

/// Row-major nested vectors, used for serialization.
pub fn to_rows(a: &Mat) -> Vec<Vec<f64>> {
    (0..a.nrows()).map(|i| a.row(i).iter().copied().collect()).collect()
}

/// Matrix exponential.
pub fn expm(a: &Mat) -> Mat {
    if a.nrows() == 0 {
        return a.clone();
    }
    a.clone().exp()
}

/// Derivative of `t -> exp(a + t b)` at `t = 0`, read off the upper-right
/// block of the exponential of `[[a, b], [0, a]]`.
pub fn expm_directional(a: &Mat, b: &Mat) -> Mat {
    let n = a.nrows();
    let mut big = Mat::zeros(2 * n, 2 * n);
    big.view_mut((0, 0), (n, n)).copy_from(a);
    big.view_mut((0, n), (n, n)).copy_from(b);
    big.view_mut((n, n), (n, n)).copy_from(a);
    expm(&big).view((0, n), (n, n)).into_owned()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_space_of_wide_matrix() {
        let a = Mat::from_row_slice(1, 3, &[1.0, 0.0, 0.0]);
        let (b, info) = null_space(&a, 1.0, RankPolicy::default(), "t").unwrap();
        assert_eq!(info.rank, 1);
        assert_eq!(b.ncols(), 2);
        assert!((a * &b).amax() < 1e-14);
    }

    #[test]
    fn ambiguous_gap_is_reported() {
        let err = decide_rank(&[1.0, 2e-9, 5e-10], 1.0, RankPolicy::default(), "gap").unwrap_err();
        assert!(matches!(err, Error::IllConditioned { .. }));
    }

    #[test]
    fn zero_matrix_has_rank_zero() {
        let info = decide_rank(&[0.0, 0.0], 0.0, RankPolicy::default(), "z").unwrap();
        assert_eq!(info.rank, 0);
    }

    #[test]
    fn directional_exponential_matches_difference() {
        let a = Mat::from_row_slice(2, 2, &[0.0, 1.3, -0.7, 0.1]);
        let b = Mat::from_row_slice(2, 2, &[0.2, -0.5, 0.4, 0.0]);
        let d = expm_directional(&a, &b);
        let h = 1e-6;
        let fd = (expm(&(&a + h * &b)) - expm(&(&a - h * &b))) / (2.0 * h);
        assert!((d - fd).amax() < 1e-8);
    }

    #[test]
    fn lstsq_min_norm() {
        let a = Mat::from_row_slice(1, 2, &[1.0, 1.0]);
        let x = lstsq(&a, &Vector::from_vec(vec![2.0]), 1e-12);
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
    }
}
