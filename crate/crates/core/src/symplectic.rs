//! Linear symplectic algebra on `R^{2n}`.
//!
//! Conventions used throughout the crate:
//!
//! * coordinates are `x = (x_1..x_n, y_1..y_n)` with `z_k = x_k + i y_k`;
//! * the pairing is `omega(u, v) = u^T J v` with `J = [[0, I], [-I, 0]]`;
//! * a quadratic form `Q` stands for the Hamiltonian `q(x) = x^T Q x`
//!   (no factor one half), so its Hamiltonian vector field is
//!   `X_q(x) = J grad q = 2 J Q x`;
//! * Williamson frequencies are the angular frequencies of that linear flow,
//!   i.e. the moduli of the (purely imaginary) eigenvalues of `xi = 2 J Q`.
//!   In normal-form coordinates `S^T Q S = diag(w/2, w/2)`, so
//!   `q = sum_j (w_j / 2) |z_j|^2` and each `z_j` rotates as `exp(-i w_j t)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat, Vector};

/// Phase space `R^{2n}` with its standard symplectic pairing.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticSpace {
    n: usize,
    j: Mat,
}

impl SymplecticSpace {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("half-dimension must be positive".into()));
        }
        Ok(Self { n, j: standard_j(n) })
    }

    /// Half-dimension `n`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Real dimension `2n`.
    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn j(&self) -> &Mat {
        &self.j
    }

    pub fn omega(&self, u: &Vector, v: &Vector) -> f64 {
        u.dot(&(&self.j * v))
    }

    /// Hamiltonian vector field `J grad h` for a given gradient.
    pub fn hamiltonian_vector(&self, grad: &Vector) -> Vector {
        &self.j * grad
    }

    /// `|| M^T J M - J ||_max`.
    pub fn symplecticity_residual(&self, m: &Mat) -> f64 {
        (m.transpose() * &self.j * m - &self.j).amax()
    }

    pub(crate) fn check_vector(&self, v: &Vector, what: &str) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{what} has length {}, expected {}",
                v.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    pub(crate) fn check_square(&self, m: &Mat, what: &str) -> Result<()> {
        if m.nrows() != self.dim() || m.ncols() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{what} is {}x{}, expected {}x{}",
                m.nrows(),
                m.ncols(),
                self.dim(),
                self.dim()
            )));
        }
        Ok(())
    }
}

/// `[[0, I], [-I, 0]]` of size `2n`.
pub fn standard_j(n: usize) -> Mat {
    let mut j = Mat::zeros(2 * n, 2 * n);
    for k in 0..n {
        j[(k, n + k)] = 1.0;
        j[(n + k, k)] = -1.0;
    }
    j
}

/// Symmetric matrix `Q` representing `q(x) = x^T Q x`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    q: Mat,
}

impl QuadraticForm {
    /// Accepts matrices symmetric up to roundoff and stores the symmetric part.
    pub fn new(q: Mat) -> Result<Self> {
        if q.nrows() != q.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "quadratic form is {}x{}",
                q.nrows(),
                q.ncols()
            )));
        }
        let scale = q.amax().max(1.0);
        let asym = linalg::asymmetry(&q);
        if asym > 1e-12 * scale {
            return Err(Error::InvalidInput(format!(
                "quadratic form is not symmetric (asymmetry {asym:.3e})"
            )));
        }
        Ok(Self {
            q: 0.5 * (&q + q.transpose()),
        })
    }

    pub fn matrix(&self) -> &Mat {
        &self.q
    }

    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    pub fn value(&self, x: &Vector) -> f64 {
        x.dot(&(&self.q * x))
    }

    pub fn gradient(&self, x: &Vector) -> Vector {
        2.0 * (&self.q * x)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::sym_eigen(&self.q).0
    }

    /// Positive definiteness with a relative tolerance on the smallest eigenvalue.
    pub fn is_positive_definite(&self, rel_tol: f64) -> bool {
        let ev = self.eigenvalues();
        let scale = ev.iter().fold(0.0_f64, |m, e| m.max(e.abs()));
        ev.first().is_some_and(|&e| e > rel_tol * scale)
    }

    /// Definite of either sign.
    pub fn is_definite(&self, rel_tol: f64) -> bool {
        let ev = self.eigenvalues();
        let scale = ev.iter().fold(0.0_f64, |m, e| m.max(e.abs()));
        match (ev.first(), ev.last()) {
            (Some(&lo), Some(&hi)) => lo > rel_tol * scale || hi < -rel_tol * scale,
            _ => false,
        }
    }
}

/// Matrix `xi` of the linear Hamiltonian vector field `X_q(x) = xi x`.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianMatrix {
    xi: Mat,
}

impl HamiltonianMatrix {
    pub fn matrix(&self) -> &Mat {
        &self.xi
    }

    /// `|| J xi - (J xi)^T ||_max`; zero for elements of `sp(V, omega)`.
    pub fn asymmetry(&self, space: &SymplecticSpace) -> f64 {
        linalg::asymmetry(&(space.j() * &self.xi))
    }
}

/// Linear vector field of the quadratic Hamiltonian `x^T Q x`: `xi = 2 J Q`.
pub fn hamiltonian_matrix(space: &SymplecticSpace, form: &QuadraticForm) -> Result<HamiltonianMatrix> {
    space.check_square(form.matrix(), "quadratic form")?;
    Ok(HamiltonianMatrix {
        xi: 2.0 * (space.j() * form.matrix()),
    })
}

/// Symplectic normal form of a positive definite quadratic Hamiltonian.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WilliamsonData {
    /// Symplectic change of basis, columns ordered `(e_1..e_n, f_1..f_n)`.
    #[serde(serialize_with = "crate::report::ser_mat")]
    pub s: Mat,
    /// Angular frequencies sorted ascending.
    pub freqs: Vec<f64>,
}

impl WilliamsonData {
    /// `|| S^T J S - J ||_max`.
    pub fn symplectic_residual(&self, space: &SymplecticSpace) -> f64 {
        space.symplecticity_residual(&self.s)
    }

    /// Largest deviation of `S^T Q S` from `diag(w/2, w/2)`.
    pub fn diagonal_residual(&self, form: &QuadraticForm) -> f64 {
        let n = self.freqs.len();
        let mut d = self.s.transpose() * form.matrix() * &self.s;
        for (k, w) in self.freqs.iter().enumerate() {
            d[(k, k)] -= 0.5 * w;
            d[(n + k, n + k)] -= 0.5 * w;
        }
        d.amax()
    }
}

/// Williamson normal form via Cholesky of `Q` followed by an orthogonal
/// block-diagonalisation of the skew matrix `L^T J L`.
///
/// `rel_tol` (default `1e-9`) bounds the smallest admissible eigenvalue of
/// `Q` relative to its largest one.
pub fn williamson(space: &SymplecticSpace, form: &QuadraticForm, rel_tol: Option<f64>) -> Result<WilliamsonData> {
    space.check_square(form.matrix(), "quadratic form")?;
    let tol = rel_tol.unwrap_or(1e-9);
    let n = space.n();
    let dim = space.dim();
    let ev = form.eigenvalues();
    let scale = ev.iter().fold(0.0_f64, |m, e| m.max(e.abs()));
    let min_ev = ev[0];
    if min_ev <= tol * scale || scale == 0.0 {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: min_ev });
    }
    let chol = form
        .matrix()
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite { min_eigenvalue: min_ev })?;
    let l = chol.l();
    let a = l.transpose() * space.j() * &l;
    let (_, vecs) = linalg::sym_eigen(&(a.transpose() * &a));

    // Pair each eigenvector u with v = -A u / |A u|; eigenvalues of A^T A
    // come in equal pairs, and the pairing stays orthonormal inside
    // degenerate clusters because A is skew.
    let mut chosen: Vec<(f64, Vector, Vector)> = Vec::with_capacity(n);
    let mut used: Vec<Vector> = Vec::with_capacity(dim);
    for idx in 0..dim {
        if chosen.len() == n {
            break;
        }
        let mut u = vecs.column(idx).into_owned();
        for _ in 0..2 {
            for w in &used {
                let c = w.dot(&u);
                u -= c * w;
            }
        }
        let nu = u.norm();
        if nu < 0.5 {
            continue;
        }
        u /= nu;
        let au = &a * &u;
        let d = au.norm();
        let v = -au / d;
        used.push(u.clone());
        used.push(v.clone());
        chosen.push((d, u, v));
    }
    if chosen.len() != n {
        return Err(Error::NotConverged(
            "Williamson pairing failed to produce n symplectic pairs".into(),
        ));
    }
    chosen.sort_by(|a, b| a.0.total_cmp(&b.0));
    let lt_inv = l
        .transpose()
        .try_inverse()
        .ok_or(Error::NotPositiveDefinite { min_eigenvalue: min_ev })?;
    let mut s = Mat::zeros(dim, dim);
    let mut freqs = Vec::with_capacity(n);
    for (k, (d, u, v)) in chosen.iter().enumerate() {
        let r = d.sqrt();
        s.set_column(k, &(&lt_inv * u * r));
        s.set_column(n + k, &(&lt_inv * v * r));
        freqs.push(2.0 * d);
    }
    Ok(WilliamsonData { s, freqs })
}

/// Orthonormal basis (columns) of `{v : omega(v, b) = 0 for all b in basis}`.
pub fn symplectic_complement(space: &SymplecticSpace, basis: &[Vector]) -> Result<Mat> {
    for b in basis {
        space.check_vector(b, "basis vector")?;
    }
    let dim = space.dim();
    if basis.is_empty() {
        return Ok(Mat::identity(dim, dim));
    }
    // omega(v, b) = v^T (J b), so the complement is span(J B)^perp.
    let jb = space.j() * linalg::columns(dim, basis);
    let scale = jb.amax();
    let (range, _) = linalg::range_basis(&jb, scale, linalg::RankPolicy::default(), "symplectic complement")?;
    Ok(linalg::orthogonal_complement(&range, dim))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> Mat {
        Mat::from_diagonal(&Vector::from_row_slice(v))
    }

    #[test]
    fn oscillator_generator_is_rotation() {
        let sp = SymplecticSpace::new(1).unwrap();
        let q = QuadraticForm::new(0.5 * Mat::identity(2, 2)).unwrap();
        let xi = hamiltonian_matrix(&sp, &q).unwrap();
        assert_eq!(xi.matrix(), &Mat::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]));
    }

    #[test]
    fn anisotropic_generator_eigenvalues() {
        // xi = [[0, 4], [-1, 0]] so xi^2 = -4 I: eigenvalues +-2i.
        let sp = SymplecticSpace::new(1).unwrap();
        let q = QuadraticForm::new(diag(&[0.5, 2.0])).unwrap();
        let xi = hamiltonian_matrix(&sp, &q).unwrap();
        let sq = xi.matrix() * xi.matrix();
        assert!((sq + 4.0 * Mat::identity(2, 2)).amax() < 1e-15);
        // J^T xi = 2Q holds exactly.
        assert_eq!(sp.j().transpose() * xi.matrix(), 2.0 * q.matrix());
    }

    #[test]
    fn zero_form_gives_zero_field() {
        let sp = SymplecticSpace::new(2).unwrap();
        let q = QuadraticForm::new(Mat::zeros(4, 4)).unwrap();
        assert_eq!(hamiltonian_matrix(&sp, &q).unwrap().matrix(), &Mat::zeros(4, 4));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let sp = SymplecticSpace::new(2).unwrap();
        let q = QuadraticForm::new(Mat::identity(2, 2)).unwrap();
        assert!(matches!(hamiltonian_matrix(&sp, &q), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn williamson_of_canonical_oscillator() {
        let sp = SymplecticSpace::new(1).unwrap();
        let q = QuadraticForm::new(0.5 * Mat::identity(2, 2)).unwrap();
        let w = williamson(&sp, &q, None).unwrap();
        assert!((w.freqs[0] - 1.0).abs() < 1e-14);
        assert!((&w.s - Mat::identity(2, 2)).amax() < 1e-14);
    }

    #[test]
    fn williamson_rejects_indefinite() {
        let sp = SymplecticSpace::new(1).unwrap();
        let q = QuadraticForm::new(diag(&[1.0, -1.0])).unwrap();
        assert!(matches!(
            williamson(&sp, &q, None),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn williamson_handles_degenerate_frequencies() {
        let sp = SymplecticSpace::new(3).unwrap();
        let q = QuadraticForm::new(Mat::identity(6, 6)).unwrap();
        let w = williamson(&sp, &q, None).unwrap();
        assert!(w.freqs.iter().all(|f| (f - 2.0).abs() < 1e-12));
        assert!(w.symplectic_residual(&sp) < 1e-12);
        assert!(w.diagonal_residual(&q) < 1e-12);
    }

    #[test]
    fn complement_edge_cases() {
        let sp = SymplecticSpace::new(2).unwrap();
        let full: Vec<Vector> = (0..4).map(|i| Mat::identity(4, 4).column(i).into_owned()).collect();
        assert_eq!(symplectic_complement(&sp, &full).unwrap().ncols(), 0);
        assert_eq!(symplectic_complement(&sp, &[]).unwrap().ncols(), 4);
        let e1 = full[0].clone();
        let c = symplectic_complement(&sp, std::slice::from_ref(&e1)).unwrap();
        assert_eq!(c.ncols(), 3);
        // e1 is isotropic, so it lies in its own complement.
        let resid = &e1 - &c * (c.transpose() * &e1);
        assert!(resid.norm() < 1e-12);
    }
}
