//! Compact groups acting linearly and symplectically on `R^{2n}`, their
//! homogeneous moment maps and isotropy algebras.
//!
//! Moment-map normalisation: for a generator `xi` the component is
//! `<Phi(v), xi> = 1/2 omega(xi v, v) = v^T Q_xi v` with
//! `Q_xi = -1/2 J xi`, so that the Hamiltonian vector field of the component
//! is exactly `v -> xi v`.
//!
//! Torus actions are given by integer weights, one weight vector per complex
//! coordinate. The generator `i` acts on `z_k` by `exp(-i w_{k,i} theta)`,
//! which gives `Phi_i(z) = 1/2 sum_k w_{k,i} |z_k|^2`. With all weights equal
//! to one this is the central circle and `Phi = |z|^2 / 2`, i.e. one half of
//! the usual `||z||^2` normalisation.
//!
//! Coadjoint convention: `Ad^dagger(g) mu = Ad(g^{-1})^T mu` in the dual
//! basis, with `Ad(g)` the matrix of `xi -> g xi g^{-1}` in the generator
//! basis. Equivariance then reads `Phi(g v) = Ad^dagger(g) Phi(v)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat, RankInfo, RankPolicy, Vector};
use crate::symplectic::SymplecticSpace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupKind {
    Torus,
    Finite,
    General,
}

/// A compact group acting on a symplectic vector space.
#[derive(Debug, Clone)]
pub struct GroupAction {
    space: SymplecticSpace,
    kind: GroupKind,
    generators: Vec<Mat>,
    /// `c[(a * d + b) * d + k]` with `[xi_a, xi_b] = sum_k c_ab^k xi_k`.
    structure: Vec<f64>,
    finite_part: Vec<Mat>,
    weights: Option<Vec<Vec<i64>>>,
}

/// A group element `exp(sum theta_i xi_i) * F_f`.
#[derive(Debug, Clone)]
pub struct GroupElement {
    pub theta: Vec<f64>,
    pub finite_index: Option<usize>,
    pub matrix: Mat,
}

/// Result of minimising `|| g . from - to ||` over the group.
#[derive(Debug, Clone)]
pub struct Alignment {
    pub theta: Vec<f64>,
    pub finite_index: Option<usize>,
    pub residual: f64,
}

impl GroupAction {
    /// The trivial group, stored as a torus of rank zero.
    pub fn trivial(space: SymplecticSpace) -> Self {
        let n = space.n();
        Self {
            space,
            kind: GroupKind::Torus,
            generators: Vec::new(),
            structure: Vec::new(),
            finite_part: Vec::new(),
            weights: Some(vec![Vec::new(); n]),
        }
    }

    /// Torus of rank `d` acting diagonally; `weights[k]` is the weight
    /// vector (length `d`) of the complex coordinate `z_k`.
    pub fn torus(space: SymplecticSpace, weights: Vec<Vec<i64>>) -> Result<Self> {
        let n = space.n();
        if weights.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "torus weights list has {} rows, expected one per complex coordinate ({n})",
                weights.len()
            )));
        }
        let d = weights.first().map_or(0, |w| w.len());
        if weights.iter().any(|w| w.len() != d) {
            return Err(Error::DimensionMismatch(
                "torus weight vectors have different lengths".into(),
            ));
        }
        let generators = (0..d)
            .map(|i| {
                let mut xi = Mat::zeros(2 * n, 2 * n);
                for (k, w) in weights.iter().enumerate() {
                    xi[(k, n + k)] = w[i] as f64;
                    xi[(n + k, k)] = -(w[i] as f64);
                }
                xi
            })
            .collect();
        Ok(Self {
            space,
            kind: GroupKind::Torus,
            generators,
            structure: vec![0.0; d * d * d],
            finite_part: Vec::new(),
            weights: Some(weights),
        })
    }

    /// Finite group given by its elements; the identity is added if absent and
    /// closure under multiplication is checked.
    pub fn finite(space: SymplecticSpace, elements: Vec<Mat>) -> Result<Self> {
        let finite_part = close_finite_group(&space, elements)?;
        Ok(Self {
            space,
            kind: GroupKind::Finite,
            generators: Vec::new(),
            structure: Vec::new(),
            finite_part,
            weights: None,
        })
    }

    /// General compact group from Lie-algebra generators, optional structure
    /// constants (computed from the brackets when absent) and an optional
    /// finite part for disconnected groups.
    pub fn general(
        space: SymplecticSpace,
        generators: Vec<Mat>,
        structure: Option<Vec<f64>>,
        finite_part: Vec<Mat>,
    ) -> Result<Self> {
        for g in &generators {
            space.check_square(g, "generator")?;
        }
        check_generators(&space, &generators)?;
        let d = generators.len();
        let structure = match structure {
            Some(c) => {
                if c.len() != d * d * d {
                    return Err(Error::DimensionMismatch(format!(
                        "structure constants have {} entries, expected {}",
                        c.len(),
                        d * d * d
                    )));
                }
                c
            }
            None => bracket_coordinates(&generators)?,
        };
        let finite_part = if finite_part.is_empty() {
            Vec::new()
        } else {
            close_finite_group(&space, finite_part)?
        };
        let action = Self {
            space,
            kind: GroupKind::General,
            generators,
            structure,
            finite_part,
            weights: None,
        };
        action.check_structure()?;
        Ok(action)
    }

    pub fn space(&self) -> &SymplecticSpace {
        &self.space
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    /// Dimension `d` of the Lie algebra.
    pub fn dim(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[Mat] {
        &self.generators
    }

    pub fn finite_part(&self) -> &[Mat] {
        &self.finite_part
    }

    pub fn weights(&self) -> Option<&[Vec<i64>]> {
        self.weights.as_deref()
    }

    /// `c_ab^k`.
    pub fn structure_constant(&self, a: usize, b: usize, k: usize) -> f64 {
        let d = self.dim();
        self.structure[(a * d + b) * d + k]
    }

    pub fn is_abelian(&self) -> bool {
        self.structure.iter().all(|c| c.abs() < 1e-12)
    }

    /// Matrix of `ad_{xi_k}` in the generator basis: `(ad_k)_{j a} = c_ka^j`.
    pub fn ad_matrix(&self, k: usize) -> Mat {
        let d = self.dim();
        Mat::from_fn(d, d, |j, a| self.structure_constant(k, a, j))
    }

    /// `sum_i theta_i xi_i`.
    pub fn algebra_element(&self, theta: &[f64]) -> Mat {
        let dim = self.space.dim();
        theta
            .iter()
            .zip(&self.generators)
            .fold(Mat::zeros(dim, dim), |acc, (t, g)| acc + *t * g)
    }

    /// `exp(sum theta_i xi_i) * F_f`.
    pub fn element(&self, theta: &[f64], finite_index: Option<usize>) -> Mat {
        let e = linalg::expm(&self.algebra_element(theta));
        match finite_index {
            Some(f) => e * &self.finite_part[f],
            None => e,
        }
    }

    /// Partial derivatives of [`Self::element`] with respect to each `theta_i`.
    pub fn element_derivatives(&self, theta: &[f64], finite_index: Option<usize>) -> Vec<Mat> {
        let a = self.algebra_element(theta);
        let commuting = self.is_abelian();
        let e = if commuting { Some(linalg::expm(&a)) } else { None };
        self.generators
            .iter()
            .map(|xi| {
                let d = match &e {
                    Some(e) => xi * e,
                    None => linalg::expm_directional(&a, xi),
                };
                match finite_index {
                    Some(f) => d * &self.finite_part[f],
                    None => d,
                }
            })
            .collect()
    }

    /// Columns `xi_i v`; spans the tangent space of the connected orbit at `v`.
    pub fn orbit_tangent_matrix(&self, v: &Vector) -> Mat {
        let cols: Vec<Vector> = self.generators.iter().map(|g| g * v).collect();
        linalg::columns(self.space.dim(), &cols)
    }

    /// Coordinates of `g xi_k g^{-1}` in the generator basis, and the largest
    /// least-squares residual of that projection.
    pub fn ad_coordinates(&self, g: &Mat) -> (Mat, f64) {
        let d = self.dim();
        if d == 0 {
            return (Mat::zeros(0, 0), 0.0);
        }
        let g_inv = g.clone().try_inverse().unwrap_or_else(|| g.transpose());
        let basis = Mat::from_columns(
            &self
                .generators
                .iter()
                .map(|x| Vector::from_column_slice(x.as_slice()))
                .collect::<Vec<_>>(),
        );
        let mut a = Mat::zeros(d, d);
        let mut worst = 0.0_f64;
        for (k, xi) in self.generators.iter().enumerate() {
            let conj = g * xi * &g_inv;
            let target = Vector::from_column_slice(conj.as_slice());
            let coords = linalg::lstsq(&basis, &target, 1e-12);
            let resid = (&basis * &coords - &target).norm() / target.norm().max(1e-300);
            worst = worst.max(resid);
            a.set_column(k, &coords);
        }
        (a, worst)
    }

    /// Random group element; torus angles are uniform on `[0, 2 pi)`.
    pub fn sample_element<R: Rng>(&self, rng: &mut R) -> GroupElement {
        let d = self.dim();
        let theta: Vec<f64> = match self.kind {
            GroupKind::Torus => (0..d).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect(),
            _ => (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect(),
        };
        let finite_index = if self.finite_part.is_empty() {
            None
        } else {
            Some(rng.random_range(0..self.finite_part.len()))
        };
        let matrix = self.element(&theta, finite_index);
        GroupElement {
            theta,
            finite_index,
            matrix,
        }
    }

    /// Minimise `|| g . from - to ||` over the group: grid (or random) search
    /// over the connected part, Gauss-Newton refinement, brute force over the
    /// finite part.
    pub fn align(&self, from: &Vector, to: &Vector) -> Alignment {
        let finite: Vec<Option<usize>> = if self.finite_part.is_empty() {
            vec![None]
        } else {
            (0..self.finite_part.len()).map(Some).collect()
        };
        let d = self.dim();
        let starts = self.alignment_starts();
        let mut best = Alignment {
            theta: vec![0.0; d],
            finite_index: finite[0],
            residual: f64::INFINITY,
        };
        for f in finite {
            if d == 0 {
                let r = (self.element(&[], f) * from - to).norm();
                if r < best.residual {
                    best = Alignment {
                        theta: vec![],
                        finite_index: f,
                        residual: r,
                    };
                }
                continue;
            }
            let mut scored: Vec<(f64, &Vec<f64>)> = starts
                .iter()
                .map(|t| ((self.element(t, f) * from - to).norm(), t))
                .collect();
            scored.sort_by(|a, b| a.0.total_cmp(&b.0));
            for (_, start) in scored.iter().take(3) {
                let (theta, r) = self.refine_alignment(start, f, from, to);
                if r < best.residual {
                    best = Alignment {
                        theta,
                        finite_index: f,
                        residual: r,
                    };
                }
            }
        }
        best
    }

    fn alignment_starts(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        if self.kind == GroupKind::Torus {
            let wmax = self
                .weights
                .as_ref()
                .map(|w| w.iter().flatten().fold(1, |m, x| m.max(x.abs())))
                .unwrap_or(1);
            let per_dim = (8 * wmax + 8) as usize;
            if per_dim.checked_pow(d as u32).is_some_and(|t| t <= 4096) {
                let mut out = vec![vec![]];
                for _ in 0..d {
                    let mut next = Vec::with_capacity(out.len() * per_dim);
                    for prefix in &out {
                        for j in 0..per_dim {
                            let mut p = prefix.clone();
                            p.push(std::f64::consts::TAU * j as f64 / per_dim as f64);
                            next.push(p);
                        }
                    }
                    out = next;
                }
                return out;
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_a11e);
        let mut out = vec![vec![0.0; d]];
        for _ in 0..512 {
            out.push(
                (0..d)
                    .map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
                    .collect(),
            );
        }
        out
    }

    fn refine_alignment(&self, start: &[f64], f: Option<usize>, from: &Vector, to: &Vector) -> (Vec<f64>, f64) {
        let mut theta = start.to_vec();
        let mut r = self.element(&theta, f) * from - to;
        let mut rn = r.norm();
        for _ in 0..40 {
            let derivs = self.element_derivatives(&theta, f);
            let cols: Vec<Vector> = derivs.iter().map(|dg| dg * from).collect();
            let jac = linalg::columns(from.len(), &cols);
            let step = linalg::lstsq(&jac, &(-&r), 1e-12);
            let mut accepted = false;
            let mut lambda = 1.0;
            for _ in 0..20 {
                let trial: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, s)| t + lambda * s).collect();
                let tr = self.element(&trial, f) * from - to;
                let tn = tr.norm();
                if tn < rn {
                    theta = trial;
                    r = tr;
                    let improvement = rn - tn;
                    rn = tn;
                    accepted = improvement > 1e-16 * (1.0 + to.norm());
                    break;
                }
                lambda *= 0.5;
            }
            if !accepted || step.norm() < 1e-15 {
                break;
            }
        }
        (theta, rn)
    }

    fn check_structure(&self) -> Result<()> {
        let d = self.dim();
        if d == 0 {
            return Ok(());
        }
        let scale = self.generators.iter().fold(0.0_f64, |m, g| m.max(g.amax())).max(1.0);
        for a in 0..d {
            for b in 0..d {
                let bracket = &self.generators[a] * &self.generators[b] - &self.generators[b] * &self.generators[a];
                let mut recon = bracket.clone();
                for k in 0..d {
                    recon -= self.structure_constant(a, b, k) * &self.generators[k];
                    let anti = self.structure_constant(a, b, k) + self.structure_constant(b, a, k);
                    if anti.abs() > 1e-9 {
                        return Err(Error::InvalidInput(format!(
                            "structure constants not antisymmetric at ({a},{b},{k})"
                        )));
                    }
                }
                if recon.amax() > 1e-8 * scale * scale {
                    return Err(Error::InvalidInput(format!(
                        "structure constants do not reproduce [xi_{a}, xi_{b}] (residual {:.3e})",
                        recon.amax()
                    )));
                }
            }
        }
        // Jacobi: [ad_a, ad_b] = sum_k c_ab^k ad_k.
        for a in 0..d {
            for b in 0..d {
                let lhs = self.ad_matrix(a) * self.ad_matrix(b) - self.ad_matrix(b) * self.ad_matrix(a);
                let mut rhs = Mat::zeros(d, d);
                for k in 0..d {
                    rhs += self.structure_constant(a, b, k) * self.ad_matrix(k);
                }
                if (lhs - rhs).amax() > 1e-8 {
                    return Err(Error::InvalidInput(
                        "structure constants violate the Jacobi identity".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

fn check_generators(space: &SymplecticSpace, generators: &[Mat]) -> Result<()> {
    for (i, g) in generators.iter().enumerate() {
        let jg = space.j() * g;
        let asym = linalg::asymmetry(&jg);
        if asym > 1e-10 * jg.amax().max(1.0) {
            return Err(Error::NonSymplecticGenerator {
                index: i,
                asymmetry: asym,
            });
        }
    }
    Ok(())
}

fn bracket_coordinates(generators: &[Mat]) -> Result<Vec<f64>> {
    let d = generators.len();
    if d == 0 {
        return Ok(Vec::new());
    }
    let basis = Mat::from_columns(
        &generators
            .iter()
            .map(|x| Vector::from_column_slice(x.as_slice()))
            .collect::<Vec<_>>(),
    );
    let mut c = vec![0.0; d * d * d];
    for a in 0..d {
        for b in 0..d {
            let br = &generators[a] * &generators[b] - &generators[b] * &generators[a];
            let coords = linalg::lstsq(&basis, &Vector::from_column_slice(br.as_slice()), 1e-12);
            for k in 0..d {
                c[(a * d + b) * d + k] = coords[k];
            }
        }
    }
    Ok(c)
}

fn close_finite_group(space: &SymplecticSpace, elements: Vec<Mat>) -> Result<Vec<Mat>> {
    let dim = space.dim();
    for (i, g) in elements.iter().enumerate() {
        space.check_square(g, "finite group element")?;
        let r = space.symplecticity_residual(g);
        if r > 1e-10 {
            return Err(Error::InvalidInput(format!(
                "finite group element {i} is not symplectic (residual {r:.3e})"
            )));
        }
    }
    let id = Mat::identity(dim, dim);
    let mut out = elements;
    if !out.iter().any(|g| (g - &id).amax() < 1e-10) {
        out.insert(0, id);
    }
    for a in &out {
        for b in &out {
            let p = a * b;
            if !out.iter().any(|g| (g - &p).amax() < 1e-9) {
                return Err(Error::InvalidInput(
                    "finite group elements are not closed under multiplication".into(),
                ));
            }
        }
    }
    Ok(out)
}

/// Moment-map value in the dual basis of the generators.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentValue {
    pub mu: Vec<f64>,
}

impl MomentValue {
    pub fn norm(&self) -> f64 {
        self.mu.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn as_vector(&self) -> Vector {
        Vector::from_column_slice(&self.mu)
    }
}

/// Homogeneous quadratic moment map `<Phi(v), xi_i> = v^T Q_i v`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentMap {
    components: Vec<Mat>,
    space_dim: usize,
}

impl MomentMap {
    pub fn from_components(space_dim: usize, components: Vec<Mat>) -> Self {
        Self { components, space_dim }
    }

    pub fn components(&self) -> &[Mat] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn value(&self, v: &Vector) -> MomentValue {
        MomentValue {
            mu: self.components.iter().map(|q| v.dot(&(q * v))).collect(),
        }
    }

    /// `d x 2n` matrix with rows `2 Q_i v`.
    pub fn differential(&self, v: &Vector) -> Mat {
        let mut d = Mat::zeros(self.components.len(), v.len());
        for (i, q) in self.components.iter().enumerate() {
            d.set_row(i, &(2.0 * (q * v)).transpose());
        }
        d
    }

    /// `sum_i eta_i Q_i`, the matrix of `<Phi, eta>`.
    pub fn pairing_matrix(&self, eta: &[f64]) -> Mat {
        let dim = self.space_dim;
        eta.iter()
            .zip(&self.components)
            .fold(Mat::zeros(dim, dim), |acc, (e, q)| acc + *e * q)
    }
}

/// `Q_i = -1/4 (J xi_i + (J xi_i)^T)`.
pub fn homogeneous_moment_map(action: &GroupAction) -> Result<MomentMap> {
    check_generators(action.space(), action.generators())?;
    let j = action.space().j();
    let components = action
        .generators()
        .iter()
        .map(|xi| {
            let jx = j * xi;
            -0.25 * (&jx + jx.transpose())
        })
        .collect();
    Ok(MomentMap {
        components,
        space_dim: action.space().dim(),
    })
}

pub fn moment_value(map: &MomentMap, v: &Vector) -> MomentValue {
    map.value(v)
}

pub fn moment_differential(map: &MomentMap, v: &Vector) -> Mat {
    map.differential(v)
}

/// Basis (columns, in generator coordinates) of a subalgebra plus the rank
/// decision that produced it.
#[derive(Debug, Clone, Serialize)]
pub struct AlgebraBasis {
    #[serde(serialize_with = "crate::report::ser_mat")]
    pub basis: Mat,
    pub rank: RankInfo,
}

impl AlgebraBasis {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }
}

/// `g_v = {xi : xi_V v = 0}`.
pub fn isotropy_algebra(action: &GroupAction, v: &Vector, policy: RankPolicy) -> Result<AlgebraBasis> {
    action.space().check_vector(v, "point")?;
    let d = action.dim();
    if d == 0 {
        return Ok(AlgebraBasis {
            basis: Mat::zeros(0, 0),
            rank: RankInfo {
                singular_values: vec![],
                rank: 0,
                threshold: 0.0,
                gap_ratio: None,
            },
        });
    }
    let a = action.orbit_tangent_matrix(v);
    let gnorm = action.generators().iter().fold(0.0_f64, |m, g| m.max(linalg::norm2(g)));
    let scale = v.norm() * gnorm;
    let (basis, rank) = linalg::null_space(&a, scale, policy, "isotropy algebra")?;
    Ok(AlgebraBasis { basis, rank })
}

/// `g_mu = {xi : ad*_xi mu = 0}` using `(ad*_xi mu)_b = sum_{a,k} xi^a c_ab^k mu_k`.
pub fn isotropy_algebra_of_momentum(
    action: &GroupAction,
    mu: &MomentValue,
    policy: RankPolicy,
) -> Result<AlgebraBasis> {
    let d = action.dim();
    if mu.mu.len() != d {
        return Err(Error::DimensionMismatch(format!(
            "moment value has length {}, expected {d}",
            mu.mu.len()
        )));
    }
    let mut b = Mat::zeros(d, d);
    let mut cmax = 0.0_f64;
    for row in 0..d {
        for a in 0..d {
            let mut s = 0.0;
            for k in 0..d {
                let c = action.structure_constant(a, row, k);
                cmax = cmax.max(c.abs());
                s += c * mu.mu[k];
            }
            b[(row, a)] = s;
        }
    }
    let scale = mu.norm() * cmax * (d as f64).max(1.0);
    let (basis, rank) = linalg::null_space(&b, scale, policy, "isotropy algebra of momentum")?;
    Ok(AlgebraBasis { basis, rank })
}

/// Largest `|| Phi(g v) - Ad^dagger(g) Phi(v) ||` over sampled unit vectors
/// `v` and group elements `g`.
pub fn equivariance_residual(action: &GroupAction, map: &MomentMap, samples: usize, seed: u64) -> f64 {
    if action.dim() == 0 && map.dim() == 0 {
        return 0.0;
    }
    let dim = action.space().dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for _ in 0..samples {
        let g = action.sample_element(&mut rng);
        let mut v = Vector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        v /= v.norm();
        let lhs = map.value(&(&g.matrix * &v)).as_vector();
        let phi = map.value(&v).as_vector();
        let g_inv = g.matrix.clone().try_inverse().unwrap_or_else(|| g.matrix.transpose());
        let (a_inv, _) = action.ad_coordinates(&g_inv);
        let rhs = if a_inv.nrows() == phi.len() {
            a_inv.transpose() * phi
        } else {
            phi
        };
        worst = worst.max((lhs - rhs).norm());
    }
    worst
}

/// An `Ad`-invariant inner product on the Lie algebra (Gram matrix in the
/// generator basis).
///
/// Tori and finite groups get the identity (averaged over the finite part
/// when present). For general groups the Frobenius Gram matrix of the
/// generators is averaged over sampled group elements, projected onto the
/// exactly invariant symmetric forms, and finally averaged over the finite
/// part.
pub fn invariant_inner_product(action: &GroupAction, seed: u64) -> Result<Mat> {
    let d = action.dim();
    if d == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    let mut base = match action.kind() {
        GroupKind::Torus | GroupKind::Finite => Mat::identity(d, d),
        GroupKind::General => {
            let g = Mat::from_fn(d, d, |a, b| action.generators()[a].dot(&action.generators()[b]));
            if action.is_abelian() {
                g
            } else {
                average_over_connected(action, &g, seed)?
            }
        }
    };
    if !action.finite_part().is_empty() {
        let mut acc = Mat::zeros(d, d);
        for f in action.finite_part() {
            let (a, _) = action.ad_coordinates(f);
            acc += a.transpose() * &base * a;
        }
        base = acc / action.finite_part().len() as f64;
    }
    let base = 0.5 * (&base + base.transpose());
    if base.clone().cholesky().is_none() {
        return Err(Error::NotConverged(
            "averaged inner product is not positive definite".into(),
        ));
    }
    let resid = inner_product_invariance_residual(action, &base);
    if resid > 1e-9 * base.amax() {
        return Err(Error::NotConverged(format!(
            "inner product averaging did not reach invariance (residual {resid:.3e})"
        )));
    }
    Ok(base)
}

/// `max_k || ad_k^T B + B ad_k ||`.
pub fn inner_product_invariance_residual(action: &GroupAction, b: &Mat) -> f64 {
    (0..action.dim())
        .map(|k| {
            let ad = action.ad_matrix(k);
            (ad.transpose() * b + b * &ad).amax()
        })
        .fold(0.0, f64::max)
}

fn average_over_connected(action: &GroupAction, gram: &Mat, seed: u64) -> Result<Mat> {
    let d = action.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = 256;
    let mut acc = Mat::zeros(d, d);
    for _ in 0..samples {
        let theta: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let g = action.element(&theta, None);
        let (a, _) = action.ad_coordinates(&g);
        acc += a.transpose() * gram * a;
    }
    let avg = acc / samples as f64;
    // Project vec(B) onto { B : ad_k^T B + B ad_k = 0, B = B^T }.
    let dd = d * d;
    let id = Mat::identity(d, d);
    let mut rows: Vec<Mat> = Vec::new();
    for k in 0..d {
        let ad = action.ad_matrix(k);
        rows.push(id.kronecker(&ad.transpose()) + ad.transpose().kronecker(&id));
    }
    let mut sym = Mat::zeros(dd, dd);
    for i in 0..d {
        for j in 0..d {
            sym[(i * d + j, i * d + j)] += 1.0;
            sym[(i * d + j, j * d + i)] -= 1.0;
        }
    }
    rows.push(sym);
    let total_rows: usize = rows.iter().map(|r| r.nrows()).sum();
    let mut c = Mat::zeros(total_rows, dd);
    let mut off = 0;
    for r in rows {
        c.view_mut((off, 0), (r.nrows(), dd)).copy_from(&r);
        off += r.nrows();
    }
    let (null, _) = linalg::null_space(&c, c.amax(), RankPolicy::default(), "invariant inner product")?;
    if null.ncols() == 0 {
        return Err(Error::NotConverged("no invariant symmetric form found".into()));
    }
    let v = Vector::from_column_slice(avg.as_slice());
    let projected = &null * (null.transpose() * v);
    Ok(Mat::from_column_slice(d, d, projected.as_slice()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s1(weights: &[i64]) -> GroupAction {
        let sp = SymplecticSpace::new(weights.len()).unwrap();
        GroupAction::torus(sp, weights.iter().map(|w| vec![*w]).collect()).unwrap()
    }

    #[test]
    fn trivial_group_has_empty_moment_map() {
        let a = GroupAction::trivial(SymplecticSpace::new(2).unwrap());
        let m = homogeneous_moment_map(&a).unwrap();
        assert_eq!(m.dim(), 0);
        assert_eq!(equivariance_residual(&a, &m, 10, 1), 0.0);
    }

    #[test]
    fn weight_one_minus_one_moment_map() {
        // Phi(z) = (|z1|^2 - |z2|^2) / 2 in coordinates (x1, x2, y1, y2).
        let a = s1(&[1, -1]);
        let m = homogeneous_moment_map(&a).unwrap();
        let expected = Mat::from_diagonal(&Vector::from_row_slice(&[0.5, -0.5, 0.5, -0.5]));
        assert!((&m.components()[0] - expected).amax() < 1e-15);
        let v = Vector::from_row_slice(&[1.0, 1.0, 0.0, 0.0]) / 2f64.sqrt();
        assert!(m.value(&v).mu[0].abs() < 1e-15);
    }

    #[test]
    fn central_circle_is_half_norm_squared() {
        let a = s1(&[1, 1, 1]);
        let m = homogeneous_moment_map(&a).unwrap();
        assert!((&m.components()[0] - 0.5 * Mat::identity(6, 6)).amax() < 1e-15);
    }

    #[test]
    fn isotropy_of_weight_points() {
        let a = s1(&[1, -1]);
        let p = RankPolicy::default();
        assert_eq!(isotropy_algebra(&a, &Vector::zeros(4), p).unwrap().dim(), 1);
        let both = Vector::from_row_slice(&[0.3, -0.2, 0.1, 0.4]);
        assert_eq!(isotropy_algebra(&a, &both, p).unwrap().dim(), 0);
        let first = Vector::from_row_slice(&[0.3, 0.0, 0.1, 0.0]);
        assert_eq!(isotropy_algebra(&a, &first, p).unwrap().dim(), 0);
    }

    #[test]
    fn finite_group_closure() {
        let sp = SymplecticSpace::new(1).unwrap();
        let minus = -Mat::identity(2, 2);
        let g = GroupAction::finite(sp.clone(), vec![minus]).unwrap();
        assert_eq!(g.finite_part().len(), 2);
        let rot = Mat::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        // {I, R} is not closed: R^2 = -I is missing.
        assert!(GroupAction::finite(sp, vec![rot]).is_err());
    }

    #[test]
    fn non_symplectic_generator_rejected() {
        let sp = SymplecticSpace::new(1).unwrap();
        let bad = Mat::identity(2, 2);
        let err = GroupAction::general(sp, vec![bad], None, vec![]).unwrap_err();
        assert!(matches!(err, Error::NonSymplecticGenerator { index: 0, .. }));
    }

    #[test]
    fn alignment_recovers_torus_angle() {
        let a = s1(&[1, -2]);
        let x = Vector::from_row_slice(&[0.4, 0.3, -0.1, 0.2]);
        let g = a.element(&[1.234], None);
        let al = a.align(&x, &(g * &x));
        assert!(al.residual < 1e-12, "{}", al.residual);
    }
}
