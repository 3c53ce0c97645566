//! Hamiltonian oracles: polynomial Hamiltonians in the real coordinates
//! `(x_1..x_n, y_1..y_n)`, quadratic Hamiltonians, and the checks that tie an
//! oracle to a group action.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Sub};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::group::GroupAction;
use crate::linalg::{Mat, Vector};
use crate::symplectic::QuadraticForm;

/// Point-wise value, gradient and Hessian of a Hamiltonian on `R^{2n}`.
pub trait HamiltonianOracle: Send + Sync {
    /// Real dimension `2n`.
    fn dim(&self) -> usize;
    fn value(&self, x: &Vector) -> f64;
    fn gradient(&self, x: &Vector) -> Vector;
    fn hessian(&self, x: &Vector) -> Mat;
}

/// Sparse real polynomial; keys are exponent vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Self {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(c, vec![0; nvars]);
        p
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        let mut p = Self::zero(nvars);
        p.add_term(1.0, e);
        p
    }

    pub fn from_terms(nvars: usize, terms: &[(f64, Vec<u32>)]) -> Result<Self> {
        let mut p = Self::zero(nvars);
        for (c, e) in terms {
            if e.len() != nvars {
                return Err(Error::DimensionMismatch(format!(
                    "exponent vector has length {}, expected {nvars}",
                    e.len()
                )));
            }
            p.add_term(*c, e.clone());
        }
        Ok(p)
    }

    pub fn add_term(&mut self, c: f64, exps: Vec<u32>) {
        let entry = self.terms.entry(exps).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.terms.retain(|_, v| *v != 0.0);
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Terms in lexicographic order of their exponent vectors.
    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, f64)> {
        self.terms.iter().map(|(e, c)| (e, *c))
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut p = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            p.add_term(c * s, e.clone());
        }
        p
    }

    pub fn derivative(&self, i: usize) -> Self {
        let mut p = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut d = e.clone();
                d[i] -= 1;
                p.add_term(c * e[i] as f64, d);
            }
        }
        p
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c * e.iter().zip(x).map(|(&k, &xi)| xi.powi(k as i32)).product::<f64>())
            .sum()
    }

    /// Homogeneous part of the given degree.
    pub fn homogeneous_part(&self, degree: u32) -> Self {
        let mut p = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            if e.iter().sum::<u32>() == degree {
                p.add_term(*c, e.clone());
            }
        }
        p
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let mut p = self.clone();
        for (e, c) in &rhs.terms {
            p.add_term(*c, e.clone());
        }
        p
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &rhs.scale(-1.0)
    }
}

// Multiplying monomials adds exponents.
#[allow(clippy::suspicious_arithmetic_impl)]
impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        let mut p = Polynomial::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let e = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                p.add_term(ca * cb, e);
            }
        }
        p
    }
}

/// `|z_k|^2 = x_k^2 + y_k^2` on `C^n`.
pub fn abs2(n: usize, k: usize) -> Polynomial {
    let x = Polynomial::var(2 * n, k);
    let y = Polynomial::var(2 * n, n + k);
    &(&x * &x) + &(&y * &y)
}

/// `Re(z_i z_j) = x_i x_j - y_i y_j`.
pub fn re_product(n: usize, i: usize, j: usize) -> Polynomial {
    let xi = Polynomial::var(2 * n, i);
    let xj = Polynomial::var(2 * n, j);
    let yi = Polynomial::var(2 * n, n + i);
    let yj = Polynomial::var(2 * n, n + j);
    &(&xi * &xj) - &(&yi * &yj)
}

#[derive(Debug, Clone)]
struct CompiledPoly {
    terms: Vec<(f64, Vec<(usize, i32)>)>,
}

impl CompiledPoly {
    fn new(p: &Polynomial) -> Self {
        Self {
            terms: p
                .terms()
                .map(|(e, c)| {
                    let f = e
                        .iter()
                        .enumerate()
                        .filter(|(_, &k)| k > 0)
                        .map(|(i, &k)| (i, k as i32))
                        .collect();
                    (c, f)
                })
                .collect(),
        }
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(c, f)| c * f.iter().map(|&(i, k)| x[i].powi(k)).product::<f64>())
            .sum()
    }
}

/// A polynomial Hamiltonian with derivatives precomputed symbolically.
#[derive(Debug, Clone)]
pub struct PolynomialHamiltonian {
    poly: Polynomial,
    value: CompiledPoly,
    grad: Vec<CompiledPoly>,
    /// Upper triangle, row-major.
    hess: Vec<CompiledPoly>,
}

impl PolynomialHamiltonian {
    pub fn new(poly: Polynomial) -> Result<Self> {
        let d = poly.nvars();
        if d == 0 || !d.is_multiple_of(2) {
            return Err(Error::DimensionMismatch(format!(
                "polynomial Hamiltonian needs an even positive number of variables, got {d}"
            )));
        }
        let grads: Vec<Polynomial> = (0..d).map(|i| poly.derivative(i)).collect();
        let mut hess = Vec::new();
        for (i, g) in grads.iter().enumerate() {
            for j in i..d {
                hess.push(CompiledPoly::new(&g.derivative(j)));
            }
        }
        Ok(Self {
            value: CompiledPoly::new(&poly),
            grad: grads.iter().map(CompiledPoly::new).collect(),
            hess,
            poly,
        })
    }

    pub fn polynomial(&self) -> &Polynomial {
        &self.poly
    }
}

impl HamiltonianOracle for PolynomialHamiltonian {
    fn dim(&self) -> usize {
        self.poly.nvars()
    }

    fn value(&self, x: &Vector) -> f64 {
        self.value.eval(x.as_slice())
    }

    fn gradient(&self, x: &Vector) -> Vector {
        Vector::from_iterator(self.grad.len(), self.grad.iter().map(|g| g.eval(x.as_slice())))
    }

    fn hessian(&self, x: &Vector) -> Mat {
        let d = self.dim();
        let mut h = Mat::zeros(d, d);
        let mut idx = 0;
        for i in 0..d {
            for j in i..d {
                let v = self.hess[idx].eval(x.as_slice());
                h[(i, j)] = v;
                h[(j, i)] = v;
                idx += 1;
            }
        }
        h
    }
}

/// `h(x) = x^T Q x`.
#[derive(Debug, Clone)]
pub struct QuadraticHamiltonian {
    q: Mat,
}

impl QuadraticHamiltonian {
    pub fn new(form: &QuadraticForm) -> Self {
        Self {
            q: form.matrix().clone(),
        }
    }
}

impl HamiltonianOracle for QuadraticHamiltonian {
    fn dim(&self) -> usize {
        self.q.nrows()
    }

    fn value(&self, x: &Vector) -> f64 {
        x.dot(&(&self.q * x))
    }

    fn gradient(&self, x: &Vector) -> Vector {
        2.0 * (&self.q * x)
    }

    fn hessian(&self, _x: &Vector) -> Mat {
        2.0 * &self.q
    }
}

/// Quadratic part at the origin as a form with `q(x) = x^T Q x`, so that
/// `Q = Hess h(0) / 2` and the linearised field at the origin is `2 J Q x`.
pub fn quadratic_part(oracle: &dyn HamiltonianOracle) -> Result<QuadraticForm> {
    let h = oracle.hessian(&Vector::zeros(oracle.dim()));
    QuadraticForm::new(0.5 * h)
}

/// Largest relative change of `h` under sampled group elements, together
/// with the infinitesimal residual `|grad h(v) . xi_i v|` for the
/// connected part. Sample points have norm drawn from `[0.2, 1.2]`.
pub fn invariance_residual(oracle: &dyn HamiltonianOracle, action: &GroupAction, samples: usize, seed: u64) -> f64 {
    let dim = oracle.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for s in 0..samples {
        let mut v = Vector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng));
        let radius = 0.2 + (s as f64 / samples.max(1) as f64);
        v *= radius / v.norm();
        let hv = oracle.value(&v);
        let scale = 1.0 + hv.abs();
        let g = action.sample_element(&mut rng);
        worst = worst.max((oracle.value(&(&g.matrix * &v)) - hv).abs() / scale);
        for f in action.finite_part() {
            worst = worst.max((oracle.value(&(f * &v)) - hv).abs() / scale);
        }
        let grad = oracle.gradient(&v);
        for xi in action.generators() {
            worst = worst.max(grad.dot(&(xi * &v)).abs() / (1.0 + grad.norm() * v.norm()));
        }
    }
    worst
}

/// Finite-difference consistency `(gradient error, Hessian error)` at `x`,
/// each relative to `1 +` the size of the analytic quantity.
pub fn oracle_consistency(oracle: &dyn HamiltonianOracle, x: &Vector) -> (f64, f64) {
    let d = oracle.dim();
    let g = oracle.gradient(x);
    let h = oracle.hessian(x);
    let step = 1e-5 * (1.0 + x.amax());
    let mut ge = 0.0_f64;
    let mut he = 0.0_f64;
    for i in 0..d {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += step;
        xm[i] -= step;
        let fd = (oracle.value(&xp) - oracle.value(&xm)) / (2.0 * step);
        ge = ge.max((fd - g[i]).abs());
        let gfd = (oracle.gradient(&xp) - oracle.gradient(&xm)) / (2.0 * step);
        he = he.max((gfd - h.column(i)).amax());
    }
    (ge / (1.0 + g.amax()), he / (1.0 + h.amax()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::SymplecticSpace;

    fn weinstein() -> PolynomialHamiltonian {
        let r = &abs2(2, 0) + &abs2(2, 1);
        let q = &abs2(2, 0) + &abs2(2, 1).scale(2.0);
        PolynomialHamiltonian::new(&q + &(&r * &r)).unwrap()
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = weinstein();
        let x = Vector::from_row_slice(&[0.3, -0.2, 0.5, 0.1]);
        let (ge, he) = oracle_consistency(&h, &x);
        assert!(ge < 1e-6 && he < 1e-5, "{ge} {he}");
    }

    #[test]
    fn quadratic_part_uses_half_hessian() {
        let q = quadratic_part(&weinstein()).unwrap();
        let expected = Mat::from_diagonal(&Vector::from_row_slice(&[1.0, 2.0, 1.0, 2.0]));
        assert!((q.matrix() - expected).amax() < 1e-14);
    }

    #[test]
    fn polynomial_algebra() {
        let x = Polynomial::var(2, 0);
        let y = Polynomial::var(2, 1);
        let p = &(&x + &y) * &(&x - &y);
        assert_eq!(p.eval(&[3.0, 2.0]), 5.0);
        assert_eq!(p.degree(), 2);
        assert_eq!(p.terms().count(), 2);
    }

    #[test]
    fn invariance_detects_symmetry_breaking() {
        let sp = SymplecticSpace::new(2).unwrap();
        let action = GroupAction::torus(sp, vec![vec![1], vec![-1]]).unwrap();
        let good = &abs2(2, 0) + &re_product(2, 0, 1);
        let h = PolynomialHamiltonian::new(good).unwrap();
        assert!(invariance_residual(&h, &action, 50, 3) < 1e-12);
        let x = Polynomial::var(4, 0);
        let bad = &abs2(2, 0) + &(&x * &x);
        let h = PolynomialHamiltonian::new(bad).unwrap();
        assert!(invariance_residual(&h, &action, 50, 3) > 1e-3);
    }
}
