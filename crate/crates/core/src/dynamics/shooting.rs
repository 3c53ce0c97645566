//! Newton shooting for relative periodic orbits `flow_T(x) = g x`.

use serde::Serialize;

use super::flow::{flow_steps, FlowOptions};
use crate::error::{Error, Result};
use crate::group::{self, GroupAction, MomentMap};
use crate::hamiltonian::HamiltonianOracle;
use crate::linalg::{self, Mat, RankPolicy, Vector};
use crate::symplectic::standard_j;

/// Starting guess for the shooting.
#[derive(Debug, Clone)]
pub struct RpoSeed {
    pub x0: Vector,
    pub period: f64,
    pub theta: Vec<f64>,
    pub finite_index: Option<usize>,
    /// Target value of `h` (absolute, not relative to `h(0)`).
    pub energy: f64,
    /// Optional target momentum; the census pins `Phi = 0`.
    pub moment: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ShootingOptions {
    /// Closure tolerance relative to `1 + |x|`.
    pub tol: f64,
    pub max_iter: usize,
    pub flow: FlowOptions,
    /// Relative speed transverse to the group orbit below which the result
    /// is treated as a relative equilibrium.
    pub equilibrium_speed: f64,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 40,
            flow: FlowOptions::default(),
            equilibrium_speed: 1e-6,
        }
    }
}

/// A converged relative periodic orbit.
#[derive(Debug, Clone, Serialize)]
pub struct RpoRecord {
    pub x0: Vec<f64>,
    pub period: f64,
    pub group_params: Vec<f64>,
    pub finite_index: Option<usize>,
    pub energy: f64,
    pub moment: Vec<f64>,
    pub shooting_residual: f64,
    pub newton_iterations: usize,
    pub steps: usize,
    #[serde(serialize_with = "crate::report::ser_mat")]
    pub monodromy: Mat,
    /// Floquet multipliers of `g^{-1} M` as `[re, im]`, sorted.
    pub multipliers: Vec<[f64; 2]>,
    pub nondeg_space_dim: Option<usize>,
    pub expected_dim: Option<usize>,
    pub weakly_nondegenerate: Option<bool>,
}

impl RpoRecord {
    pub fn point(&self) -> Vector {
        Vector::from_column_slice(&self.x0)
    }

    pub fn group_element(&self, action: &GroupAction) -> Mat {
        action.element(&self.group_params, self.finite_index)
    }
}

struct Evaluation {
    residual: Vector,
    closure: f64,
    jacobian: Option<Mat>,
    monodromy: Option<Mat>,
}

struct Problem<'a> {
    oracle: &'a dyn HamiltonianOracle,
    action: &'a GroupAction,
    map: &'a MomentMap,
    seed_x: Vector,
    seed_field: Vector,
    seed_orbit: Vec<Vector>,
    gauge: Mat,
    energy: f64,
    moment: Option<Vec<f64>>,
    finite_index: Option<usize>,
    steps: usize,
    opts: ShootingOptions,
}

impl Problem<'_> {
    fn dims(&self) -> (usize, usize) {
        (self.oracle.dim(), self.action.dim())
    }

    fn eval(&self, u: &Vector, with_jacobian: bool) -> Result<Evaluation> {
        let (dim, d) = self.dims();
        let x = u.rows(0, dim).into_owned();
        let t = u[dim];
        let theta: Vec<f64> = (0..d).map(|i| u[dim + 1 + i]).collect();
        let fr = flow_steps(self.oracle, &x, t, self.steps, self.opts.flow, with_jacobian, None)?;
        let g = self.action.element(&theta, self.finite_index);
        let closure_vec = &fr.endpoint - &g * &x;
        let closure = closure_vec.norm();
        let pin_rows = if self.moment.is_some() { d } else { 0 };
        let rows = dim + 2 + d + pin_rows + self.gauge.ncols();
        let mut r = Vector::zeros(rows);
        r.rows_mut(0, dim).copy_from(&closure_vec);
        r[dim] = self.oracle.value(&x) - self.energy;
        let dx = &x - &self.seed_x;
        r[dim + 1] = self.seed_field.dot(&dx);
        for (i, t) in self.seed_orbit.iter().enumerate() {
            r[dim + 2 + i] = t.dot(&dx);
        }
        let mut row = dim + 2 + d;
        if let Some(mu) = &self.moment {
            let phi = self.map.value(&x).mu;
            for i in 0..d {
                r[row + i] = phi[i] - mu[i];
            }
            row += d;
        }
        let theta_v = Vector::from_column_slice(&theta);
        for j in 0..self.gauge.ncols() {
            r[row + j] = self.gauge.column(j).dot(&theta_v);
        }
        let monodromy = fr.monodromy.clone();
        let jacobian = if with_jacobian {
            let cols = dim + 1 + d;
            let mut jac = Mat::zeros(rows, cols);
            let m = fr.monodromy.expect("requested");
            jac.view_mut((0, 0), (dim, dim)).copy_from(&(m - &g));
            jac.view_mut((0, dim), (dim, 1))
                .copy_from(&fr.time_derivative.expect("requested"));
            for (i, dg) in self
                .action
                .element_derivatives(&theta, self.finite_index)
                .iter()
                .enumerate()
            {
                jac.view_mut((0, dim + 1 + i), (dim, 1)).copy_from(&(-(dg * &x)));
            }
            jac.view_mut((dim, 0), (1, dim))
                .copy_from(&self.oracle.gradient(&x).transpose());
            jac.view_mut((dim + 1, 0), (1, dim))
                .copy_from(&self.seed_field.transpose());
            for (i, t) in self.seed_orbit.iter().enumerate() {
                jac.view_mut((dim + 2 + i, 0), (1, dim)).copy_from(&t.transpose());
            }
            let mut row = dim + 2 + d;
            if self.moment.is_some() {
                jac.view_mut((row, 0), (d, dim)).copy_from(&self.map.differential(&x));
                row += d;
            }
            for j in 0..self.gauge.ncols() {
                for i in 0..d {
                    jac[(row + j, dim + 1 + i)] = self.gauge[(i, j)];
                }
            }
            Some(jac)
        } else {
            None
        };
        Ok(Evaluation {
            residual: r,
            closure,
            jacobian,
            monodromy,
        })
    }
}

/// Number of composed steps used for a shooting problem of period `t` from `x`.
pub fn shooting_steps(oracle: &dyn HamiltonianOracle, x: &Vector, t: f64) -> usize {
    let omega = linalg::norm2(&oracle.hessian(x));
    super::flow::steps_for(t, super::flow::default_step(omega, t))
}

/// Gauss-Newton on the closure equations with energy, phase, group-phase,
/// optional momentum and gauge conditions.
pub fn rpo_shoot(
    oracle: &dyn HamiltonianOracle,
    action: &GroupAction,
    map: &MomentMap,
    seed: &RpoSeed,
    opts: &ShootingOptions,
) -> Result<RpoRecord> {
    let dim = oracle.dim();
    let d = action.dim();
    if seed.x0.len() != dim || seed.theta.len() != d {
        return Err(Error::DimensionMismatch("seed does not match the system".into()));
    }
    if seed.period.is_nan() || seed.period <= 0.0 {
        return Err(Error::InvalidInput("seed period must be positive".into()));
    }
    let j = standard_j(dim / 2);
    let seed_field = &j * oracle.gradient(&seed.x0);
    let seed_orbit: Vec<Vector> = action.generators().iter().map(|xi| xi * &seed.x0).collect();
    let gauge = if d == 0 {
        Mat::zeros(0, 0)
    } else {
        group::isotropy_algebra(action, &seed.x0, RankPolicy::default())
            .map(|b| b.basis)
            .unwrap_or_else(|_| Mat::zeros(d, 0))
    };
    let problem = Problem {
        oracle,
        action,
        map,
        seed_x: seed.x0.clone(),
        seed_field,
        seed_orbit,
        gauge,
        energy: seed.energy,
        moment: seed.moment.clone(),
        finite_index: seed.finite_index,
        steps: shooting_steps(oracle, &seed.x0, seed.period),
        opts: *opts,
    };
    let mut u = Vector::zeros(dim + 1 + d);
    u.rows_mut(0, dim).copy_from(&seed.x0);
    u[dim] = seed.period;
    for i in 0..d {
        u[dim + 1 + i] = seed.theta[i];
    }
    let mut ev = problem.eval(&u, true)?;
    let mut iterations = 0;
    loop {
        let xnorm = u.rows(0, dim).norm();
        let side = ev.residual.rows(dim, ev.residual.len() - dim).amax();
        if ev.closure <= opts.tol * (1.0 + xnorm) && side <= opts.tol * (1.0 + seed.energy.abs()) {
            break;
        }
        if iterations >= opts.max_iter {
            return Err(Error::NewtonDiverged {
                iterations,
                residual: ev.closure,
            });
        }
        iterations += 1;
        let jac = ev.jacobian.as_ref().expect("jacobian evaluated");
        let step = linalg::lstsq(jac, &(-&ev.residual), 1e-10);
        let r0 = ev.residual.norm();
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..12 {
            let trial = &u + lambda * &step;
            if trial[dim] > 0.0 {
                if let Ok(e) = problem.eval(&trial, false) {
                    if e.residual.norm() < r0 || e.residual.norm() <= 1e-14 * (1.0 + r0) {
                        accepted = Some(trial);
                        break;
                    }
                }
            }
            lambda *= 0.5;
        }
        match accepted {
            Some(trial) => {
                u = trial;
                ev = problem.eval(&u, true)?;
            }
            None => {
                return Err(Error::NewtonDiverged {
                    iterations,
                    residual: ev.closure,
                })
            }
        }
    }
    let x = u.rows(0, dim).into_owned();
    let t = u[dim];
    let theta: Vec<f64> = (0..d).map(|i| u[dim + 1 + i]).collect();
    let field = &j * oracle.gradient(&x);
    let orbit = action.orbit_tangent_matrix(&x);
    let transverse = if orbit.ncols() == 0 {
        field.clone()
    } else {
        let c = linalg::lstsq(&orbit, &field, 1e-12);
        &field - orbit * c
    };
    let speed = transverse.norm() / field.norm().max(1e-300);
    if speed <= opts.equilibrium_speed {
        return Err(Error::ConvergedToEquilibrium { speed });
    }
    let monodromy = ev.monodromy.expect("jacobian evaluation includes the monodromy");
    let g = action.element(&theta, seed.finite_index);
    let g_inv = g.clone().try_inverse().unwrap_or_else(|| g.transpose());
    let multipliers = floquet_multipliers(&(&g_inv * &monodromy));
    Ok(RpoRecord {
        x0: x.iter().copied().collect(),
        period: t,
        group_params: theta,
        finite_index: seed.finite_index,
        energy: oracle.value(&x),
        moment: map.value(&x).mu,
        shooting_residual: ev.closure,
        newton_iterations: iterations,
        steps: problem.steps,
        monodromy,
        multipliers,
        nondeg_space_dim: None,
        expected_dim: None,
        weakly_nondegenerate: None,
    })
}

/// Eigenvalues sorted by argument, then modulus.
pub fn floquet_multipliers(p: &Mat) -> Vec<[f64; 2]> {
    let ev = p.complex_eigenvalues();
    let mut out: Vec<[f64; 2]> = ev.iter().map(|z| [z.re, z.im]).collect();
    out.sort_by(|a, b| {
        let ka = (a[1].atan2(a[0]), a[0].hypot(a[1]));
        let kb = (b[1].atan2(b[0]), b[0].hypot(b[1]));
        ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1))
    });
    out
}
