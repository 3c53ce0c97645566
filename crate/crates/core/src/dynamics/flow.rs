//! Hamiltonian flow by the implicit midpoint rule, optionally composed into
//! higher-order symmetric schemes. Every substep is an implicit midpoint
//! step, so quadratic first integrals (moment-map components) are conserved
//! up to the accuracy of the inner Newton solve.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{GroupAction, MomentMap};
use crate::hamiltonian::HamiltonianOracle;
use crate::linalg::{Mat, Vector};
use crate::symplectic::standard_j;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Plain implicit midpoint, order 2.
    Midpoint,
    /// Seven-stage symmetric composition, order 6.
    Order6,
    /// Fifteen-stage symmetric composition, order 8.
    Order8,
}

impl Scheme {
    /// Substep fractions of one composed step.
    pub fn weights(self) -> Vec<f64> {
        let half: Vec<f64> = match self {
            Scheme::Midpoint => return vec![1.0],
            Scheme::Order6 => vec![0.784513610477560, 0.235573213359357, -1.17767998417887],
            Scheme::Order8 => vec![
                0.914844246229740,
                0.253693336566229,
                -1.44485223686048,
                -0.158240635368243,
                1.93813913762276,
                -1.96061023297549,
                0.102799849391985,
            ],
        };
        let w0 = 1.0 - 2.0 * half.iter().sum::<f64>();
        let mut out = half.clone();
        out.push(w0);
        out.extend(half.iter().rev());
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowOptions {
    pub scheme: Scheme,
    /// Newton on the midpoint equations stops when the update is below
    /// `inner_tol * (1 + |m|)`.
    pub inner_tol: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            scheme: Scheme::Order6,
            inner_tol: 1e-14,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowResult {
    #[serde(serialize_with = "crate::report::ser_vec")]
    pub endpoint: Vector,
    #[serde(serialize_with = "crate::report::ser_opt_mat")]
    pub monodromy: Option<Mat>,
    /// Derivative of the endpoint with respect to the total time at a fixed
    /// number of steps.
    #[serde(skip)]
    pub time_derivative: Option<Vector>,
    pub energy_drift: f64,
    pub moment_drift: f64,
    pub steps: usize,
}

/// Step size rule `min(2 pi / (40 omega_max), T / 400)`.
pub fn default_step(omega_max: f64, t: f64) -> f64 {
    let a = if omega_max > 0.0 {
        std::f64::consts::TAU / (40.0 * omega_max)
    } else {
        f64::INFINITY
    };
    a.min(t.abs() / 400.0)
}

/// Number of steps of size at most `dt` covering `t`.
pub fn steps_for(t: f64, dt: f64) -> usize {
    ((t.abs() / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

/// Flow `x` for time `t` with steps of size at most `dt`.
pub fn flow(oracle: &dyn HamiltonianOracle, x: &Vector, t: f64, dt: f64, with_monodromy: bool) -> Result<FlowResult> {
    flow_steps(
        oracle,
        x,
        t,
        steps_for(t, dt),
        FlowOptions::default(),
        with_monodromy,
        None,
    )
}

struct Substep {
    y: Vector,
    /// `(I - tau/2 A)^{-1}`, only when derivatives are requested.
    lu: Option<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
    a: Option<Mat>,
    f_mid: Vector,
}

fn midpoint_step(
    oracle: &dyn HamiltonianOracle,
    j: &Mat,
    y0: &Vector,
    tau: f64,
    tol: f64,
    step: usize,
    want_jacobian: bool,
) -> Result<Substep> {
    let dim = y0.len();
    let mut m = y0 + 0.5 * tau * (j * oracle.gradient(y0));
    let mut prev = f64::INFINITY;
    let mut converged = false;
    for _ in 0..40 {
        let f = j * oracle.gradient(&m);
        let g = &m - y0 - 0.5 * tau * &f;
        let a = j * oracle.hessian(&m);
        let jac = Mat::identity(dim, dim) - 0.5 * tau * &a;
        let delta = jac.lu().solve(&g).ok_or(Error::InnerNewtonDiverged {
            step,
            residual: g.norm(),
        })?;
        m -= &delta;
        let dn = delta.norm();
        let scale = 1.0 + m.norm();
        if dn <= tol * scale || (dn <= 1e-11 * scale && dn >= 0.5 * prev) {
            converged = true;
            break;
        }
        if !dn.is_finite() {
            break;
        }
        prev = dn;
    }
    if !converged {
        let f = j * oracle.gradient(&m);
        let resid = (&m - y0 - 0.5 * tau * &f).norm();
        return Err(Error::InnerNewtonDiverged { step, residual: resid });
    }
    let f_mid = j * oracle.gradient(&m);
    let y = 2.0 * &m - y0;
    if want_jacobian {
        let a = j * oracle.hessian(&m);
        let lu = (Mat::identity(dim, dim) - 0.5 * tau * &a).lu();
        Ok(Substep {
            y,
            lu: Some(lu),
            a: Some(a),
            f_mid,
        })
    } else {
        Ok(Substep {
            y,
            lu: None,
            a: None,
            f_mid,
        })
    }
}

/// Flow with exactly `steps` composed steps. When `with_monodromy` is set the
/// derivative of the discrete map and its derivative with respect to `t` are
/// propagated alongside. Energy and moment drift are measured at every step.
pub fn flow_steps(
    oracle: &dyn HamiltonianOracle,
    x: &Vector,
    t: f64,
    steps: usize,
    opts: FlowOptions,
    with_monodromy: bool,
    map: Option<&MomentMap>,
) -> Result<FlowResult> {
    let dim = oracle.dim();
    if x.len() != dim {
        return Err(Error::DimensionMismatch(format!(
            "state has length {}, oracle expects {dim}",
            x.len()
        )));
    }
    let steps = steps.max(1);
    let j = standard_j(dim / 2);
    let weights = opts.scheme.weights();
    let h = t / steps as f64;
    let mut y = x.clone();
    let mut mono = with_monodromy.then(|| Mat::identity(dim, dim));
    let mut sens = with_monodromy.then(|| Vector::zeros(dim));
    let e0 = oracle.value(x);
    let phi0 = map.map(|m| m.value(x).mu);
    let mut energy_drift = 0.0_f64;
    let mut moment_drift = 0.0_f64;
    for s in 0..steps {
        for &w in &weights {
            let tau = w * h;
            let sub = midpoint_step(oracle, &j, &y, tau, opts.inner_tol, s, with_monodromy)?;
            if let (Some(mono), Some(sens), Some(lu), Some(a)) = (mono.as_mut(), sens.as_mut(), &sub.lu, &sub.a) {
                // R = (I - tau/2 A)^{-1} (I + tau/2 A).
                let plus = Mat::identity(dim, dim) + 0.5 * tau * a;
                let rhs_m = &plus * &*mono;
                *mono = lu.solve(&rhs_m).expect("factorised above");
                let rhs_s = &plus * &*sens + (w / steps as f64) * &sub.f_mid;
                *sens = lu.solve(&rhs_s).expect("factorised above");
            }
            y = sub.y;
        }
        energy_drift = energy_drift.max((oracle.value(&y) - e0).abs());
        if let (Some(map), Some(phi0)) = (map, &phi0) {
            let phi = map.value(&y).mu;
            for (a, b) in phi.iter().zip(phi0) {
                moment_drift = moment_drift.max((a - b).abs());
            }
        }
    }
    Ok(FlowResult {
        endpoint: y,
        monodromy: mono,
        time_derivative: sens,
        energy_drift,
        moment_drift,
        steps,
    })
}

/// Largest `|flow_T(g x) - g flow_T(x)|` over sampled group elements.
pub fn equivariance_flow_check(
    oracle: &dyn HamiltonianOracle,
    action: &GroupAction,
    x: &Vector,
    t: f64,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let steps = 400;
    let opts = FlowOptions::default();
    let base = flow_steps(oracle, x, t, steps, opts, false, None)?.endpoint;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for _ in 0..samples {
        let g = action.sample_element(&mut rng).matrix;
        let moved = flow_steps(oracle, &(&g * x), t, steps, opts, false, None)?.endpoint;
        worst = worst.max((moved - &g * &base).norm());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{abs2, PolynomialHamiltonian, QuadraticHamiltonian};
    use crate::linalg::expm;
    use crate::symplectic::{hamiltonian_matrix, QuadraticForm, SymplecticSpace};

    #[test]
    fn composition_weights_sum_to_one() {
        for s in [Scheme::Midpoint, Scheme::Order6, Scheme::Order8] {
            assert!((s.weights().iter().sum::<f64>() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn oscillator_returns_after_two_pi() {
        let form = QuadraticForm::new(0.5 * Mat::identity(2, 2)).unwrap();
        let h = QuadraticHamiltonian::new(&form);
        let x = Vector::from_row_slice(&[0.3, -0.4]);
        let tau = std::f64::consts::TAU;
        let r = flow(&h, &x, tau, tau / 400.0, true).unwrap();
        assert!((&r.endpoint - &x).norm() < 1e-10);
        assert!((r.monodromy.unwrap() - Mat::identity(2, 2)).amax() < 1e-10);
    }

    #[test]
    fn linear_flow_matches_exponential() {
        let sp = SymplecticSpace::new(2).unwrap();
        let q = Mat::from_row_slice(
            4,
            4,
            &[
                1.0, 0.2, 0.0, 0.1, //
                0.2, 2.0, 0.1, 0.0, //
                0.0, 0.1, 1.5, 0.3, //
                0.1, 0.0, 0.3, 0.8,
            ],
        );
        let form = QuadraticForm::new(q).unwrap();
        let xi = hamiltonian_matrix(&sp, &form).unwrap();
        let h = QuadraticHamiltonian::new(&form);
        let x = Vector::from_row_slice(&[0.1, 0.2, -0.3, 0.05]);
        let t = 3.1;
        let r = flow(&h, &x, t, t / 400.0, true).unwrap();
        let e = expm(&(t * xi.matrix()));
        assert!((r.monodromy.unwrap() - &e).amax() < 1e-8);
        assert!((r.endpoint - e * x).amax() < 1e-8);
    }

    #[test]
    fn convergence_order() {
        let form = QuadraticForm::new(Mat::from_diagonal(&Vector::from_row_slice(&[0.5, 2.0]))).unwrap();
        let h = QuadraticHamiltonian::new(&form);
        let x = Vector::from_row_slice(&[1.0, 0.5]);
        let t = 2.0;
        let exact = expm(
            &(t * hamiltonian_matrix(&SymplecticSpace::new(1).unwrap(), &form)
                .unwrap()
                .matrix()
                .clone()),
        ) * &x;
        for (scheme, order) in [(Scheme::Midpoint, 2.0), (Scheme::Order6, 6.0), (Scheme::Order8, 8.0)] {
            let opts = FlowOptions {
                scheme,
                inner_tol: 1e-15,
            };
            let err = |n| (flow_steps(&h, &x, t, n, opts, false, None).unwrap().endpoint - &exact).norm();
            let (e1, e2) = (err(8), err(16));
            let observed = (e1 / e2).log2();
            assert!((observed - order).abs() < 0.6, "{scheme:?}: observed order {observed}");
        }
    }

    #[test]
    fn time_derivative_matches_difference() {
        let p = &(&abs2(2, 0) + &abs2(2, 1).scale(2.0)) + &(&abs2(2, 0) * &abs2(2, 1));
        let h = PolynomialHamiltonian::new(p).unwrap();
        let x = Vector::from_row_slice(&[0.3, 0.2, -0.1, 0.25]);
        let opts = FlowOptions::default();
        let r = flow_steps(&h, &x, 1.7, 100, opts, true, None).unwrap();
        let d = 1e-6;
        let fp = flow_steps(&h, &x, 1.7 + d, 100, opts, false, None).unwrap().endpoint;
        let fm = flow_steps(&h, &x, 1.7 - d, 100, opts, false, None).unwrap().endpoint;
        let fd = (fp - fm) / (2.0 * d);
        assert!((fd - r.time_derivative.unwrap()).amax() < 1e-7);
    }
}
