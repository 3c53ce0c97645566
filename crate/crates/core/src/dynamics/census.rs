//! Counting distinct relative periodic orbits on the zero momentum level of
//! a sequence of energy surfaces and comparing with the category bound.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::flow::{flow_steps, FlowOptions};
use super::modes::{linear_families, mode_frame, scale_to_energy, LinearFamily};
use super::nondegeneracy::weak_nondegeneracy;
use super::shooting::{rpo_shoot, shooting_steps, RpoRecord, RpoSeed, ShootingOptions};
use crate::error::{Error, Result};
use crate::group::{GroupAction, MomentMap};
use crate::hamiltonian::{quadratic_part, HamiltonianOracle};
use crate::linalg::{self, Vector};
use crate::reduction::{
    category_lower_bound, resonance_torus, sample_zero_level, stratify, CategoryBound, ResonanceTorus,
};
use crate::releq::{slice_hessian_test, Verdict};
use crate::symplectic::standard_j;
use crate::tolerance::Tolerances;

#[derive(Debug, Clone)]
pub struct CensusOptions {
    /// Random restarts per energy level in addition to one seed per linear family.
    pub seeds_per_level: usize,
    pub seed: u64,
    pub tol: Tolerances,
    /// Number of zero-level samples used for the stratification.
    pub link_samples: usize,
    /// Search bound for integer frequency relations.
    pub resonance_bound: i64,
}

impl Default for CensusOptions {
    fn default() -> Self {
        Self {
            seeds_per_level: 2,
            seed: 0,
            tol: Tolerances::default(),
            link_samples: 32,
            resonance_bound: 12,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedFailure {
    pub job: String,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CensusRow {
    /// Energy above the equilibrium value `h(0)`.
    pub energy: f64,
    pub count_found: usize,
    pub category_bound: usize,
    pub pass: bool,
    pub records: Vec<RpoRecord>,
    pub failures: Vec<SeedFailure>,
    /// Pairs of records whose orbit distance is close to the distinctness threshold.
    pub borderline: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CensusReport {
    pub freqs: Vec<f64>,
    pub mode_weights: Vec<Vec<f64>>,
    pub resonance: ResonanceTorus,
    pub families: Vec<LinearFamily>,
    pub category: CategoryBound,
    pub rows: Vec<CensusRow>,
}

impl CensusReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

struct Job {
    name: String,
    family: usize,
    phases: Vec<f64>,
    /// Relative perturbation of the squared amplitudes.
    amp_factors: Vec<f64>,
    /// Amplitude placed in modes outside the family support.
    off_support: f64,
}

fn linear_seed(
    oracle: &dyn HamiltonianOracle,
    frame: &super::modes::ModeFrame,
    fam: &LinearFamily,
    job: &Job,
    excess: f64,
    h0: f64,
    d: usize,
) -> Result<RpoSeed> {
    let n = frame.freqs.len();
    let mut amps = vec![job.off_support; n];
    for (k, l) in fam.support.iter().zip(&fam.lambda) {
        amps[*k] = (l * job.amp_factors[*k]).sqrt();
    }
    let v = frame.point(&amps, &job.phases);
    let s = scale_to_energy(oracle, &v, excess)?;
    Ok(RpoSeed {
        x0: s * v,
        period: fam.period,
        theta: fam.theta.clone(),
        finite_index: None,
        energy: h0 + excess,
        moment: Some(vec![0.0; d]),
    })
}

/// Census of relative periodic orbits on `Phi = 0`, `h - h(0) = E` for each
/// `E` in `energies`.
pub fn level_census(
    oracle: &dyn HamiltonianOracle,
    action: &GroupAction,
    map: &MomentMap,
    energies: &[f64],
    opts: &CensusOptions,
) -> Result<CensusReport> {
    let tol = &opts.tol;
    let space = action.space();
    let dim = space.dim();
    let d = action.dim();
    let origin = Vector::zeros(dim);
    let test = slice_hessian_test(oracle, action, map, &origin, tol)?;
    if test.verdict != Verdict::PositiveDefiniteSlice {
        return Err(Error::InvalidInput(format!(
            "census needs a stable symmetric equilibrium at the origin, slice test gave {:?}",
            test.verdict
        )));
    }
    let q = quadratic_part(oracle)?;
    let frame = mode_frame(space, &q, map)?;
    let resonance = resonance_torus(&frame.freqs, opts.resonance_bound, tol.resonance);
    let samples = sample_zero_level(action, map, opts.link_samples, opts.seed, tol)?;
    let link = stratify(action, &samples)?;
    let category = category_lower_bound(&link);
    let families = linear_families(action, &frame);
    if families.is_empty() {
        return Err(Error::NotConverged(
            "no periodic family of the linearised flow on the zero level".into(),
        ));
    }
    let h0 = oracle.value(&origin);
    let n = frame.freqs.len();

    let mut jobs: Vec<Job> = families
        .iter()
        .enumerate()
        .map(|(i, _)| Job {
            name: format!("family {i}"),
            family: i,
            phases: vec![0.0; n],
            amp_factors: vec![1.0; n],
            off_support: 0.0,
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for r in 0..opts.seeds_per_level {
        let family = r % families.len();
        jobs.push(Job {
            name: format!("restart {r} (family {family})"),
            family,
            phases: (0..n).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect(),
            amp_factors: (0..n).map(|_| 1.0 + 0.1 * (rng.random::<f64>() - 0.5)).collect(),
            off_support: 0.02 * rng.random::<f64>(),
        });
    }

    let mut order: Vec<usize> = (0..energies.len()).collect();
    order.sort_by(|&a, &b| energies[a].total_cmp(&energies[b]));
    let shooting = ShootingOptions {
        tol: tol.shooting,
        flow: FlowOptions {
            inner_tol: tol.inner_newton,
            ..FlowOptions::default()
        },
        ..ShootingOptions::default()
    };

    // results[job][level]
    let results: Vec<Vec<std::result::Result<RpoRecord, String>>> = jobs
        .par_iter()
        .map(|job| {
            let fam = &families[job.family];
            let mut out: Vec<std::result::Result<RpoRecord, String>> = vec![Err(String::new()); energies.len()];
            let mut prev: Option<(f64, RpoRecord)> = None;
            for &lvl in &order {
                let e = energies[lvl];
                let mut attempt = |seed: RpoSeed| -> std::result::Result<RpoRecord, String> {
                    let rec = rpo_shoot(oracle, action, map, &seed, &shooting).map_err(|e| e.to_string())?;
                    let rec = canonical_period(oracle, action, map, rec, &shooting);
                    Ok(rec)
                };
                let mut res = Err("not attempted".to_string());
                if let Some((pe, pr)) = &prev {
                    if *pe > 0.0 && e > 0.0 {
                        let s = (e / pe).sqrt();
                        res = attempt(RpoSeed {
                            x0: s * pr.point(),
                            period: pr.period,
                            theta: pr.group_params.clone(),
                            finite_index: pr.finite_index,
                            energy: h0 + e,
                            moment: Some(vec![0.0; d]),
                        });
                    }
                }
                if res.is_err() {
                    res = linear_seed(oracle, &frame, fam, job, e, h0, d)
                        .map_err(|e| e.to_string())
                        .and_then(&mut attempt);
                }
                if let Ok(r) = &res {
                    prev = Some((e, r.clone()));
                }
                out[lvl] = res;
            }
            out
        })
        .collect();

    let rows: Vec<CensusRow> = (0..energies.len())
        .into_par_iter()
        .map(|lvl| {
            let mut distinct: Vec<RpoRecord> = Vec::new();
            let mut failures = Vec::new();
            let mut borderline = Vec::new();
            for (job, res) in jobs.iter().zip(&results) {
                match &res[lvl] {
                    Ok(rec) => {
                        let mut duplicate = false;
                        for (i, other) in distinct.iter().enumerate() {
                            let (same, dist) = same_orbit(oracle, action, rec, other, tol);
                            if let Some(dist) = dist {
                                if dist > tol.distinct_orbit && dist < 100.0 * tol.distinct_orbit {
                                    borderline.push(format!("{} vs record {i}: orbit distance {dist:.3e}", job.name));
                                }
                            }
                            if same {
                                duplicate = true;
                                break;
                            }
                        }
                        if !duplicate {
                            distinct.push(rec.clone());
                        }
                    }
                    Err(msg) => failures.push(SeedFailure {
                        job: job.name.clone(),
                        message: msg.clone(),
                    }),
                }
            }
            distinct.sort_by(|a, b| a.period.total_cmp(&b.period));
            for rec in distinct.iter_mut() {
                match weak_nondegeneracy(rec, oracle, action, map, None, tol) {
                    Ok(nd) => {
                        rec.nondeg_space_dim = Some(nd.dim);
                        rec.expected_dim = Some(nd.expected);
                        rec.weakly_nondegenerate = Some(nd.weakly_nondegenerate);
                    }
                    Err(e) => failures.push(SeedFailure {
                        job: format!("nondegeneracy of period {:.6}", rec.period),
                        message: e.to_string(),
                    }),
                }
            }
            CensusRow {
                energy: energies[lvl],
                count_found: distinct.len(),
                category_bound: category.n,
                pass: distinct.len() >= category.n,
                records: distinct,
                failures,
                borderline,
            }
        })
        .collect();

    Ok(CensusReport {
        freqs: frame.freqs.clone(),
        mode_weights: frame.weights.clone(),
        resonance,
        families,
        category,
        rows,
    })
}

/// Replace the period by the smallest relative period `T / k`, `k <= 12`.
pub fn canonical_period(
    oracle: &dyn HamiltonianOracle,
    action: &GroupAction,
    map: &MomentMap,
    mut rec: RpoRecord,
    opts: &ShootingOptions,
) -> RpoRecord {
    'outer: loop {
        let x = rec.point();
        for k in 2..=12usize {
            let t = rec.period / k as f64;
            let steps = shooting_steps(oracle, &x, t);
            let Ok(fr) = flow_steps(oracle, &x, t, steps, opts.flow, false, None) else {
                continue;
            };
            let al = action.align(&x, &fr.endpoint);
            if al.residual > 1e-6 * (1.0 + x.norm()) {
                continue;
            }
            let seed = RpoSeed {
                x0: x.clone(),
                period: t,
                theta: al.theta,
                finite_index: al.finite_index,
                energy: rec.energy,
                moment: Some(rec.moment.clone()),
            };
            if let Ok(r) = rpo_shoot(oracle, action, map, &seed, opts) {
                if (r.period - t).abs() < 1e-6 * t {
                    rec = r;
                    continue 'outer;
                }
            }
        }
        return rec;
    }
}

/// Distinctness rule; the second value is the orbit distance when it was computed.
pub fn same_orbit(
    oracle: &dyn HamiltonianOracle,
    action: &GroupAction,
    a: &RpoRecord,
    b: &RpoRecord,
    tol: &Tolerances,
) -> (bool, Option<f64>) {
    if (a.energy - b.energy).abs() > tol.distinct_energy {
        return (false, None);
    }
    if (a.period - b.period).abs() > tol.distinct_period * a.period.max(b.period) {
        return (false, None);
    }
    let dist = orbit_distance(oracle, action, a, &b.point());
    (dist <= tol.distinct_orbit, Some(dist))
}

/// `min over t, g of |g flow_t(x_a) - y|`, from 64 samples along the orbit
/// refined by Gauss-Newton in `(t, theta)`.
pub fn orbit_distance(oracle: &dyn HamiltonianOracle, action: &GroupAction, a: &RpoRecord, y: &Vector) -> f64 {
    let samples = 64;
    let seg = a.period / samples as f64;
    let seg_steps = (a.steps / samples).max(4);
    let opts = FlowOptions::default();
    let mut p = a.point();
    let mut best = (f64::INFINITY, p.clone(), Vec::new(), None);
    for j in 0..samples {
        if j > 0 {
            match flow_steps(oracle, &p, seg, seg_steps, opts, false, None) {
                Ok(fr) => p = fr.endpoint,
                Err(_) => return f64::INFINITY,
            }
        }
        let al = action.align(&p, y);
        if al.residual < best.0 {
            best = (al.residual, p.clone(), al.theta, al.finite_index);
        }
    }
    let (mut r, start, mut theta, f) = best;
    let j = standard_j(oracle.dim() / 2);
    let point_at = |tau: f64| -> Option<Vector> {
        if tau == 0.0 {
            return Some(start.clone());
        }
        let steps = ((tau.abs() / seg) * seg_steps as f64).ceil().max(1.0) as usize;
        flow_steps(oracle, &start, tau, steps, opts, false, None)
            .ok()
            .map(|fr| fr.endpoint)
    };
    let mut tau = 0.0;
    for _ in 0..10 {
        let Some(pt) = point_at(tau) else { break };
        let g = action.element(&theta, f);
        let res = &g * &pt - y;
        let mut cols = vec![&g * (&j * oracle.gradient(&pt))];
        cols.extend(action.element_derivatives(&theta, f).iter().map(|dg| dg * &pt));
        let jac = linalg::columns(y.len(), &cols);
        let step = linalg::lstsq(&jac, &(-&res), 1e-12);
        let new_tau = (tau + step[0]).clamp(-seg, seg);
        let new_theta: Vec<f64> = theta.iter().enumerate().map(|(i, t)| t + step[1 + i]).collect();
        let Some(np) = point_at(new_tau) else { break };
        let nr = (action.element(&new_theta, f) * np - y).norm();
        if nr >= r {
            break;
        }
        r = nr;
        tau = new_tau;
        theta = new_theta;
    }
    r
}
