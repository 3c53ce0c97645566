//! Running scenarios and writing their reports.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::dynamics::{lemma1_scan, level_census, CensusOptions, CensusReport, Lemma1Scan};
use crate::error::Error;
use crate::group::equivariance_residual;
use crate::hamiltonian::quadratic_part;
use crate::linalg::Vector;
use crate::reduction::{
    category_lower_bound, resonance_torus, sample_zero_level, stratify, table_category, CategoryBound, LinkDescriptor,
    ResonanceTorus,
};
use crate::releq::{slice_hessian_test, RelEqReport};
use crate::symplectic::williamson;
use crate::tolerance::Tolerances;

use super::scenario::{Experiment, Scenario};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INFRASTRUCTURE: i32 = 2;
pub const EXIT_BOUND_VIOLATION: i32 = 3;

/// Samples of the zero level kept in the link descriptor of a reduce report.
const LINK_SAMPLES: usize = 32;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub tolerances: Vec<(String, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub scenario: String,
    pub experiment: &'static str,
    pub scenario_sha256: String,
    pub seed: u64,
    pub version: &'static str,
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReduceReport {
    pub equivariance_residual: f64,
    pub link: LinkDescriptor,
    pub category: CategoryBound,
    /// Only for a definite quadratic part.
    pub resonance: Option<ResonanceTorus>,
    pub lemma1: Lemma1Scan,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportBody {
    CheckRe(RelEqReport),
    Reduce(ReduceReport),
    Census(CensusReport),
    Error { message: String },
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportBundle {
    pub provenance: Provenance,
    pub status: &'static str,
    pub exit_code: i32,
    pub report: ReportBody,
}

fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Apply seed and tolerance overrides.
pub fn apply_overrides(scenario: &mut Scenario, opts: &RunOptions) -> crate::Result<()> {
    if let Some(seed) = opts.seed {
        scenario.seed = seed;
    }
    for (name, value) in &opts.tolerances {
        scenario.tolerances.set(name, *value)?;
    }
    Ok(())
}

pub fn run(scenario: &Scenario) -> ReportBundle {
    let provenance = Provenance {
        scenario: scenario.name.clone(),
        experiment: scenario.experiment.name(),
        scenario_sha256: sha256_hex(&scenario.source),
        seed: scenario.seed,
        version: env!("CARGO_PKG_VERSION"),
        tolerances: scenario.tolerances,
    };
    let (status, exit_code, report) = match execute(scenario) {
        Ok(ReportBody::Census(c)) if !c.all_pass() => ("bound-violation", EXIT_BOUND_VIOLATION, ReportBody::Census(c)),
        Ok(body) => ("ok", EXIT_OK, body),
        Err(e) => (
            "error",
            EXIT_INFRASTRUCTURE,
            ReportBody::Error { message: e.to_string() },
        ),
    };
    ReportBundle {
        provenance,
        status,
        exit_code,
        report,
    }
}

fn execute(scenario: &Scenario) -> crate::Result<ReportBody> {
    let system = scenario.build().map_err(|e| Error::InvalidInput(e.to_string()))?;
    let (action, map, h) = (&system.action, &system.map, &system.hamiltonian);
    let tol = &scenario.tolerances;
    match &scenario.experiment {
        Experiment::CheckRe { point } => {
            let m = Vector::from_column_slice(point);
            Ok(ReportBody::CheckRe(slice_hessian_test(h, action, map, &m, tol)?))
        }
        Experiment::Reduce { samples } => {
            let eq = equivariance_residual(action, map, 32, scenario.seed);
            let points = sample_zero_level(action, map, (*samples).max(1), scenario.seed, tol)?;
            let link = stratify(action, &points[..points.len().min(LINK_SAMPLES)])?;
            let category = category_lower_bound(&link);
            let q = quadratic_part(h)?;
            let resonance = if q.is_positive_definite(tol.rank_zero) {
                let freqs = williamson(action.space(), &q, None)?.freqs;
                Some(resonance_torus(&freqs, 12, tol.resonance))
            } else {
                None
            };
            let lemma1 = lemma1_scan(map, &q, &points, tol.lemma1_flag);
            Ok(ReportBody::Reduce(ReduceReport {
                equivariance_residual: eq,
                link,
                category,
                resonance,
                lemma1,
            }))
        }
        Experiment::Census { energies, seeds } => {
            let opts = CensusOptions {
                seeds_per_level: *seeds,
                seed: scenario.seed,
                tol: *tol,
                ..CensusOptions::default()
            };
            Ok(ReportBody::Census(level_census(h, action, map, energies, &opts)?))
        }
    }
}

impl ReportBundle {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let p = &self.provenance;
        let mut s = String::new();
        let _ = writeln!(s, "scenario   {} ({})", p.scenario, p.experiment);
        let _ = writeln!(s, "sha256     {}", p.scenario_sha256);
        let _ = writeln!(s, "seed       {}", p.seed);
        let _ = writeln!(s, "version    {}", p.version);
        let _ = writeln!(s, "status     {} (exit {})", self.status, self.exit_code);
        s.push('\n');
        match &self.report {
            ReportBody::Error { message } => {
                let _ = writeln!(s, "error: {message}");
            }
            ReportBody::CheckRe(r) => {
                let _ = writeln!(s, "verdict            {:?}", r.verdict);
                let _ = writeln!(s, "point              {:?}", r.point);
                let _ = writeln!(s, "momentum           {:?}", r.mu.mu);
                let _ = writeln!(s, "velocity           {:?}", r.eta);
                let _ = writeln!(s, "residual           {:.3e}", r.residual);
                let _ = writeln!(s, "hessian spectrum   {:?}", r.hessian_eigenvalues);
                let _ = writeln!(
                    s,
                    "positive / zero    {} (threshold {:.1e})",
                    r.positive_count, r.zero_threshold
                );
                if let Some(sl) = &r.slice {
                    let _ = writeln!(
                        s,
                        "slice dimension    {} (kernel {}, orbit {})",
                        sl.slice_dim,
                        sl.kernel_basis.ncols(),
                        sl.orbit_tangent_basis.ncols()
                    );
                }
                let _ = writeln!(s, "orbit restriction  {:.3e}", r.orbit_tangent_residual);
            }
            ReportBody::Reduce(r) => {
                if let Some(c) = &r.link.certificate {
                    let _ = writeln!(s, "zero level   {c}");
                }
                let _ = writeln!(s, "equivariance residual {:.3e}", r.equivariance_residual);
                let _ = writeln!(s, "\n  id  dim  link  closed  model");
                for st in &r.link.strata {
                    let model = st.model.as_ref().map_or("-".to_string(), |m| table_category(m).0);
                    let _ = writeln!(
                        s,
                        "  {:>2}  {:>3}  {:>4}  {:>6}  {model}",
                        st.id, st.real_dimension, st.symplectic_link_dimension, st.closed
                    );
                }
                let _ = writeln!(s, "\ncategory bound N = {}", r.category.n);
                for c in &r.category.per_stratum {
                    let fb = if c.fallback { " (fallback)" } else { "" };
                    let _ = writeln!(s, "  stratum {}: cat {} = {}{fb}", c.stratum, c.space, c.cat);
                }
                if let Some(res) = &r.resonance {
                    let _ = writeln!(s, "resonance torus rank {} for frequencies {:?}", res.rank, res.freqs);
                }
                let _ = writeln!(
                    s,
                    "transversality: min distance {:.3e} over {} samples{}",
                    r.lemma1.min_distance,
                    r.lemma1.samples,
                    if r.lemma1.hypothesis_violation {
                        " (FLAGGED)"
                    } else {
                        ""
                    }
                );
            }
            ReportBody::Census(c) => {
                let _ = writeln!(s, "frequencies {:?}", c.freqs);
                let _ = writeln!(s, "category bound N = {}", c.category.n);
                let _ = writeln!(s, "\n  energy        found  N  pass");
                for row in &c.rows {
                    let _ = writeln!(
                        s,
                        "  {:<12}  {:>5}  {}  {}",
                        row.energy, row.count_found, row.category_bound, row.pass
                    );
                }
                s.push_str("\n  energy        period        group             residual   nondeg\n");
                for row in &c.rows {
                    for r in &row.records {
                        let nd = match (r.nondeg_space_dim, r.expected_dim) {
                            (Some(a), Some(b)) => format!("{a}/{b}"),
                            _ => "-".into(),
                        };
                        let g: Vec<String> = r.group_params.iter().map(|x| format!("{x:.6}")).collect();
                        let _ = writeln!(
                            s,
                            "  {:<12}  {:<12.8}  {:<16}  {:.2e}   {nd}",
                            row.energy,
                            r.period,
                            format!("[{}]", g.join(", ")),
                            r.shooting_residual
                        );
                    }
                    for f in &row.failures {
                        let _ = writeln!(s, "  {:<12}  failed: {}: {}", row.energy, f.job, f.message);
                    }
                    for b in &row.borderline {
                        let _ = writeln!(s, "  {:<12}  borderline: {b}", row.energy);
                    }
                }
            }
        }
        s
    }

    /// Write `<name>.<experiment>.json` and `.txt` into `dir`.
    pub fn write(&self, dir: &Path) -> std::io::Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let stem = format!("{}.{}", self.provenance.scenario, self.provenance.experiment);
        let json = dir.join(format!("{stem}.json"));
        let text = dir.join(format!("{stem}.txt"));
        std::fs::write(&json, self.to_json())?;
        std::fs::write(&text, self.to_text())?;
        Ok((json, text))
    }
}
