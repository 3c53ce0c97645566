//! Scenario files.
//!
//! A scenario is a list of `key = value` lines. `#` starts a comment. Lines
//! that begin with whitespace continue the previous key as additional rows,
//! which is how matrices and polynomial terms are written:
//!
//! ```text
//! name = s1-example
//! n = 2
//! seed = 7
//! group.kind = torus            # trivial | torus | finite | general
//! group.weights = 1; -1         # one weight vector per complex coordinate
//! hamiltonian.terms =           # coefficient : exponents of x1..xn y1..yn
//!     1 : 2 0 0 0
//!     1 : 0 0 2 0
//!     2 : 0 2 0 0
//!     2 : 0 0 0 2
//! experiment = census           # census | check-re | reduce
//! experiment.energies = 0.01, 0.05
//! experiment.seeds = 2
//! tol.shooting = 1e-10
//! ```
//!
//! `group.generator` and `group.element` may be repeated, each followed by
//! `2n` matrix rows. `group.structure` rows read `a b k c` for
//! `[xi_a, xi_b] = ... + c xi_k` (0-based); when absent the constants are
//! computed from the generators. `experiment.point` is the base point for
//! `check-re`, `experiment.samples` the sample count for `reduce`.

use std::fmt;

use serde::Serialize;

use crate::group::{homogeneous_moment_map, GroupAction, MomentMap};
use crate::hamiltonian::{invariance_residual, Polynomial, PolynomialHamiltonian};
use crate::linalg::Mat;
use crate::symplectic::SymplecticSpace;
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ScenarioError {
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    Validation {
        field: String,
        message: String,
    },
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioError::Parse { line, column, message } => write!(f, "line {line}, column {column}: {message}"),
            ScenarioError::Validation { field, message } => write!(f, "{field}: {message}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GroupSpec {
    Trivial,
    Torus {
        weights: Vec<Vec<i64>>,
    },
    Finite {
        elements: Vec<Mat>,
    },
    General {
        generators: Vec<Mat>,
        structure: Option<Vec<f64>>,
        finite: Vec<Mat>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Experiment {
    CheckRe { point: Vec<f64> },
    Reduce { samples: usize },
    Census { energies: Vec<f64>, seeds: usize },
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::CheckRe { .. } => "check-re",
            Experiment::Reduce { .. } => "reduce",
            Experiment::Census { .. } => "census",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentParams {
    pub point: Option<Vec<f64>>,
    pub energies: Option<Vec<f64>>,
    pub seeds: usize,
    pub samples: usize,
}

impl ExperimentParams {
    /// The experiment `kind` (`census`, `check-re` or `reduce`) on `C^n`.
    pub fn experiment(&self, kind: &str, n: usize) -> Result<Experiment, Vec<ScenarioError>> {
        let invalid = |field: &str, message: String| ScenarioError::Validation {
            field: field.into(),
            message,
        };
        match kind {
            "census" => {
                let Some(energies) = self.energies.clone() else {
                    return Err(vec![invalid("experiment.energies", "required for a census".into())]);
                };
                if energies.is_empty() || energies.iter().any(|e| e.is_nan() || *e <= 0.0) {
                    return Err(vec![invalid(
                        "experiment.energies",
                        "need at least one energy, all positive".into(),
                    )]);
                }
                Ok(Experiment::Census {
                    energies,
                    seeds: self.seeds,
                })
            }
            "check-re" => {
                let point = self.point.clone().unwrap_or_else(|| vec![0.0; 2 * n]);
                if point.len() != 2 * n {
                    return Err(vec![invalid(
                        "experiment.point",
                        format!("has {} coordinates, expected {}", point.len(), 2 * n),
                    )]);
                }
                Ok(Experiment::CheckRe { point })
            }
            "reduce" => Ok(Experiment::Reduce { samples: self.samples }),
            other => Err(vec![invalid("experiment", format!("unknown experiment '{other}'"))]),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub n: usize,
    pub seed: u64,
    pub group: GroupSpec,
    pub terms: Vec<(f64, Vec<u32>)>,
    pub experiment: Experiment,
    /// Every `experiment.*` value given, so another experiment can be selected.
    pub params: ExperimentParams,
    pub tolerances: Tolerances,
    /// Source text, used for the provenance hash.
    pub source: String,
}

/// The objects a scenario describes.
pub struct System {
    pub action: GroupAction,
    pub map: MomentMap,
    pub hamiltonian: PolynomialHamiltonian,
}

struct Entry {
    key: String,
    line: usize,
    value: String,
    value_col: usize,
    rows: Vec<(usize, usize, String)>,
}

fn split_entries(text: &str, errors: &mut Vec<ScenarioError>) -> Vec<Entry> {
    let mut entries: Vec<Entry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        if content.starts_with(' ') || content.starts_with('\t') {
            let col = content.len() - content.trim_start().len() + 1;
            match entries.last_mut() {
                Some(e) => e.rows.push((line_no, col, content.trim().to_string())),
                None => errors.push(ScenarioError::Parse {
                    line: line_no,
                    column: col,
                    message: "continuation row without a preceding key".into(),
                }),
            }
            continue;
        }
        let Some(eq) = content.find('=') else {
            errors.push(ScenarioError::Parse {
                line: line_no,
                column: 1,
                message: "expected 'key = value'".into(),
            });
            continue;
        };
        let key = content[..eq].trim().to_string();
        let rest = &content[eq + 1..];
        let value_col = eq + 2 + (rest.len() - rest.trim_start().len());
        entries.push(Entry {
            key,
            line: line_no,
            value: rest.trim().to_string(),
            value_col,
            rows: Vec::new(),
        });
    }
    entries
}

fn parse_num<T: std::str::FromStr>(tok: &str, line: usize, col: usize, what: &str) -> Result<T, ScenarioError> {
    tok.parse::<T>().map_err(|_| ScenarioError::Parse {
        line,
        column: col,
        message: format!("cannot read '{tok}' as {what}"),
    })
}

/// Tokens with their 1-based columns, split on whitespace and commas.
fn tokens(s: &str, base_col: usize) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in s.char_indices() {
        let sep = ch.is_whitespace() || ch == ',';
        match (start, sep) {
            (None, false) => start = Some(i),
            (Some(st), true) => {
                out.push((base_col + st, &s[st..i]));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(st) = start {
        out.push((base_col + st, &s[st..]));
    }
    out
}

fn parse_matrix(e: &Entry, errors: &mut Vec<ScenarioError>) -> Option<Mat> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut ok = true;
    let mut sources: Vec<(usize, usize, String)> = Vec::new();
    if !e.value.is_empty() {
        sources.push((e.line, e.value_col, e.value.clone()));
    }
    sources.extend(e.rows.iter().cloned());
    for (line, col, text) in &sources {
        let mut row = Vec::new();
        for (c, tok) in tokens(text, *col) {
            match parse_num::<f64>(tok, *line, c, "a number") {
                Ok(v) => row.push(v),
                Err(err) => {
                    errors.push(err);
                    ok = false;
                }
            }
        }
        rows.push(row);
    }
    if !ok {
        return None;
    }
    let r = rows.len();
    let c = rows.first().map_or(0, |x| x.len());
    if rows.iter().any(|x| x.len() != c) {
        errors.push(ScenarioError::Parse {
            line: e.line,
            column: 1,
            message: format!("matrix for '{}' has rows of different lengths", e.key),
        });
        return None;
    }
    Some(Mat::from_fn(r, c, |i, j| rows[i][j]))
}

/// Parse and validate a scenario; all problems found are returned together.
pub fn parse_scenario(text: &str) -> Result<Scenario, Vec<ScenarioError>> {
    let mut errors = Vec::new();
    let entries = split_entries(text, &mut errors);
    let mut name = None;
    let mut n: Option<usize> = None;
    let mut seed = 0u64;
    let mut kind = None;
    let mut weights: Option<(usize, Vec<Vec<i64>>)> = None;
    let mut generators = Vec::new();
    let mut elements = Vec::new();
    let mut structure: Option<Vec<(usize, usize, usize, f64)>> = None;
    let mut terms: Option<Vec<(f64, Vec<u32>)>> = None;
    let mut experiment = None;
    let mut energies: Option<Vec<f64>> = None;
    let mut seeds = 2usize;
    let mut point: Option<Vec<f64>> = None;
    let mut samples = 1000usize;
    let mut tolerances = Tolerances::default();

    for e in &entries {
        let (line, col) = (e.line, e.value_col);
        let single = |errors: &mut Vec<ScenarioError>| {
            if !e.rows.is_empty() {
                errors.push(ScenarioError::Parse {
                    line: e.rows[0].0,
                    column: e.rows[0].1,
                    message: format!("'{}' takes a single value", e.key),
                });
            }
        };
        match e.key.as_str() {
            "name" => {
                single(&mut errors);
                name = Some(e.value.clone());
            }
            "n" => {
                single(&mut errors);
                match parse_num::<usize>(&e.value, line, col, "a positive integer") {
                    Ok(v) => n = Some(v),
                    Err(err) => errors.push(err),
                }
            }
            "seed" => {
                single(&mut errors);
                match parse_num::<u64>(&e.value, line, col, "an unsigned integer") {
                    Ok(v) => seed = v,
                    Err(err) => errors.push(err),
                }
            }
            "group.kind" => {
                single(&mut errors);
                match e.value.as_str() {
                    "trivial" | "torus" | "finite" | "general" => kind = Some(e.value.clone()),
                    other => errors.push(ScenarioError::Parse {
                        line,
                        column: col,
                        message: format!("unknown group kind '{other}'"),
                    }),
                }
            }
            "group.weights" => {
                let mut all = e.value.clone();
                for (_, _, r) in &e.rows {
                    all.push(';');
                    all.push_str(r);
                }
                let mut rows = Vec::new();
                let mut offset = col;
                for chunk in all.split(';') {
                    let mut row = Vec::new();
                    for (c, tok) in tokens(chunk, offset) {
                        match parse_num::<i64>(tok, line, c, "an integer weight") {
                            Ok(v) => row.push(v),
                            Err(err) => errors.push(err),
                        }
                    }
                    offset += chunk.len() + 1;
                    if !chunk.trim().is_empty() {
                        rows.push(row);
                    }
                }
                weights = Some((line, rows));
            }
            "group.generator" => {
                if let Some(m) = parse_matrix(e, &mut errors) {
                    generators.push(m);
                }
            }
            "group.element" => {
                if let Some(m) = parse_matrix(e, &mut errors) {
                    elements.push(m);
                }
            }
            "group.structure" => {
                let mut list = Vec::new();
                let mut sources = Vec::new();
                if !e.value.is_empty() {
                    sources.push((line, col, e.value.clone()));
                }
                sources.extend(e.rows.iter().cloned());
                for (l, c0, text) in sources {
                    let toks = tokens(&text, c0);
                    if toks.len() != 4 {
                        errors.push(ScenarioError::Parse {
                            line: l,
                            column: c0,
                            message: "structure rows read 'a b k c'".into(),
                        });
                        continue;
                    }
                    let idx: Vec<Result<usize, _>> = toks[..3]
                        .iter()
                        .map(|(c, t)| parse_num::<usize>(t, l, *c, "an index"))
                        .collect();
                    let val = parse_num::<f64>(toks[3].1, l, toks[3].0, "a number");
                    match (idx.into_iter().collect::<Result<Vec<_>, _>>(), val) {
                        (Ok(i), Ok(v)) => list.push((i[0], i[1], i[2], v)),
                        (Err(err), _) | (_, Err(err)) => errors.push(err),
                    }
                }
                structure = Some(list);
            }
            "hamiltonian.terms" => {
                let mut list = Vec::new();
                let mut sources = Vec::new();
                if !e.value.is_empty() {
                    sources.push((line, col, e.value.clone()));
                }
                sources.extend(e.rows.iter().cloned());
                for (l, c0, text) in sources {
                    let Some(colon) = text.find(':') else {
                        errors.push(ScenarioError::Parse {
                            line: l,
                            column: c0,
                            message: "term rows read 'coefficient : exponents'".into(),
                        });
                        continue;
                    };
                    let coef = parse_num::<f64>(text[..colon].trim(), l, c0, "a coefficient");
                    let exps: Result<Vec<u32>, _> = tokens(&text[colon + 1..], c0 + colon + 1)
                        .into_iter()
                        .map(|(c, t)| parse_num::<u32>(t, l, c, "a nonnegative exponent"))
                        .collect();
                    match (coef, exps) {
                        (Ok(c), Ok(x)) => list.push((c, x)),
                        (Err(err), _) | (_, Err(err)) => errors.push(err),
                    }
                }
                terms = Some(list);
            }
            "experiment" => {
                single(&mut errors);
                match e.value.as_str() {
                    "census" | "check-re" | "reduce" => experiment = Some(e.value.clone()),
                    other => errors.push(ScenarioError::Parse {
                        line,
                        column: col,
                        message: format!("unknown experiment '{other}'"),
                    }),
                }
            }
            "experiment.energies" => {
                let mut list = Vec::new();
                for (c, tok) in tokens(&e.value, col) {
                    match parse_num::<f64>(tok, line, c, "an energy") {
                        Ok(v) => list.push(v),
                        Err(err) => errors.push(err),
                    }
                }
                energies = Some(list);
            }
            "experiment.seeds" => match parse_num::<usize>(&e.value, line, col, "a count") {
                Ok(v) => seeds = v,
                Err(err) => errors.push(err),
            },
            "experiment.samples" => match parse_num::<usize>(&e.value, line, col, "a count") {
                Ok(v) => samples = v,
                Err(err) => errors.push(err),
            },
            "experiment.point" => {
                let mut list = Vec::new();
                for (c, tok) in tokens(&e.value, col) {
                    match parse_num::<f64>(tok, line, c, "a coordinate") {
                        Ok(v) => list.push(v),
                        Err(err) => errors.push(err),
                    }
                }
                point = Some(list);
            }
            key if key.starts_with("tol.") => match parse_num::<f64>(&e.value, line, col, "a tolerance") {
                Ok(v) => {
                    if let Err(err) = tolerances.set(&key[4..], v) {
                        errors.push(ScenarioError::Validation {
                            field: key.to_string(),
                            message: err.to_string(),
                        });
                    }
                }
                Err(err) => errors.push(err),
            },
            other => errors.push(ScenarioError::Parse {
                line,
                column: 1,
                message: format!("unknown key '{other}'"),
            }),
        }
    }

    let invalid = |field: &str, message: String| ScenarioError::Validation {
        field: field.into(),
        message,
    };
    let n = match n {
        Some(0) => {
            errors.push(invalid("n", "must be positive".into()));
            None
        }
        Some(v) => Some(v),
        None => {
            errors.push(invalid("n", "missing".into()));
            None
        }
    };
    let kind = kind.unwrap_or_else(|| "trivial".into());
    let group = match kind.as_str() {
        "trivial" => GroupSpec::Trivial,
        "torus" => match weights {
            Some((_, w)) => {
                if let Some(n) = n {
                    if w.len() != n {
                        errors.push(invalid(
                            "group.weights",
                            format!(
                                "has {} weight vectors, expected one per complex coordinate (n = {n})",
                                w.len()
                            ),
                        ));
                    }
                }
                let d = w.first().map_or(0, |r| r.len());
                if w.iter().any(|r| r.len() != d) {
                    errors.push(invalid("group.weights", "weight vectors have different lengths".into()));
                }
                GroupSpec::Torus { weights: w }
            }
            None => {
                errors.push(invalid("group.weights", "required for a torus".into()));
                GroupSpec::Trivial
            }
        },
        "finite" => GroupSpec::Finite {
            elements: elements.clone(),
        },
        _ => {
            let structure = structure.as_ref().map(|list| {
                let d = generators.len();
                let mut c = vec![0.0; d * d * d];
                for &(a, b, k, v) in list {
                    if a < d && b < d && k < d {
                        c[(a * d + b) * d + k] = v;
                    } else {
                        errors.push(invalid(
                            "group.structure",
                            format!("index out of range in ({a} {b} {k})"),
                        ));
                    }
                }
                c
            });
            GroupSpec::General {
                generators: generators.clone(),
                structure,
                finite: elements.clone(),
            }
        }
    };
    if let Some(n) = n {
        for (what, list) in [("group.generator", &generators), ("group.element", &elements)] {
            for (i, m) in list.iter().enumerate() {
                if m.nrows() != 2 * n || m.ncols() != 2 * n {
                    errors.push(invalid(
                        what,
                        format!(
                            "matrix {i} is {}x{}, expected {}x{}",
                            m.nrows(),
                            m.ncols(),
                            2 * n,
                            2 * n
                        ),
                    ));
                }
            }
        }
    }
    let terms = terms.unwrap_or_else(|| {
        errors.push(invalid("hamiltonian.terms", "missing".into()));
        Vec::new()
    });
    if let Some(n) = n {
        for (i, (_, e)) in terms.iter().enumerate() {
            if e.len() != 2 * n {
                errors.push(invalid(
                    "hamiltonian.terms",
                    format!("term {i} has {} exponents, expected {}", e.len(), 2 * n),
                ));
            }
        }
    }
    let params = ExperimentParams {
        point,
        energies,
        seeds,
        samples,
    };
    let experiment = match experiment.as_deref() {
        Some(kind) => match params.experiment(kind, n.unwrap_or(0)) {
            Ok(e) => Some(e),
            Err(mut errs) => {
                if n.is_some() {
                    errors.append(&mut errs);
                }
                None
            }
        },
        None => {
            errors.push(invalid("experiment", "missing".into()));
            None
        }
    };
    if !errors.is_empty() {
        return Err(errors);
    }
    let scenario = Scenario {
        name: name.unwrap_or_else(|| "scenario".into()),
        n: n.expect("checked"),
        seed,
        group,
        terms,
        experiment: experiment.expect("checked"),
        params,
        tolerances,
        source: text.to_string(),
    };
    match scenario.build() {
        Ok(system) => {
            let r = invariance_residual(&system.hamiltonian, &system.action, 200, scenario.seed);
            if r > scenario.tolerances.invariance {
                return Err(vec![invalid(
                    "hamiltonian.terms",
                    format!(
                        "Hamiltonian is not invariant under the declared group: invariance residual {r:.3e} exceeds {:.1e}",
                        scenario.tolerances.invariance
                    ),
                )]);
            }
            Ok(scenario)
        }
        Err(e) => Err(vec![e]),
    }
}

impl Scenario {
    /// Switch to another experiment using the parameters given in the file.
    pub fn select_experiment(&mut self, kind: &str) -> Result<(), Vec<ScenarioError>> {
        self.experiment = self.params.experiment(kind, self.n)?;
        Ok(())
    }

    /// Group action, moment map and Hamiltonian.
    pub fn build(&self) -> Result<System, ScenarioError> {
        let wrap = |field: &str| {
            let field = field.to_string();
            move |e: crate::Error| ScenarioError::Validation {
                field: field.clone(),
                message: e.to_string(),
            }
        };
        let space = SymplecticSpace::new(self.n).map_err(wrap("n"))?;
        let action = match &self.group {
            GroupSpec::Trivial => GroupAction::trivial(space),
            GroupSpec::Torus { weights } => {
                GroupAction::torus(space, weights.clone()).map_err(wrap("group.weights"))?
            }
            GroupSpec::Finite { elements } => {
                GroupAction::finite(space, elements.clone()).map_err(wrap("group.element"))?
            }
            GroupSpec::General {
                generators,
                structure,
                finite,
            } => GroupAction::general(space, generators.clone(), structure.clone(), finite.clone())
                .map_err(wrap("group.generator"))?,
        };
        let map = homogeneous_moment_map(&action).map_err(wrap("group.generator"))?;
        let poly = Polynomial::from_terms(2 * self.n, &self.terms).map_err(wrap("hamiltonian.terms"))?;
        let hamiltonian = PolynomialHamiltonian::new(poly).map_err(wrap("hamiltonian.terms"))?;
        Ok(System {
            action,
            map,
            hamiltonian,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
name = oscillator
n = 1
group.kind = trivial
hamiltonian.terms =
    0.5 : 2 0
    0.5 : 0 2
experiment = census
experiment.energies = 0.1
";

    #[test]
    fn minimal_scenario_parses() {
        let s = parse_scenario(MINIMAL).unwrap();
        assert_eq!(s.n, 1);
        assert_eq!(s.terms.len(), 2);
        assert!(matches!(s.experiment, Experiment::Census { .. }));
    }

    #[test]
    fn weight_count_mismatch_names_field() {
        let text =
            "n = 2\ngroup.kind = torus\ngroup.weights = 1\nhamiltonian.terms =\n  1 : 2 0 0 0\nexperiment = reduce\n";
        let errs = parse_scenario(text).unwrap_err();
        assert!(errs
            .iter()
            .any(|e| matches!(e, ScenarioError::Validation { field, .. } if field == "group.weights")));
    }

    #[test]
    fn all_errors_are_collected() {
        let text = "n = x\nbogus = 1\ngroup.kind = torus\ngroup.weights = 1; a\nexperiment = census\n";
        let errs = parse_scenario(text).unwrap_err();
        assert!(errs.len() >= 4, "{errs:?}");
        assert!(errs.contains(&ScenarioError::Parse {
            line: 1,
            column: 5,
            message: "cannot read 'x' as a positive integer".into()
        }));
        assert!(errs.iter().any(|e| matches!(
            e,
            ScenarioError::Parse {
                line: 4,
                column: 20,
                ..
            }
        )));
    }

    #[test]
    fn non_invariant_hamiltonian_rejected() {
        let text = "n = 2\ngroup.kind = torus\ngroup.weights = 1; -1\nhamiltonian.terms =\n  1 : 2 0 0 0\n  1 : 0 2 0 0\nexperiment = reduce\n";
        let errs = parse_scenario(text).unwrap_err();
        match &errs[0] {
            ScenarioError::Validation { field, message } => {
                assert_eq!(field, "hamiltonian.terms");
                assert!(message.contains("invariance residual"));
            }
            other => panic!("{other:?}"),
        }
    }
}
