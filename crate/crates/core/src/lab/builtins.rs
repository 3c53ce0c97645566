//! Built-in example scenarios.
//!
//! Each one is written out as scenario text and parsed back, so the built-ins
//! exercise exactly the same path as files on disk.

use crate::hamiltonian::{abs2, re_product, Polynomial};

use super::scenario::{parse_scenario, Scenario, ScenarioError};

pub struct Builtin {
    pub name: &'static str,
    pub summary: &'static str,
    text: fn() -> String,
}

impl Builtin {
    pub fn text(&self) -> String {
        (self.text)()
    }

    pub fn scenario(&self) -> Result<Scenario, Vec<ScenarioError>> {
        parse_scenario(&self.text())
    }
}

/// Scenario text for a polynomial Hamiltonian.
pub fn scenario_text(name: &str, n: usize, group: &[&str], h: &Polynomial, experiment: &[&str]) -> String {
    let mut s = format!("name = {name}\nn = {n}\nseed = 0\n");
    for line in group {
        s.push_str(line);
        s.push('\n');
    }
    s.push_str("hamiltonian.terms =\n");
    for (exps, c) in h.terms() {
        let e: Vec<String> = exps.iter().map(|k| k.to_string()).collect();
        s.push_str(&format!("    {c:?} : {}\n", e.join(" ")));
    }
    for line in experiment {
        s.push_str(line);
        s.push('\n');
    }
    s
}

fn r2(n: usize) -> Polynomial {
    (0..n).fold(Polynomial::zero(2 * n), |acc, k| &acc + &abs2(n, k))
}

fn quartic(n: usize) -> Polynomial {
    let r = r2(n);
    &r * &r
}

const TRIVIAL: &[&str] = &["group.kind = trivial"];
const CIRCLE_1_M1: &[&str] = &["group.kind = torus", "group.weights = 1; -1"];
const WEINSTEIN_ENERGIES: &str = "experiment.energies = 0.01, 0.02, 0.05, 0.1, 0.2";

fn trivial_point() -> String {
    let h = abs2(1, 0).scale(0.5);
    scenario_text(
        "trivial-point",
        1,
        TRIVIAL,
        &h,
        &["experiment = check-re", "experiment.point = 0 0"],
    )
}

fn weinstein() -> String {
    let h = &(&abs2(2, 0) + &abs2(2, 1).scale(2.0)) + &quartic(2);
    scenario_text(
        "weinstein-2modes",
        2,
        TRIVIAL,
        &h,
        &["experiment = census", WEINSTEIN_ENERGIES, "experiment.seeds = 2"],
    )
}

fn irrational() -> String {
    let h = &(&abs2(2, 0) + &abs2(2, 1).scale(2f64.sqrt())) + &quartic(2).scale(0.5);
    scenario_text(
        "irrational-2modes",
        2,
        TRIVIAL,
        &h,
        &[
            "experiment = census",
            "experiment.energies = 0.01, 0.05, 0.1",
            "experiment.seeds = 2",
        ],
    )
}

fn resonant() -> String {
    let h = &r2(2) + &quartic(2);
    scenario_text(
        "resonant-2modes",
        2,
        TRIVIAL,
        &h,
        &[
            "experiment = census",
            "experiment.energies = 0.01, 0.05",
            "experiment.seeds = 2",
        ],
    )
}

fn antipodal() -> String {
    let h = &(&abs2(2, 0) + &abs2(2, 1).scale(2.0)) + &quartic(2);
    scenario_text(
        "z2-antipodal-2modes",
        2,
        &[
            "group.kind = finite",
            "group.element =",
            "    -1 0 0 0",
            "    0 -1 0 0",
            "    0 0 -1 0",
            "    0 0 0 -1",
        ],
        &h,
        &[
            "experiment = census",
            "experiment.energies = 0.01, 0.05",
            "experiment.seeds = 2",
        ],
    )
}

fn s1_two() -> String {
    let re = re_product(2, 0, 1);
    let h = &(&(&abs2(2, 0) + &abs2(2, 1).scale(2.0)) + &quartic(2)) + &(&re * &re).scale(0.5);
    scenario_text(
        "s1-weights-1-minus1",
        2,
        CIRCLE_1_M1,
        &h,
        &[
            "experiment = census",
            "experiment.energies = 0.01, 0.05, 0.1",
            "experiment.seeds = 2",
        ],
    )
}

fn s1_three() -> String {
    let h = &(&(&abs2(3, 0) + &abs2(3, 1).scale(2.0)) + &abs2(3, 2).scale(3.0)) + &quartic(3);
    scenario_text(
        "s1-weights-1-1-minus1",
        3,
        &["group.kind = torus", "group.weights = 1; 1; -1"],
        &h,
        &[
            "experiment = census",
            "experiment.energies = 0.01, 0.05",
            "experiment.seeds = 2",
        ],
    )
}

fn empty_level() -> String {
    let h = &abs2(2, 0) + &abs2(2, 1);
    scenario_text(
        "empty-level",
        2,
        &["group.kind = torus", "group.weights = 1; 1"],
        &h,
        &["experiment = reduce", "experiment.samples = 64"],
    )
}

fn noninvariant() -> String {
    let x1 = Polynomial::var(4, 0);
    let h = &(&abs2(2, 0) + &abs2(2, 1).scale(2.0)) + &(&x1 * &x1);
    scenario_text(
        "negative-control-noninvariant",
        2,
        CIRCLE_1_M1,
        &h,
        &["experiment = reduce", "experiment.samples = 64"],
    )
}

fn indefinite() -> String {
    let h = &abs2(2, 0) - &abs2(2, 1);
    scenario_text(
        "s1-indefinite-control",
        2,
        CIRCLE_1_M1,
        &h,
        &["experiment = reduce", "experiment.samples = 1000"],
    )
}

fn relative_equilibrium() -> String {
    let h = &(&abs2(2, 0) + &abs2(2, 1).scale(2.0)) + &(&abs2(2, 0) * &abs2(2, 1));
    scenario_text(
        "s1-relative-equilibrium",
        2,
        CIRCLE_1_M1,
        &h,
        &["experiment = check-re", "experiment.point = 0.5 0 0 0"],
    )
}

fn saddle() -> String {
    let h = &abs2(2, 0).scale(-0.5) + &abs2(2, 1).scale(3.5);
    scenario_text(
        "saddle-control",
        2,
        CIRCLE_1_M1,
        &h,
        &["experiment = check-re", "experiment.point = 0 0 0 0"],
    )
}

pub const BUILTINS: &[Builtin] = &[
    Builtin {
        name: "trivial-point",
        summary: "one harmonic oscillator, equilibrium at the origin",
        text: trivial_point,
    },
    Builtin {
        name: "weinstein-2modes",
        summary: "two nonresonant modes (frequencies 2, 4) with a quartic term; expect 2 periodic orbits per level",
        text: weinstein,
    },
    Builtin {
        name: "irrational-2modes",
        summary: "frequency ratio sqrt(2); nondegenerate normal-mode orbits",
        text: irrational,
    },
    Builtin {
        name: "resonant-2modes",
        summary: "1:1 resonance; every orbit is periodic, so the orbits found are degenerate",
        text: resonant,
    },
    Builtin {
        name: "z2-antipodal-2modes",
        summary: "two modes with the antipodal Z/2 symmetry",
        text: antipodal,
    },
    Builtin {
        name: "s1-weights-1-minus1",
        summary: "circle action with weights (1, -1); the reduced link is a point",
        text: s1_two,
    },
    Builtin {
        name: "s1-weights-1-1-minus1",
        summary: "circle action with weights (1, 1, -1) on three modes",
        text: s1_three,
    },
    Builtin {
        name: "empty-level",
        summary: "circle action with weights (1, 1); the zero level is the origin",
        text: empty_level,
    },
    Builtin {
        name: "negative-control-noninvariant",
        summary: "Hamiltonian not invariant under the declared circle action; rejected",
        text: noninvariant,
    },
    Builtin {
        name: "s1-indefinite-control",
        summary: "indefinite quadratic part; the transversality hypothesis fails",
        text: indefinite,
    },
    Builtin {
        name: "s1-relative-equilibrium",
        summary: "relative equilibrium off the origin for a circle action",
        text: relative_equilibrium,
    },
    Builtin {
        name: "saddle-control",
        summary: "saddle at the origin; the slice Hessian is indefinite",
        text: saddle,
    },
];

pub fn builtin(name: &str) -> Option<&'static Builtin> {
    BUILTINS.iter().find(|b| b.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_parse_except_negative_control() {
        for b in BUILTINS {
            let r = b.scenario();
            if b.name == "negative-control-noninvariant" {
                assert!(r.is_err());
            } else {
                let s = r.unwrap_or_else(|e| panic!("{}: {e:?}", b.name));
                assert_eq!(s.name, b.name);
            }
        }
    }

    #[test]
    fn terms_round_trip() {
        let s = builtin("irrational-2modes").unwrap().scenario().unwrap();
        let sqrt2 = s.terms.iter().find(|(_, e)| e == &vec![0, 2, 0, 0]).unwrap().0;
        assert_eq!(sqrt2, 2f64.sqrt());
    }
}
