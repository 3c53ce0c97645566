//! Named numerical tolerances. Every field can be overridden by name from a
//! scenario file or the command line, and the full set is copied into each
//! report.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::RankPolicy;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// Relative zero threshold for singular values.
    pub rank_zero: f64,
    /// Maximal ratio between the first discarded and last kept singular value.
    pub rank_gap: f64,
    /// Relative-equilibrium gate, relative to `1 + |grad h|`.
    pub releq: f64,
    /// Zero threshold for restricted Hessian eigenvalues, relative to the spectral radius.
    pub hessian_zero: f64,
    /// Target `|Phi(v)|` for zero-level samples.
    pub zero_level: f64,
    /// Target `| |v| - 1 |` for zero-level samples.
    pub sphere: f64,
    /// Closure residual for relative periodic orbits, relative to `1 + |x|`.
    pub shooting: f64,
    /// Residual of the implicit midpoint equations.
    pub inner_newton: f64,
    pub distinct_energy: f64,
    /// Relative period difference.
    pub distinct_period: f64,
    pub distinct_orbit: f64,
    /// Lemma 1 scan minima at or below this are flagged.
    pub lemma1_flag: f64,
    pub resonance: f64,
    /// Invariance residual of the Hamiltonian, relative to `1 + |h|`.
    pub invariance: f64,
    pub equivariance: f64,
    /// Zero threshold for the weak-nondegeneracy rank decision.
    pub nondeg_zero: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rank_zero: 1e-9,
            rank_gap: 1e-6,
            releq: 1e-8,
            hessian_zero: 1e-8,
            zero_level: 1e-10,
            sphere: 1e-12,
            shooting: 1e-10,
            inner_newton: 1e-14,
            distinct_energy: 1e-8,
            distinct_period: 1e-6,
            distinct_orbit: 1e-5,
            lemma1_flag: 1e-3,
            resonance: 1e-9,
            invariance: 1e-9,
            equivariance: 1e-9,
            nondeg_zero: 1e-7,
        }
    }
}

impl Tolerances {
    pub const NAMES: [&'static str; 16] = [
        "rank_zero",
        "rank_gap",
        "releq",
        "hessian_zero",
        "zero_level",
        "sphere",
        "shooting",
        "inner_newton",
        "distinct_energy",
        "distinct_period",
        "distinct_orbit",
        "lemma1_flag",
        "resonance",
        "invariance",
        "equivariance",
        "nondeg_zero",
    ];

    fn slot(&mut self, name: &str) -> Option<&mut f64> {
        Some(match name {
            "rank_zero" => &mut self.rank_zero,
            "rank_gap" => &mut self.rank_gap,
            "releq" => &mut self.releq,
            "hessian_zero" => &mut self.hessian_zero,
            "zero_level" => &mut self.zero_level,
            "sphere" => &mut self.sphere,
            "shooting" => &mut self.shooting,
            "inner_newton" => &mut self.inner_newton,
            "distinct_energy" => &mut self.distinct_energy,
            "distinct_period" => &mut self.distinct_period,
            "distinct_orbit" => &mut self.distinct_orbit,
            "lemma1_flag" => &mut self.lemma1_flag,
            "resonance" => &mut self.resonance,
            "invariance" => &mut self.invariance,
            "equivariance" => &mut self.equivariance,
            "nondeg_zero" => &mut self.nondeg_zero,
            _ => return None,
        })
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::InvalidInput(format!(
                "tolerance {name} must be positive, got {value}"
            )));
        }
        let slot = self
            .slot(name)
            .ok_or_else(|| Error::InvalidInput(format!("unknown tolerance '{name}'")))?;
        *slot = value;
        Ok(())
    }

    pub fn rank_policy(&self) -> RankPolicy {
        RankPolicy {
            zero_tol: self.rank_zero,
            gap_ratio: self.rank_gap,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_name_is_settable() {
        let mut t = Tolerances::default();
        for name in Tolerances::NAMES {
            t.set(name, 0.5).unwrap();
        }
        assert_eq!(t.rank_gap, 0.5);
        assert!(t.set("nope", 1.0).is_err());
        assert!(t.set("releq", -1.0).is_err());
    }
}
