//! Integer relations among normal-mode frequencies and the rank of the torus
//! they generate.

use serde::Serialize;

use super::hull;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResonanceTorus {
    pub freqs: Vec<f64>,
    /// Dimension of the closure of the one-parameter group generated by `q`.
    pub rank: usize,
    /// Hermite basis of the relation lattice found in the search box.
    pub relation_lattice: Vec<Vec<i64>>,
    pub bound: i64,
}

/// Largest search box, in number of candidate vectors.
const MAX_CANDIDATES: u64 = 20_000_000;

/// Exhaustive search for `k` with `|k_i| <= bound` and
/// `|k . omega| <= tol |k| |omega|`.
pub fn resonance_torus(freqs: &[f64], bound: i64, tol: f64) -> ResonanceTorus {
    let n = freqs.len();
    let mut bound = bound.max(1);
    while n > 0 && ((2 * bound + 1) as u64).saturating_pow(n as u32) > MAX_CANDIDATES && bound > 1 {
        bound -= 1;
    }
    let wnorm = freqs.iter().map(|w| w * w).sum::<f64>().sqrt();
    let mut relations = Vec::new();
    let mut k = vec![-bound; n];
    if n > 0 {
        loop {
            let first = k.iter().find(|&&x| x != 0);
            if first.is_some_and(|&f| f > 0) {
                let dot: f64 = k.iter().zip(freqs).map(|(a, b)| *a as f64 * b).sum();
                let knorm = k.iter().map(|&x| (x * x) as f64).sum::<f64>().sqrt();
                if dot.abs() <= tol * knorm * wnorm {
                    relations.push(k.clone());
                }
            }
            let mut i = 0;
            while i < n {
                if k[i] < bound {
                    k[i] += 1;
                    break;
                }
                k[i] = -bound;
                i += 1;
            }
            if i == n {
                break;
            }
        }
    }
    let relation_lattice = hull::lattice_hnf(&relations, n);
    ResonanceTorus {
        freqs: freqs.to_vec(),
        rank: n - relation_lattice.len(),
        relation_lattice,
        bound,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn commensurate_pair() {
        let r = resonance_torus(&[1.0, 2.0], 12, 1e-9);
        assert_eq!(r.rank, 1);
        assert_eq!(r.relation_lattice, vec![vec![2, -1]]);
    }

    #[test]
    fn irrational_pair() {
        assert_eq!(resonance_torus(&[1.0, 2f64.sqrt()], 12, 1e-9).rank, 2);
    }

    #[test]
    fn single_frequency() {
        assert_eq!(resonance_torus(&[3.7], 12, 1e-9).rank, 1);
    }
}
