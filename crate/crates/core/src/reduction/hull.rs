//! Exact combinatorics of torus weights: which coordinate supports carry
//! points of the zero level set, rational certificates, and integer lattices.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

type Q = BigRational;

fn q(x: i64) -> Q {
    Q::from_integer(BigInt::from(x))
}

/// Solve `sum_j c_j cols[j] = target` exactly when the columns are linearly
/// independent. Returns `None` for dependent columns or an inconsistent system.
fn solve_independent(cols: &[&[i64]], target: &[i64]) -> Option<Vec<Q>> {
    let rows = target.len();
    let m = cols.len();
    let mut a: Vec<Vec<Q>> = (0..rows)
        .map(|r| {
            let mut row: Vec<Q> = cols.iter().map(|c| q(c[r])).collect();
            row.push(q(target[r]));
            row
        })
        .collect();
    let mut pivot_row = 0;
    let mut pivots = Vec::with_capacity(m);
    for col in 0..m {
        let p = (pivot_row..rows).find(|&r| !a[r][col].is_zero())?;
        a.swap(pivot_row, p);
        let inv = a[pivot_row][col].recip();
        for x in a[pivot_row].iter_mut() {
            *x = &*x * &inv;
        }
        for r in 0..rows {
            if r != pivot_row && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                let pivot = a[pivot_row].clone();
                for (x, p) in a[r].iter_mut().zip(&pivot) {
                    *x = &*x - p * &f;
                }
            }
        }
        pivots.push(pivot_row);
        pivot_row += 1;
    }
    if (pivot_row..rows).any(|r| !a[r][m].is_zero()) {
        return None;
    }
    Some(pivots.iter().map(|&r| a[r][m].clone()).collect())
}

fn subsets_up_to(items: &[usize], max_len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for &it in items {
        let mut extra = Vec::new();
        for s in &out {
            if s.len() < max_len {
                let mut t = s.clone();
                t.push(it);
                extra.push(t);
            }
        }
        out.extend(extra);
    }
    out
}

/// Nonnegative coefficients expressing `target` in the cone spanned by the
/// weight vectors indexed by `support`, if it lies there (Caratheodory:
/// search linearly independent subsets).
fn cone_membership(weights: &[Vec<i64>], support: &[usize], target: &[i64]) -> Option<Vec<(usize, Q)>> {
    let d = target.len();
    if target.iter().all(|&t| t == 0) {
        return Some(Vec::new());
    }
    for sub in subsets_up_to(support, d) {
        if sub.is_empty() {
            continue;
        }
        let cols: Vec<&[i64]> = sub.iter().map(|&k| weights[k].as_slice()).collect();
        if let Some(c) = solve_independent(&cols, target) {
            if c.iter().all(|x| !x.is_negative()) {
                return Some(sub.into_iter().zip(c).collect());
            }
        }
    }
    None
}

/// Strictly positive `lambda` on `support` with `sum lambda_k w_k = 0`, if any.
/// Such a support carries points of `Phi^{-1}(0)` with exactly that support
/// (`|z_k|^2` proportional to `lambda_k`).
pub fn admissible(weights: &[Vec<i64>], support: &[usize]) -> Option<Vec<Q>> {
    if support.is_empty() {
        return None;
    }
    let mut lambda = vec![Q::zero(); weights.len()];
    for &k in support {
        let neg: Vec<i64> = weights[k].iter().map(|x| -x).collect();
        let combo = cone_membership(weights, support, &neg)?;
        lambda[k] += Q::one();
        for (j, c) in combo {
            lambda[j] += c;
        }
    }
    let total: Q = support.iter().map(|&k| lambda[k].clone()).fold(Q::zero(), |a, b| a + b);
    Some(support.iter().map(|&k| &lambda[k] / &total).collect())
}

/// All nonempty supports of `0..n` in order of size, then lexicographically.
pub fn all_supports(n: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = subsets_up_to(&(0..n).collect::<Vec<_>>(), n)
        .into_iter()
        .filter(|s| !s.is_empty())
        .collect();
    for s in out.iter_mut() {
        s.sort_unstable();
    }
    out.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
    out
}

/// Outcome of the exact zero-level test.
#[derive(Debug, Clone, PartialEq)]
pub enum ZeroLevel {
    /// `Phi^{-1}(0) != {0}`; the largest admissible support with a positive
    /// balancing vector on it.
    Nonempty { support: Vec<usize>, lambda: Vec<Q> },
    /// `Phi^{-1}(0) = {0}`; `c` is a rational direction with `c . w_k > 0`
    /// for every weight, when one was found and verified.
    Empty { separating: Option<Vec<Q>> },
}

impl ZeroLevel {
    pub fn describe(&self) -> String {
        match self {
            ZeroLevel::Nonempty { support, lambda } => format!(
                "sum_k lambda_k w_k = 0 with lambda = [{}] on support {:?}",
                lambda.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", "),
                support
            ),
            ZeroLevel::Empty { separating: Some(c) } => format!(
                "0 is not in the convex hull of the weights: c = [{}] has c . w_k > 0 for every k",
                c.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
            ),
            ZeroLevel::Empty { separating: None } => {
                "no coordinate support admits a positive balancing combination of weights".to_string()
            }
        }
    }
}

/// Decide whether `Phi^{-1}(0) \ {0}` is empty for the torus weights.
pub fn zero_level(weights: &[Vec<i64>]) -> ZeroLevel {
    let n = weights.len();
    // The union of admissible supports is admissible, so the full set is
    // built by merging.
    let mut support: Vec<usize> = Vec::new();
    for s in all_supports(n) {
        if s.iter().all(|k| support.contains(k)) {
            continue;
        }
        if admissible(weights, &s).is_some() {
            support.extend(s);
            support.sort_unstable();
            support.dedup();
        }
    }
    if support.is_empty() {
        return ZeroLevel::Empty {
            separating: separating_direction(weights),
        };
    }
    let lambda = admissible(weights, &support).expect("union of admissible supports is admissible");
    ZeroLevel::Nonempty { support, lambda }
}

/// Minimum-norm point of the convex hull (Frank-Wolfe), rounded to a
/// rational vector and verified exactly.
fn separating_direction(weights: &[Vec<i64>]) -> Option<Vec<Q>> {
    let d = weights.first()?.len();
    let w: Vec<Vec<f64>> = weights.iter().map(|r| r.iter().map(|&x| x as f64).collect()).collect();
    let mut p = w[0].clone();
    for it in 0..2000 {
        let (best, _) = w
            .iter()
            .enumerate()
            .map(|(k, wk)| (k, wk.iter().zip(&p).map(|(a, b)| a * b).sum::<f64>()))
            .min_by(|a, b| a.1.total_cmp(&b.1))?;
        let step = 2.0 / (it as f64 + 2.0);
        for i in 0..d {
            p[i] = (1.0 - step) * p[i] + step * w[best][i];
        }
    }
    for denom in [1i64, 2, 4, 8, 16, 64, 256, 1024] {
        let c: Vec<Q> = p
            .iter()
            .map(|x| Q::new(BigInt::from((x * denom as f64).round() as i64), BigInt::from(denom)))
            .collect();
        let ok = weights.iter().all(|wk| {
            let s: Q = wk.iter().zip(&c).map(|(a, b)| b * q(*a)).fold(Q::zero(), |a, b| a + b);
            s.is_positive()
        });
        if ok {
            return Some(c);
        }
    }
    None
}

/// Hermite normal form (row style, nonzero rows only) of the lattice spanned
/// by the given integer vectors. Two families span the same lattice exactly
/// when their forms agree.
pub fn lattice_hnf(vectors: &[Vec<i64>], dim: usize) -> Vec<Vec<i64>> {
    let mut rows: Vec<Vec<i128>> = vectors
        .iter()
        .map(|v| v.iter().map(|&x| x as i128).collect())
        .filter(|v: &Vec<i128>| v.iter().any(|&x| x != 0))
        .collect();
    let mut out: Vec<Vec<i128>> = Vec::new();
    let mut col = 0;
    while col < dim && !rows.is_empty() {
        // Euclid on column `col` across the remaining rows.
        loop {
            rows.retain(|r| r.iter().any(|&x| x != 0));
            let nz: Vec<usize> = (0..rows.len()).filter(|&i| rows[i][col] != 0).collect();
            if nz.len() <= 1 {
                break;
            }
            let pivot = *nz.iter().min_by_key(|&&i| rows[i][col].abs()).unwrap();
            let pv = rows[pivot][col];
            for &i in &nz {
                if i != pivot {
                    let f = rows[i][col].div_euclid(pv);
                    let prow = rows[pivot].clone();
                    for (x, p) in rows[i].iter_mut().zip(prow) {
                        *x -= f * p;
                    }
                }
            }
        }
        if let Some(i) = (0..rows.len()).find(|&i| rows[i][col] != 0) {
            let mut r = rows.remove(i);
            if r[col] < 0 {
                r.iter_mut().for_each(|x| *x = -*x);
            }
            out.push(r);
        }
        col += 1;
    }
    // Reduce entries above each pivot into [0, pivot).
    for i in 0..out.len() {
        let pc = out[i].iter().position(|&x| x != 0).unwrap();
        let pv = out[i][pc];
        for j in 0..i {
            let f = out[j][pc].div_euclid(pv);
            if f != 0 {
                let prow = out[i].clone();
                for (x, p) in out[j].iter_mut().zip(prow) {
                    *x -= f * p;
                }
            }
        }
    }
    out.into_iter()
        .map(|r| r.into_iter().map(|x| x as i64).collect())
        .collect()
}

/// Rank of a rational matrix given by integer rows.
pub fn integer_rank(rows: &[Vec<i64>], dim: usize) -> usize {
    lattice_hnf(rows, dim).len()
}

pub fn to_f64(x: &Q) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(rows: &[&[i64]]) -> Vec<Vec<i64>> {
        rows.iter().map(|r| r.to_vec()).collect()
    }

    #[test]
    fn balanced_weights_have_zero_level() {
        let ws = w(&[&[1], &[-1]]);
        match zero_level(&ws) {
            ZeroLevel::Nonempty { support, lambda } => {
                assert_eq!(support, vec![0, 1]);
                assert_eq!(lambda, vec![Q::new(1.into(), 2.into()), Q::new(1.into(), 2.into())]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn positive_weights_are_empty_with_certificate() {
        let ws = w(&[&[1], &[1]]);
        match zero_level(&ws) {
            ZeroLevel::Empty { separating: Some(c) } => assert!(c[0].is_positive()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn three_weights_supports() {
        let ws = w(&[&[1], &[1], &[-1]]);
        let adm: Vec<Vec<usize>> = all_supports(3)
            .into_iter()
            .filter(|s| admissible(&ws, s).is_some())
            .collect();
        assert_eq!(adm, vec![vec![0, 2], vec![1, 2], vec![0, 1, 2]]);
    }

    #[test]
    fn hnf_identifies_equal_lattices() {
        let a = lattice_hnf(&w(&[&[2, 0], &[0, 3]]), 2);
        let b = lattice_hnf(&w(&[&[2, 3], &[4, 3], &[0, 3]]), 2);
        assert_eq!(a, b);
        assert_eq!(lattice_hnf(&w(&[&[1], &[-1]]), 1), vec![vec![1]]);
        assert_eq!(lattice_hnf(&w(&[&[2], &[-2]]), 1), vec![vec![2]]);
        assert!(lattice_hnf(&w(&[&[0, 0]]), 2).is_empty());
    }

    #[test]
    fn two_dimensional_torus() {
        // Weights (1,0), (0,1), (-1,-1): only the full support balances.
        let ws = w(&[&[1, 0], &[0, 1], &[-1, -1]]);
        assert!(admissible(&ws, &[0, 2]).is_none());
        assert!(admissible(&ws, &[0, 1, 2]).is_some());
    }
}
