//! Lusternik-Schnirelmann lower bounds from a table of known categories.

use serde::Serialize;

use super::strata::{LinkDescriptor, LinkModel};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StratumCategory {
    pub stratum: usize,
    pub space: String,
    pub cat: usize,
    /// The space was not in the table and the trivial bound 1 was used.
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CategoryBound {
    pub per_stratum: Vec<StratumCategory>,
    #[serde(rename = "N")]
    pub n: usize,
    pub fallback_used: bool,
}

/// Category of a model space: a point has category 1, and `CP^m`, weighted
/// projective spaces and finite quotients of `CP^m` of complex dimension `m`
/// have category `m + 1`.
pub fn table_category(model: &LinkModel) -> (String, usize, bool) {
    match model {
        LinkModel::Point => ("point".into(), 1, false),
        LinkModel::ComplexProjective { m } => (format!("CP^{m}"), m + 1, false),
        LinkModel::WeightedProjective { m } => (format!("weighted projective space of dimension {m}"), m + 1, false),
        LinkModel::ProjectiveQuotient { m, group_order } => {
            (format!("CP^{m} / finite group of order {group_order}"), m + 1, false)
        }
        LinkModel::Unrecognised { reason } => (format!("unrecognised ({reason})"), 1, true),
    }
}

/// `N = sum over closed strata of Cat(pi(S))`.
pub fn category_lower_bound(link: &LinkDescriptor) -> CategoryBound {
    let per_stratum: Vec<StratumCategory> = link
        .strata
        .iter()
        .filter(|s| s.closed)
        .map(|s| {
            let model = s.model.clone().unwrap_or(LinkModel::Unrecognised {
                reason: "no model recorded".into(),
            });
            let (space, cat, fallback) = table_category(&model);
            StratumCategory {
                stratum: s.id,
                space,
                cat,
                fallback,
            }
        })
        .collect();
    CategoryBound {
        n: per_stratum.iter().map(|c| c.cat).sum(),
        fallback_used: per_stratum.iter().any(|c| c.fallback),
        per_stratum,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupAction;
    use crate::reduction::stratify;
    use crate::symplectic::SymplecticSpace;

    fn bound(weights: Vec<Vec<i64>>) -> CategoryBound {
        let sp = SymplecticSpace::new(weights.len()).unwrap();
        let a = GroupAction::torus(sp, weights).unwrap();
        category_lower_bound(&stratify(&a, &[]).unwrap())
    }

    #[test]
    fn trivial_group_gives_half_dimension() {
        for n in 1..=4 {
            let a = GroupAction::trivial(SymplecticSpace::new(n).unwrap());
            assert_eq!(category_lower_bound(&stratify(&a, &[]).unwrap()).n, n);
        }
    }

    #[test]
    fn circle_examples() {
        assert_eq!(bound(vec![vec![1], vec![-1]]).n, 1);
        let b = bound(vec![vec![1], vec![1], vec![-1]]);
        assert_eq!(b.n, 2);
        assert!(!b.fallback_used);
    }

    #[test]
    fn unrecognised_space_falls_back() {
        // Weights (1,1,-1,-1): moment polytope is a square, not a simplex.
        let b = bound(vec![vec![1], vec![1], vec![-1], vec![-1]]);
        assert_eq!(b.n, 1);
        assert!(b.fallback_used);
    }
}
