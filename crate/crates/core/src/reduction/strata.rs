//! Orbit-type stratification of the link `L = (Phi^{-1}(0) ∩ S^{2n-1}) / K`
//! for torus and finite groups.

use serde::Serialize;

use super::hull::{self, to_f64};
use crate::error::{Error, Result};
use crate::group::{GroupAction, GroupKind};
use crate::linalg::{self, Mat, RankPolicy, Vector};

/// Isotropy type of a stratum.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IsotropyLabel {
    /// Hermite normal form of the lattice spanned by the weights on the
    /// support; the isotropy subgroup is its annihilator in the torus.
    Lattice(Vec<Vec<i64>>),
    /// Indices (into the finite part) of the elements fixing the stratum.
    Subgroup(Vec<usize>),
}

/// Model space of the image of a closed stratum in the symplectic link.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "space", rename_all = "snake_case")]
pub enum LinkModel {
    Point,
    /// `CP^m`.
    ComplexProjective {
        m: usize,
    },
    /// Weighted projective space of complex dimension `m`.
    WeightedProjective {
        m: usize,
    },
    /// `CP^m` modulo a finite group.
    ProjectiveQuotient {
        m: usize,
        group_order: usize,
    },
    Unrecognised {
        reason: String,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct StratumDescriptor {
    pub id: usize,
    pub isotropy_label: IsotropyLabel,
    /// Dimension of the isotropy Lie algebra.
    pub isotropy_dim: usize,
    /// Coordinate supports (0-based) whose points make up the stratum (torus kind).
    pub supports: Vec<Vec<usize>>,
    pub real_dimension: usize,
    pub closed: bool,
    pub symplectic_link_dimension: usize,
    /// A point of `Phi^{-1}(0) ∩ S^{2n-1}` in the stratum.
    pub representative: Vec<f64>,
    pub model: Option<LinkModel>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TaggedSample {
    pub point: Vec<f64>,
    pub stratum: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LinkDescriptor {
    pub strata: Vec<StratumDescriptor>,
    pub samples: Vec<TaggedSample>,
    /// Some nonzero vector is fixed by the whole group.
    pub fixed_point_note: bool,
    /// Exact description of the zero level (torus kind).
    pub certificate: Option<String>,
    /// Samples whose isotropy disagrees with the stratum they were assigned to.
    pub tag_mismatches: usize,
}

/// Stratify the link and tag the given zero-level samples.
pub fn stratify(action: &GroupAction, link_samples: &[Vector]) -> Result<LinkDescriptor> {
    match action.kind() {
        GroupKind::Torus => stratify_torus(action, link_samples),
        GroupKind::Finite => stratify_finite(action, link_samples),
        GroupKind::General => Err(Error::UnsupportedGroupKind(
            "stratification is implemented for torus and finite groups".into(),
        )),
    }
}

fn support_of(v: &Vector, n: usize) -> Vec<usize> {
    let scale = v.norm().max(1e-300);
    (0..n)
        .filter(|&k| (v[k] * v[k] + v[n + k] * v[n + k]).sqrt() > 1e-7 * scale)
        .collect()
}

fn weights_on(weights: &[Vec<i64>], s: &[usize]) -> Vec<Vec<i64>> {
    s.iter().map(|&k| weights[k].clone()).collect()
}

fn stratify_torus(action: &GroupAction, link_samples: &[Vector]) -> Result<LinkDescriptor> {
    let weights = action.weights().expect("torus actions carry weights");
    let n = weights.len();
    let d = action.dim();
    let level = hull::zero_level(weights);
    let fixed_point_note = d > 0 && weights.iter().any(|w| w.iter().all(|&x| x == 0));

    struct Piece {
        support: Vec<usize>,
        lambda: Vec<f64>,
        label: Vec<Vec<i64>>,
        rank: usize,
    }
    let pieces: Vec<Piece> = hull::all_supports(n)
        .into_iter()
        .filter_map(|s| {
            let lambda = hull::admissible(weights, &s)?;
            let label = hull::lattice_hnf(&weights_on(weights, &s), d);
            let rank = label.len();
            Some(Piece {
                lambda: lambda.iter().map(to_f64).collect(),
                support: s,
                label,
                rank,
            })
        })
        .collect();

    let mut labels: Vec<Vec<Vec<i64>>> = Vec::new();
    for p in &pieces {
        if !labels.contains(&p.label) {
            labels.push(p.label.clone());
        }
    }
    let subset = |a: &[usize], b: &[usize]| a.iter().all(|k| b.contains(k));

    let mut strata = Vec::new();
    for (id, label) in labels.iter().enumerate() {
        let members: Vec<&Piece> = pieces.iter().filter(|p| &p.label == label).collect();
        let piece_dim = |p: &Piece| 2 * p.support.len() - 1 - 2 * p.rank;
        let top = members
            .iter()
            .max_by_key(|p| (piece_dim(p), std::cmp::Reverse(p.support.clone())))
            .unwrap();
        let real_dimension = piece_dim(top);
        // Closed iff every admissible support below one of ours has the same label.
        let closed = members.iter().all(|m| {
            pieces
                .iter()
                .filter(|p| subset(&p.support, &m.support))
                .all(|p| &p.label == label)
        });
        let mut rep = Vector::zeros(2 * n);
        for (k, l) in top.support.iter().zip(&top.lambda) {
            rep[*k] = l.sqrt();
        }
        rep /= rep.norm();
        let maximal: Vec<&&Piece> = members
            .iter()
            .filter(|m| {
                !members
                    .iter()
                    .any(|o| o.support != m.support && subset(&m.support, &o.support))
            })
            .collect();
        let model = closed.then(|| {
            if maximal.len() != 1 {
                return LinkModel::Unrecognised {
                    reason: format!("closure is a union of {} maximal support pieces", maximal.len()),
                };
            }
            let s = &maximal[0].support;
            let m = s.len() - 1 - maximal[0].rank;
            let circuits = pieces
                .iter()
                .filter(|p| subset(&p.support, s))
                .filter(|p| {
                    !pieces
                        .iter()
                        .any(|o| o.support != p.support && subset(&o.support, &p.support))
                })
                .count();
            if m == 0 {
                LinkModel::Point
            } else if maximal[0].rank == 0 {
                LinkModel::ComplexProjective { m }
            } else if circuits == m + 1 {
                LinkModel::WeightedProjective { m }
            } else {
                LinkModel::Unrecognised {
                    reason: format!("moment polytope of dimension {m} has {circuits} vertices"),
                }
            }
        });
        strata.push(StratumDescriptor {
            id,
            isotropy_label: IsotropyLabel::Lattice(label.clone()),
            isotropy_dim: d - top.rank,
            supports: members.iter().map(|p| p.support.clone()).collect(),
            real_dimension,
            closed,
            symplectic_link_dimension: real_dimension.saturating_sub(1),
            representative: rep.iter().copied().collect(),
            model,
        });
    }

    let mut tag_mismatches = 0;
    let samples = link_samples
        .iter()
        .map(|v| {
            let s = support_of(v, n);
            let stratum = strata.iter().position(|st| st.supports.contains(&s));
            if let Some(i) = stratum {
                let iso = crate::group::isotropy_algebra(action, v, RankPolicy::default())
                    .map(|b| b.dim())
                    .unwrap_or(usize::MAX);
                if iso != strata[i].isotropy_dim {
                    tag_mismatches += 1;
                }
            }
            TaggedSample {
                point: v.iter().copied().collect(),
                stratum,
            }
        })
        .collect();

    Ok(LinkDescriptor {
        strata,
        samples,
        fixed_point_note,
        certificate: Some(level.describe()),
        tag_mismatches,
    })
}

/// Orthonormal basis of the subspace fixed by every element in `idx`.
fn fixed_subspace(elements: &[Mat], idx: &[usize], dim: usize) -> Result<Mat> {
    if idx.is_empty() {
        return Ok(Mat::identity(dim, dim));
    }
    let mut stacked = Mat::zeros(dim * idx.len(), dim);
    for (r, &i) in idx.iter().enumerate() {
        let block = &elements[i] - Mat::identity(dim, dim);
        stacked.view_mut((r * dim, 0), (dim, dim)).copy_from(&block);
    }
    let (basis, _) = linalg::null_space(
        &stacked,
        stacked.amax().max(1.0),
        RankPolicy::default(),
        "fixed subspace",
    )?;
    Ok(basis)
}

fn stabiliser(elements: &[Mat], basis: &Mat) -> Vec<usize> {
    (0..elements.len())
        .filter(|&i| (&elements[i] * basis - basis).amax() < 1e-9)
        .collect()
}

fn same_subspace(a: &Mat, b: &Mat) -> bool {
    a.ncols() == b.ncols() && (linalg::projector(a) - linalg::projector(b)).amax() < 1e-8
}

fn stratify_finite(action: &GroupAction, link_samples: &[Vector]) -> Result<LinkDescriptor> {
    let elements = action.finite_part();
    let dim = action.space().dim();
    // Fixed subspaces V^H of stabilisers, closed under intersection.
    let mut subspaces: Vec<(Vec<usize>, Mat)> = Vec::new();
    let full = Mat::identity(dim, dim);
    subspaces.push((stabiliser(elements, &full), full));
    let mut frontier = 0;
    while frontier < subspaces.len() {
        let (stab, _) = subspaces[frontier].clone();
        for g in 0..elements.len() {
            if stab.contains(&g) {
                continue;
            }
            let mut idx = stab.clone();
            idx.push(g);
            let basis = fixed_subspace(elements, &idx, dim)?;
            if basis.ncols() == 0 {
                continue;
            }
            let stab2 = stabiliser(elements, &basis);
            if !subspaces.iter().any(|(_, b)| same_subspace(b, &basis)) {
                subspaces.push((stab2, basis));
            }
        }
        frontier += 1;
    }
    // Merge conjugate subspaces g V^H.
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for i in 0..subspaces.len() {
        if classes.iter().any(|c| c.contains(&i)) {
            continue;
        }
        let mut class = vec![i];
        for g in elements {
            let moved = g * &subspaces[i].1;
            for (j, (_, b)) in subspaces.iter().enumerate() {
                if !class.contains(&j) && same_subspace(b, &moved) {
                    class.push(j);
                }
            }
        }
        class.sort_unstable();
        classes.push(class);
    }
    let fixed_point_note = subspaces.iter().any(|(stab, _)| stab.len() == elements.len());
    let mut strata = Vec::new();
    for (id, class) in classes.iter().enumerate() {
        let (stab, basis) = &subspaces[class[0]];
        let k = basis.ncols();
        let closed = !subspaces
            .iter()
            .any(|(_, b)| b.ncols() < k && b.ncols() > 0 && (linalg::projector(basis) * b - b).amax() < 1e-8);
        let mut rep = Vector::zeros(dim);
        for c in 0..k {
            rep += (1.0 + 0.37 * c as f64) * basis.column(c);
        }
        rep /= rep.norm();
        let model = closed.then(|| {
            if k % 2 != 0 {
                LinkModel::Unrecognised {
                    reason: format!("fixed subspace has odd real dimension {k}"),
                }
            } else if k == 2 {
                LinkModel::Point
            } else {
                LinkModel::ProjectiveQuotient {
                    m: k / 2 - 1,
                    group_order: elements.len(),
                }
            }
        });
        strata.push(StratumDescriptor {
            id,
            isotropy_label: IsotropyLabel::Subgroup(stab.clone()),
            isotropy_dim: 0,
            supports: Vec::new(),
            real_dimension: k - 1,
            closed,
            symplectic_link_dimension: k.saturating_sub(2),
            representative: rep.iter().copied().collect(),
            model,
        });
    }
    let samples = link_samples
        .iter()
        .map(|v| {
            let unit = v / v.norm().max(1e-300);
            let basis = Mat::from_column_slice(dim, 1, unit.as_slice());
            let stab = stabiliser(elements, &basis);
            let stratum = classes.iter().position(|c| c.iter().any(|&i| subspaces[i].0 == stab));
            TaggedSample {
                point: v.iter().copied().collect(),
                stratum,
            }
        })
        .collect();
    Ok(LinkDescriptor {
        strata,
        samples,
        fixed_point_note,
        certificate: None,
        tag_mismatches: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::SymplecticSpace;

    fn torus(weights: &[&[i64]]) -> GroupAction {
        let sp = SymplecticSpace::new(weights.len()).unwrap();
        GroupAction::torus(sp, weights.iter().map(|w| w.to_vec()).collect()).unwrap()
    }

    #[test]
    fn trivial_group_is_one_projective_stratum() {
        let a = GroupAction::trivial(SymplecticSpace::new(3).unwrap());
        let l = stratify(&a, &[]).unwrap();
        assert_eq!(l.strata.len(), 1);
        let s = &l.strata[0];
        assert!(s.closed);
        assert_eq!(s.real_dimension, 5);
        assert_eq!(s.symplectic_link_dimension, 4);
        assert_eq!(s.model, Some(LinkModel::ComplexProjective { m: 2 }));
    }

    #[test]
    fn circle_with_opposite_weights() {
        let l = stratify(&torus(&[&[1], &[-1]]), &[]).unwrap();
        assert_eq!(l.strata.len(), 1);
        assert_eq!(l.strata[0].real_dimension, 1);
        assert_eq!(l.strata[0].symplectic_link_dimension, 0);
        assert_eq!(l.strata[0].model, Some(LinkModel::Point));
    }

    #[test]
    fn three_weights_give_projective_line() {
        let l = stratify(&torus(&[&[1], &[1], &[-1]]), &[]).unwrap();
        assert_eq!(l.strata.len(), 1);
        let s = &l.strata[0];
        assert_eq!(s.supports, vec![vec![0, 2], vec![1, 2], vec![0, 1, 2]]);
        assert_eq!(s.real_dimension, 3);
        assert_eq!(s.model, Some(LinkModel::WeightedProjective { m: 1 }));
    }

    #[test]
    fn non_primitive_weights_split_strata() {
        // Weights (2,-2,1,-1): support {0,1} has isotropy Z/2, others trivial.
        let l = stratify(&torus(&[&[2], &[-2], &[1], &[-1]]), &[]).unwrap();
        assert_eq!(l.strata.len(), 2);
        let z2 = l
            .strata
            .iter()
            .find(|s| s.isotropy_label == IsotropyLabel::Lattice(vec![vec![2]]))
            .unwrap();
        assert!(z2.closed);
        let free = l
            .strata
            .iter()
            .find(|s| s.isotropy_label == IsotropyLabel::Lattice(vec![vec![1]]))
            .unwrap();
        assert!(!free.closed);
    }

    #[test]
    fn antipodal_finite_group() {
        let sp = SymplecticSpace::new(2).unwrap();
        let a = GroupAction::finite(sp, vec![-Mat::identity(4, 4)]).unwrap();
        let l = stratify(&a, &[Vector::from_row_slice(&[1.0, 0.0, 0.0, 0.0])]).unwrap();
        assert_eq!(l.strata.len(), 1);
        assert_eq!(
            l.strata[0].model,
            Some(LinkModel::ProjectiveQuotient { m: 1, group_order: 2 })
        );
        assert_eq!(l.samples[0].stratum, Some(0));
    }
}
