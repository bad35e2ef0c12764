//! Coarse-graining order on families, generated families, common
//! refinements and compatibility.
//!
//! The family generated by a set of histories is built constructively: at
//! each slot it carries the atoms of the Boolean algebra generated by the
//! events found there. Atoms are produced by successive splitting (`A -> AP,
//! A(1-P)`), which keeps their order deterministic and never produces
//! duplicates. Non-commuting events at one slot admit no such algebra and are
//! reported as [`Error::NonCommutingSlot`].
//!
//! Compatibility is decided on the minimal common refinement. Any family
//! containing both inputs must refine both slot-wise, and weak decoherence is
//! inherited by coarse-grainings (the off-diagonal terms of the coarse family
//! are sums of off-diagonal terms of the fine one), so two families are
//! compatible exactly when their minimal common refinement exists and is
//! weakly decoherent.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::histories::{is_weakly_decoherent, merge_times, Decomposition, Family, History};
use crate::linalg::{DensityMatrix, Projector};

/// Outcome of a coarse-graining test `c1 <= c2` on the merged time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyOrderResult {
    pub is_coarse_graining: bool,
    /// Common time grid the comparison ran on.
    pub times: Vec<f64>,
    /// Per slot, per coarse member: mask of the fine members summing to it.
    pub witness: Option<Vec<Vec<u64>>>,
    pub failing_slot: Option<usize>,
}

/// True iff every member of every slot of `c1` is a sum of members of the
/// matching slot of `c2`.
pub fn is_coarse_graining(c1: &Family, c2: &Family, tol: f64) -> Result<FamilyOrderResult> {
    if c1.dim() != c2.dim() {
        return Err(Error::DimensionMismatch {
            expected: c1.dim(),
            found: c2.dim(),
        });
    }
    let times = merge_times(c1.times(), c2.times());
    let coarse = c1.padded_to(&times)?;
    let fine = c2.padded_to(&times)?;
    let mut witness = Vec::with_capacity(times.len());
    for (k, (cs, fs)) in coarse.slots().iter().zip(fine.slots()).enumerate() {
        let mut slot_masks = Vec::with_capacity(cs.len());
        for member in cs.members() {
            match fs.subset_for(member, tol) {
                Some(mask) => slot_masks.push(mask),
                None => {
                    return Ok(FamilyOrderResult {
                        is_coarse_graining: false,
                        times,
                        witness: None,
                        failing_slot: Some(k),
                    })
                }
            }
        }
        witness.push(slot_masks);
    }
    Ok(FamilyOrderResult {
        is_coarse_graining: true,
        times,
        witness: Some(witness),
        failing_slot: None,
    })
}

/// A projector with a display label.
#[derive(Debug, Clone, PartialEq)]
pub struct Labeled {
    pub label: String,
    pub projector: Projector,
}

impl Labeled {
    pub fn new(label: impl Into<String>, projector: Projector) -> Self {
        Labeled {
            label: label.into(),
            projector,
        }
    }
}

/// Atoms of the Boolean algebra generated by commuting projectors at one slot.
pub fn slot_atoms(slot: usize, projectors: &[Labeled], tol: f64) -> Result<Decomposition> {
    let dim = match projectors.first() {
        Some(p) => p.projector.dim(),
        None => return Err(Error::Empty("slot projectors")),
    };
    for (i, p) in projectors.iter().enumerate() {
        if p.projector.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.projector.dim(),
            });
        }
        for (j, q) in projectors.iter().enumerate().skip(i + 1) {
            if !p.projector.commutes(&q.projector, tol)? {
                return Err(Error::NonCommutingSlot { slot, i, j });
            }
        }
    }

    let mut atoms = vec![Labeled::new("1", Projector::identity(dim))];
    for p in projectors {
        let comp = p.projector.complement();
        let mut next = Vec::with_capacity(atoms.len() + 1);
        for atom in atoms {
            let inside = atom.projector.commuting_product(&p.projector);
            let outside = atom.projector.commuting_product(&comp);
            let inside_nonzero = inside.matrix().trace().re > 0.5;
            let outside_nonzero = outside.matrix().trace().re > 0.5;
            if inside_nonzero && outside_nonzero {
                let in_label = if inside.approx_eq(&p.projector, tol) {
                    p.label.clone()
                } else {
                    conjoin_labels(&atom.label, &p.label)
                };
                let out_label = if outside.approx_eq(&comp, tol) {
                    format!("~{}", p.label)
                } else {
                    conjoin_labels(&atom.label, &format!("~{}", p.label))
                };
                next.push(Labeled::new(in_label, inside));
                next.push(Labeled::new(out_label, outside));
            } else {
                // Unsplit atoms keep their own projector, not the rounded product.
                next.push(atom);
            }
        }
        atoms = next;
    }
    let (members, labels): (Vec<_>, Vec<_>) =
        atoms.into_iter().map(|a| (a.projector, a.label)).unzip();
    Ok(Decomposition::from_parts_unchecked(members, labels))
}

fn conjoin_labels(a: &str, b: &str) -> String {
    if a == "1" {
        b.to_string()
    } else {
        format!("{a}&{b}")
    }
}

/// Per-slot atoms for a list of slots.
pub fn atoms_of(projector_sets: &[Vec<Labeled>], tol: f64) -> Result<Vec<Decomposition>> {
    projector_sets
        .iter()
        .enumerate()
        .map(|(k, set)| slot_atoms(k, set, tol))
        .collect()
}

/// The smallest family containing every history in `histories`.
pub fn generated_family(histories: &[History], tol: f64) -> Result<Family> {
    let first = histories.first().ok_or(Error::Empty("history set"))?;
    let dim = first.dim();
    let mut times = first.times().to_vec();
    for h in histories {
        if h.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: h.dim(),
            });
        }
        times = merge_times(&times, h.times());
    }
    let padded: Vec<History> = histories
        .iter()
        .map(|h| h.padded_to(&times))
        .collect::<Result<_>>()?;
    let sets: Vec<Vec<Labeled>> = (0..times.len())
        .map(|k| {
            padded
                .iter()
                .map(|h| Labeled::new(h.labels()[k].clone(), h.events()[k].clone()))
                .collect()
        })
        .collect();
    let family = Family::new(times, atoms_of(&sets, tol)?)?;
    if histories.iter().any(|h| !family.contains(h, tol)) {
        return Err(Error::HistoryNotInFamily);
    }
    Ok(family)
}

/// Family generated by a single history: slots `{E_k, 1 - E_k}`.
pub fn family_of_history(h: &History, tol: f64) -> Result<Family> {
    generated_family(std::slice::from_ref(h), tol)
}

/// Slot-wise atoms of the union of both families' members.
pub fn common_refinement(c1: &Family, c2: &Family, tol: f64) -> Result<Family> {
    if c1.dim() != c2.dim() {
        return Err(Error::DimensionMismatch {
            expected: c1.dim(),
            found: c2.dim(),
        });
    }
    let times = merge_times(c1.times(), c2.times());
    let a = c1.padded_to(&times)?;
    let b = c2.padded_to(&times)?;
    let sets: Vec<Vec<Labeled>> = a
        .slots()
        .iter()
        .zip(b.slots())
        .map(|(x, y)| {
            x.members()
                .iter()
                .zip(x.labels())
                .chain(y.members().iter().zip(y.labels()))
                .map(|(p, l)| Labeled::new(l.clone(), p.clone()))
                .collect()
        })
        .collect();
    Family::new(times, atoms_of(&sets, tol)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CompatibilityReason {
    NonCommutingSlot { slot: usize, i: usize, j: usize },
    RefinementInconsistent { max_off_diagonal_re: f64 },
    Compatible,
}

#[derive(Debug, Clone)]
pub struct CompatibilityResult {
    pub compatible: bool,
    pub refined_family: Option<Family>,
    pub reason: CompatibilityReason,
}

/// Two consistent families are compatible iff some consistent family contains both.
pub fn are_compatible(
    c1: &Family,
    c2: &Family,
    rho: &DensityMatrix,
    tol: f64,
) -> Result<CompatibilityResult> {
    for c in [c1, c2] {
        let report = is_weakly_decoherent(c, rho, tol)?;
        if !report.is_weakly_decoherent {
            return Err(Error::InconsistentFamily {
                max_off_diagonal_re: report.max_off_diagonal_re,
            });
        }
    }
    let refined = match common_refinement(c1, c2, tol) {
        Ok(f) => f,
        Err(Error::NonCommutingSlot { slot, i, j }) => {
            return Ok(CompatibilityResult {
                compatible: false,
                refined_family: None,
                reason: CompatibilityReason::NonCommutingSlot { slot, i, j },
            })
        }
        Err(e) => return Err(e),
    };
    let report = is_weakly_decoherent(&refined, rho, tol)?;
    let reason = if report.is_weakly_decoherent {
        CompatibilityReason::Compatible
    } else {
        CompatibilityReason::RefinementInconsistent {
            max_off_diagonal_re: report.max_off_diagonal_re,
        }
    };
    Ok(CompatibilityResult {
        compatible: report.is_weakly_decoherent,
        refined_family: Some(refined),
        reason,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DEFAULT_TOL;
    use num_complex::Complex64;

    fn d(axes: &[usize]) -> Projector {
        Projector::coordinate(4, axes)
    }

    fn fam(slots: Vec<Vec<Projector>>) -> Family {
        Family::from_slots(
            slots
                .into_iter()
                .map(|s| Decomposition::new(s, DEFAULT_TOL).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn single_projector_gives_binary_slot() {
        let e = d(&[0, 1]);
        let dec = slot_atoms(0, &[Labeled::new("E", e.clone())], DEFAULT_TOL).unwrap();
        assert_eq!(dec.len(), 2);
        assert!(dec.members()[0].approx_eq(&e, 1e-15));
        assert!(dec.members()[1].approx_eq(&e.complement(), 1e-15));
        assert_eq!(dec.labels(), ["E", "~E"]);
    }

    #[test]
    fn orthogonal_pair_gives_three_atoms() {
        let e = d(&[0]);
        let f = d(&[1, 2]);
        let dec = slot_atoms(
            0,
            &[Labeled::new("E", e.clone()), Labeled::new("F", f.clone())],
            DEFAULT_TOL,
        )
        .unwrap();
        assert_eq!(dec.len(), 3);
        assert!(dec.members()[0].approx_eq(&e, 1e-15));
        assert!(dec.members()[1].approx_eq(&f, 1e-15));
        assert!(dec.members()[2].approx_eq(&d(&[3]), 1e-15));
        assert_eq!(dec.labels(), ["E", "F", "~E&~F"]);
    }

    #[test]
    fn complement_pair_is_deduplicated() {
        let e = d(&[0]);
        let dec = slot_atoms(
            0,
            &[Labeled::new("E", e.clone()), Labeled::new("E'", e.complement())],
            DEFAULT_TOL,
        )
        .unwrap();
        assert_eq!(dec.len(), 2);
    }

    #[test]
    fn non_commuting_slot_is_reported() {
        let p = Projector::coordinate(2, &[0]);
        let q = Projector::from_vectors(
            &[vec![Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)]],
            DEFAULT_TOL,
        )
        .unwrap();
        let h1 = History::from_events(vec![Projector::identity(2), p]).unwrap();
        let h2 = History::from_events(vec![Projector::identity(2), q]).unwrap();
        assert_eq!(
            generated_family(&[h1, h2], DEFAULT_TOL),
            Err(Error::NonCommutingSlot { slot: 1, i: 0, j: 1 })
        );
    }

    #[test]
    fn identity_history_generates_trivial_family() {
        let h = History::identity(4, vec![0.0, 1.0]).unwrap();
        let f = generated_family(&[h], DEFAULT_TOL).unwrap();
        assert!(f.same_as(&Family::trivial(4, vec![0.0, 1.0]).unwrap(), DEFAULT_TOL));
    }

    #[test]
    fn order_reflexive_and_bottom() {
        let c = fam(vec![vec![d(&[0]), d(&[1]), d(&[2, 3])], vec![d(&[0, 1]), d(&[2, 3])]]);
        let r = is_coarse_graining(&c, &c, DEFAULT_TOL).unwrap();
        assert!(r.is_coarse_graining);
        assert_eq!(r.witness.unwrap()[0], vec![0b001, 0b010, 0b100]);
        let trivial = Family::trivial(4, vec![0.0]).unwrap();
        assert!(is_coarse_graining(&trivial, &c, DEFAULT_TOL).unwrap().is_coarse_graining);
        let r = is_coarse_graining(&c, &trivial, DEFAULT_TOL).unwrap();
        assert!(!r.is_coarse_graining);
        assert_eq!(r.failing_slot, Some(0));
    }

    #[test]
    fn refinement_identities() {
        let c = fam(vec![vec![d(&[0]), d(&[1]), d(&[2, 3])]]);
        let trivial = Family::trivial(4, vec![0.0]).unwrap();
        assert!(common_refinement(&c, &trivial, DEFAULT_TOL).unwrap().same_as(&c, DEFAULT_TOL));
        assert!(common_refinement(&c, &c, DEFAULT_TOL).unwrap().same_as(&c, DEFAULT_TOL));
        let other = fam(vec![vec![d(&[0, 2]), d(&[1, 3])]]);
        let r = common_refinement(&c, &other, DEFAULT_TOL).unwrap();
        assert_eq!(r.slots()[0].len(), 4);
    }

    #[test]
    fn compatibility_trivial_cases() {
        let c = fam(vec![vec![d(&[0]), d(&[1, 2, 3])], vec![d(&[0, 1]), d(&[2, 3])]]);
        let rho = DensityMatrix::maximally_mixed(4);
        let r = are_compatible(&c, &c, &rho, DEFAULT_TOL).unwrap();
        assert!(r.compatible);
        assert_eq!(r.reason, CompatibilityReason::Compatible);
        let trivial = Family::trivial(4, vec![0.0, 1.0]).unwrap();
        assert!(are_compatible(&c, &trivial, &rho, DEFAULT_TOL).unwrap().compatible);
        let other = Family::trivial(3, vec![0.0]).unwrap();
        assert!(matches!(
            are_compatible(&c, &other, &rho, DEFAULT_TOL),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
