//! Contrary inferences: certificates, the three-box fixture, a seeded search
//! harness, and instance checks of ordered consistency.
//!
//! A contrary inference is a quadruple `(E0, E1, F1, E2)` with `E1 ⟂ F1` such
//! that, in the families generated by `(E0, E1, E2)` and `(E0, F1, E2)`
//! respectively, both families are weakly decoherent, `p(E0, E2) > 0`, and
//! conditioning on `(E0, 1, E2)` gives `E1` (resp. `F1`) with probability one.
//! Histories are laid out on the time grid `0, 1, 2`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, KentCondition, Result};
use crate::family_algebra::family_of_history;
use crate::histories::{
    merge_times, weight, ConsistentFamily, Family, History, DEFAULT_MAX_ELEMENTARY,
};
use crate::linalg::{inner, orthonormalize, DensityMatrix, Projector};
use crate::random::{gaussian_vector, haar_basis, haar_projector, haar_vector, stream_rng};

pub const SLOT_TIMES: [f64; 3] = [0.0, 1.0, 2.0];

/// Conditionals within this multiple of `tol` from one are "marginal".
pub const MARGINAL_FACTOR: f64 = 100.0;

/// A verified contrary inference.
#[derive(Debug, Clone)]
pub struct ContraryInferenceCertificate {
    pub e0: Projector,
    pub e1: Projector,
    pub f1: Projector,
    pub e2: Projector,
    pub family_c1: Family,
    pub family_c2: Family,
    /// `p(E0, E2)`.
    pub p_joint: f64,
    /// `p(E1 | E0, E2)` in the first family.
    pub cond_c1: f64,
    /// `p(F1 | E0, E2)` in the second family.
    pub cond_c2: f64,
    pub max_off_diagonal_c1: f64,
    pub max_off_diagonal_c2: f64,
    pub rho: DensityMatrix,
    pub tol: f64,
}

fn three_slot(e0: &Projector, mid: &Projector, e2: &Projector, labels: [&str; 3]) -> History {
    History::with_labels(
        SLOT_TIMES.to_vec(),
        vec![e0.clone(), mid.clone(), e2.clone()],
        labels.iter().map(|s| s.to_string()).collect(),
    )
    .expect("fixed time grid and shared dimension")
}

impl ContraryInferenceCertificate {
    /// `h0 = (E0, 1, E2)`.
    pub fn h0(&self) -> History {
        three_slot(&self.e0, &Projector::identity(self.e0.dim()), &self.e2, ["E0", "1", "E2"])
    }

    /// `h1 = (E0, E1, E2)`.
    pub fn h1(&self) -> History {
        three_slot(&self.e0, &self.e1, &self.e2, ["E0", "E1", "E2"])
    }

    /// `h2 = (E0, F1, E2)`.
    pub fn h2(&self) -> History {
        three_slot(&self.e0, &self.f1, &self.e2, ["E0", "F1", "E2"])
    }

    pub fn family_h0(&self) -> Family {
        family_of_history(&self.h0(), self.tol).expect("single history generates a family")
    }

    /// Rebuilds both families from the four projectors and recomputes every
    /// condition; true iff the stored values are reproduced within `tol`.
    pub fn reverify(&self) -> bool {
        match kent_triple_check(&self.e0, &self.e1, &self.f1, &self.e2, &self.rho, self.tol) {
            Ok(c) => {
                (c.p_joint - self.p_joint).abs() <= self.tol
                    && (c.cond_c1 - self.cond_c1).abs() <= self.tol
                    && (c.cond_c2 - self.cond_c2).abs() <= self.tol
                    && c.family_c1.same_as(&self.family_c1, self.tol)
                    && c.family_c2.same_as(&self.family_c2, self.tol)
            }
            Err(_) => false,
        }
    }
}

fn check_conditional(value: f64, tol: f64, which: KentCondition) -> Result<()> {
    let gap = (value - 1.0).abs();
    if gap <= tol {
        Ok(())
    } else {
        Err(Error::ConditionFailed {
            which,
            marginal: gap <= MARGINAL_FACTOR * tol,
        })
    }
}

/// Builds both families for `(E0, E1, F1, E2)` and verifies every condition
/// of a contrary inference.
pub fn kent_triple_check(
    e0: &Projector,
    e1: &Projector,
    f1: &Projector,
    e2: &Projector,
    rho: &DensityMatrix,
    tol: f64,
) -> Result<ContraryInferenceCertificate> {
    let dim = e0.dim();
    for p in [e1, f1, e2] {
        if p.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.dim(),
            });
        }
    }
    if rho.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: rho.dim(),
        });
    }
    if !e1.orthogonal(f1, tol)? {
        return Err(Error::NotOrthogonal { i: 1, j: 2 });
    }
    let h1 = three_slot(e0, e1, e2, ["E0", "E1", "E2"]);
    let h2 = three_slot(e0, f1, e2, ["E0", "F1", "E2"]);
    let h0 = three_slot(e0, &Projector::identity(dim), e2, ["E0", "1", "E2"]);

    let c1 = family_of_history(&h1, tol)?;
    let c2 = family_of_history(&h2, tol)?;
    let cf1 = match ConsistentFamily::new(c1, rho.clone(), tol) {
        Ok(f) => f,
        Err(Error::InconsistentFamily { .. }) => {
            return Err(Error::ConditionFailed {
                which: KentCondition::FirstFamilyConsistency,
                marginal: false,
            })
        }
        Err(e) => return Err(e),
    };
    let cf2 = match ConsistentFamily::new(c2, rho.clone(), tol) {
        Ok(f) => f,
        Err(Error::InconsistentFamily { .. }) => {
            return Err(Error::ConditionFailed {
                which: KentCondition::SecondFamilyConsistency,
                marginal: false,
            })
        }
        Err(e) => return Err(e),
    };

    let p_joint = cf1.probability(&h0)?;
    if p_joint <= tol {
        return Err(Error::ConditionFailed {
            which: KentCondition::JointProbability,
            marginal: false,
        });
    }
    let cond_c1 = cf1.conditional_probability(&History::single(1.0, e1.clone(), "E1"), &h0)?;
    check_conditional(cond_c1, tol, KentCondition::FirstConditional)?;
    let cond_c2 = cf2.conditional_probability(&History::single(1.0, f1.clone(), "F1"), &h0)?;
    check_conditional(cond_c2, tol, KentCondition::SecondConditional)?;

    Ok(ContraryInferenceCertificate {
        e0: e0.clone(),
        e1: e1.clone(),
        f1: f1.clone(),
        e2: e2.clone(),
        max_off_diagonal_c1: cf1.report().max_off_diagonal_re,
        max_off_diagonal_c2: cf2.report().max_off_diagonal_re,
        family_c1: cf1.family().clone(),
        family_c2: cf2.family().clone(),
        p_joint,
        cond_c1,
        cond_c2,
        rho: rho.clone(),
        tol,
    })
}

/// The three-box vectors `A, B, C`, `psi = (A+B+C)/sqrt3`, `phi = (A+B-C)/sqrt3`.
pub fn three_box_vectors() -> [(&'static str, Vec<Complex64>); 5] {
    let c = |x: f64| Complex64::new(x, 0.0);
    let s = 1.0 / 3f64.sqrt();
    [
        ("A", vec![c(1.0), c(0.0), c(0.0)]),
        ("B", vec![c(0.0), c(1.0), c(0.0)]),
        ("C", vec![c(0.0), c(0.0), c(1.0)]),
        ("psi", vec![c(s), c(s), c(s)]),
        ("phi", vec![c(s), c(s), c(-s)]),
    ]
}

/// `(E0, E1, F1, E2)` of the three-box arrangement in `N = 3`.
pub fn three_box_quadruple() -> [Projector; 4] {
    let v = three_box_vectors();
    let p = |i: usize| Projector::from_vectors(&[v[i].1.clone()], 1e-12).expect("unit vector");
    [p(3), p(0), p(1), p(4)]
}

/// The three-box scenario: vectors, the four projectors, `h0, h1, h2`, the
/// families `C1, C2, Ch0`, their joint refinement and `CE1F1`.
pub fn three_box_fixture() -> crate::scenario::Scenario {
    crate::scenario::three_box_file()
        .resolve(None)
        .expect("three-box document is valid")
}

/// How search candidates are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStrategy {
    /// All four projectors Haar-random (rank one: `E1 ⟂ F1` by orthogonalization).
    Haar,
    /// `E0, E1, F1` Haar-random; `E2` onto a Haar-random direction orthogonal to
    /// `(1 - E1) psi` and `(1 - F1) psi`, the locus where both conditionals equal one.
    #[default]
    Constrained,
}

#[derive(Debug, Clone)]
pub struct SearchParams {
    pub dim: usize,
    pub trials: usize,
    pub seed: u64,
    pub tol: f64,
    pub strategy: SearchStrategy,
    /// Rank of every candidate projector (1 by default).
    pub rank: usize,
    /// Quadruples evaluated ahead of the random trials.
    pub planted: Vec<[Projector; 4]>,
}

impl SearchParams {
    pub fn new(dim: usize, trials: usize, seed: u64) -> Self {
        SearchParams {
            dim,
            trials,
            seed,
            tol: crate::linalg::DEFAULT_TOL,
            strategy: SearchStrategy::default(),
            rank: 1,
            planted: Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FoundCertificate {
    /// Trial index; planted quadruples come first.
    pub trial: usize,
    pub planted: bool,
    pub certificate: ContraryInferenceCertificate,
}

#[derive(Debug, Clone, Default)]
pub struct SearchOutcome {
    pub certificates: Vec<FoundCertificate>,
    /// Candidates whose conditionals missed one by less than `MARGINAL_FACTOR * tol`.
    pub marginal: usize,
    pub evaluated: usize,
}

fn draw_candidate(params: &SearchParams, trial: u64) -> [Projector; 4] {
    let mut rng = stream_rng(params.seed, trial);
    let dim = params.dim;
    let rank = params.rank.clamp(1, dim / 2);
    let basis = haar_basis(&mut rng, dim);
    let e1 = Projector::from_vectors(&basis[..rank], 1e-12).expect("orthonormal");
    let f1 = Projector::from_vectors(&basis[rank..2 * rank], 1e-12).expect("orthonormal");
    match params.strategy {
        SearchStrategy::Constrained if rank == 1 => {
            let psi = haar_vector(&mut rng, dim);
            let constraints: Vec<Vec<Complex64>> = [&e1, &f1]
                .iter()
                .map(|p| p.complement().matrix().apply(&psi))
                .collect();
            let q = orthonormalize(&constraints, 1e-8).unwrap_or_default();
            let phi = loop {
                let mut g = gaussian_vector(&mut rng, dim);
                for qi in &q {
                    let c = inner(qi, &g);
                    for (gi, qj) in g.iter_mut().zip(qi) {
                        *gi -= c * qj;
                    }
                }
                if crate::linalg::norm(&g) > 1e-6 {
                    break g;
                }
            };
            let e0 = Projector::from_vectors(&[psi], 1e-12).expect("unit vector");
            let e2 = Projector::from_vectors(&[phi], 1e-12).expect("non-zero vector");
            [e0, e1, f1, e2]
        }
        _ => {
            let e0 = haar_projector(&mut rng, dim, rank);
            let e2 = haar_projector(&mut rng, dim, rank);
            [e0, e1, f1, e2]
        }
    }
}

/// Seeded randomized search for contrary inferences with the maximally mixed state.
///
/// Trials are independent and evaluated in parallel; the returned list is
/// ordered by trial index, so the outcome depends only on the parameters.
pub fn find_contrary_inferences(params: &SearchParams) -> Result<SearchOutcome> {
    if !(3..=8).contains(&params.dim) {
        return Err(Error::SearchDimension(params.dim));
    }
    for q in &params.planted {
        if let Some(p) = q.iter().find(|p| p.dim() != params.dim) {
            return Err(Error::DimensionMismatch {
                expected: params.dim,
                found: p.dim(),
            });
        }
    }
    let rho = DensityMatrix::maximally_mixed(params.dim);
    let planted = params.planted.len();
    let total = planted + params.trials;
    let results: Vec<(usize, Result<ContraryInferenceCertificate>)> = (0..total)
        .into_par_iter()
        .map(|trial| {
            let quad = if trial < planted {
                params.planted[trial].clone()
            } else {
                draw_candidate(params, (trial - planted) as u64)
            };
            let [e0, e1, f1, e2] = &quad;
            (trial, kent_triple_check(e0, e1, f1, e2, &rho, params.tol))
        })
        .collect();

    let mut outcome = SearchOutcome {
        evaluated: total,
        ..Default::default()
    };
    for (trial, r) in results {
        match r {
            Ok(certificate) => outcome.certificates.push(FoundCertificate {
                trial,
                planted: trial < planted,
                certificate,
            }),
            Err(Error::ConditionFailed { marginal: true, .. }) => outcome.marginal += 1,
            Err(_) => {}
        }
    }
    Ok(outcome)
}

/// Slot-wise subspace order on the merged time grid.
pub fn history_leq(h1: &History, h2: &History, tol: f64) -> Result<bool> {
    if h1.dim() != h2.dim() {
        return Err(Error::DimensionMismatch {
            expected: h1.dim(),
            found: h2.dim(),
        });
    }
    let times = merge_times(h1.times(), h2.times());
    let a = h1.padded_to(&times)?;
    let b = h2.padded_to(&times)?;
    for (x, y) in a.events().iter().zip(b.events()) {
        if !x.leq(y, tol)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone)]
pub struct OrderedViolation {
    /// Catalog index of the family holding the dominating history.
    pub family: usize,
    pub dominating: History,
    pub weight_history: f64,
    pub weight_dominating: f64,
}

/// Ordered consistency of one history, relative to a finite catalog.
#[derive(Debug, Clone)]
pub struct OrderedConsistencyVerdict {
    pub history: History,
    pub ordered_consistent: bool,
    pub violating_pair: Option<OrderedViolation>,
    /// Histories `h2 >= h` examined across the catalog.
    pub dominators_checked: usize,
}

/// Checks `h <= h2 => Tr(C_h rho C_h^dagger) <= Tr(C_h2 rho C_h2^dagger)` for every
/// history `h2` of every catalog family.
pub fn is_ordered_consistent(
    h: &History,
    catalog: &[Family],
    rho: &DensityMatrix,
    tol: f64,
) -> Result<OrderedConsistencyVerdict> {
    if catalog.is_empty() {
        return Err(Error::Empty("catalog"));
    }
    let mut member = false;
    for (i, f) in catalog.iter().enumerate() {
        match ConsistentFamily::new(f.clone(), rho.clone(), tol) {
            Ok(_) => {}
            Err(Error::InconsistentFamily { .. }) => return Err(Error::InconsistentCatalogFamily(i)),
            Err(e) => return Err(e),
        }
        member |= f.contains(h, tol);
    }
    if !member {
        return Err(Error::HistoryNotInAnyConsistentFamily);
    }
    let w = weight(h, rho)?;
    let mut checked = 0;
    for (fi, f) in catalog.iter().enumerate() {
        for cell in f.all_histories(DEFAULT_MAX_ELEMENTARY)? {
            let g = f.coarse_history(&cell);
            if !history_leq(h, &g, tol)? {
                continue;
            }
            checked += 1;
            let wg = weight(&g, rho)?;
            if w > wg + tol {
                return Ok(OrderedConsistencyVerdict {
                    history: h.clone(),
                    ordered_consistent: false,
                    violating_pair: Some(OrderedViolation {
                        family: fi,
                        dominating: g,
                        weight_history: w,
                        weight_dominating: wg,
                    }),
                    dominators_checked: checked,
                });
            }
        }
    }
    Ok(OrderedConsistencyVerdict {
        history: h.clone(),
        ordered_consistent: true,
        violating_pair: None,
        dominators_checked: checked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DEFAULT_TOL;

    #[test]
    fn three_box_certificate() {
        let [e0, e1, f1, e2] = three_box_quadruple();
        let rho = DensityMatrix::maximally_mixed(3);
        let cert = kent_triple_check(&e0, &e1, &f1, &e2, &rho, DEFAULT_TOL).unwrap();
        assert!((cert.cond_c1 - 1.0).abs() <= 1e-12);
        assert!((cert.cond_c2 - 1.0).abs() <= 1e-12);
        assert!((cert.p_joint - 1.0 / 27.0).abs() <= 1e-14);
        assert!(cert.reverify());
    }

    #[test]
    fn zero_events_fail_on_joint_probability() {
        let [e0, _, f1, _] = three_box_quadruple();
        let z = Projector::zero(3);
        let rho = DensityMatrix::maximally_mixed(3);
        assert_eq!(
            kent_triple_check(&e0, &z, &f1, &z, &rho, DEFAULT_TOL).unwrap_err(),
            Error::ConditionFailed {
                which: KentCondition::JointProbability,
                marginal: false
            }
        );
    }

    #[test]
    fn non_orthogonal_middle_events() {
        let [e0, e1, _, e2] = three_box_quadruple();
        let rho = DensityMatrix::maximally_mixed(3);
        assert_eq!(
            kent_triple_check(&e0, &e1, &e1, &e2, &rho, DEFAULT_TOL).unwrap_err(),
            Error::NotOrthogonal { i: 1, j: 2 }
        );
    }

    #[test]
    fn zero_trials_and_bad_dimension() {
        let out = find_contrary_inferences(&SearchParams::new(3, 0, 7)).unwrap();
        assert!(out.certificates.is_empty());
        assert_eq!(out.evaluated, 0);
        assert_eq!(
            find_contrary_inferences(&SearchParams::new(2, 1, 7)).unwrap_err(),
            Error::SearchDimension(2)
        );
        assert!(find_contrary_inferences(&SearchParams::new(9, 1, 7)).is_err());
    }

    #[test]
    fn leq_basics() {
        let [e0, e1, _, e2] = three_box_quadruple();
        let h1 = three_slot(&e0, &e1, &e2, ["a", "b", "c"]);
        let h0 = three_slot(&e0, &Projector::identity(3), &e2, ["a", "1", "c"]);
        assert!(history_leq(&h1, &h1, DEFAULT_TOL).unwrap());
        assert!(history_leq(&h1, &h0, DEFAULT_TOL).unwrap());
        assert!(!history_leq(&h0, &h1, DEFAULT_TOL).unwrap());
        // Missing times count as identity.
        let short = History::new(vec![0.0, 2.0], vec![e0.clone(), e2.clone()]).unwrap();
        assert!(history_leq(&h1, &short, DEFAULT_TOL).unwrap());
    }

    #[test]
    fn identity_history_is_ordered_consistent() {
        let [e0, e1, _, e2] = three_box_quadruple();
        let rho = DensityMatrix::maximally_mixed(3);
        let c1 = family_of_history(&three_slot(&e0, &e1, &e2, ["a", "b", "c"]), DEFAULT_TOL).unwrap();
        let top = History::identity(3, SLOT_TIMES.to_vec()).unwrap();
        let v = is_ordered_consistent(&top, &[c1], &rho, DEFAULT_TOL).unwrap();
        assert!(v.ordered_consistent);
        assert!(v.violating_pair.is_none());
        assert!(matches!(
            is_ordered_consistent(&top, &[], &rho, DEFAULT_TOL),
            Err(Error::Empty(_))
        ));
    }
}
