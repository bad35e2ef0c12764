//! Decompositions of the identity, histories, families, the decoherence
//! functional and history probabilities.
//!
//! Events are Heisenberg-picture projectors. A family is an ordered list of
//! time slots, each carrying a decomposition of the identity; its elementary
//! histories are the points of the Cartesian product of the slots. A coarse
//! history of a family is identified with its cell: one subset of members per
//! slot, stored as a bitmask ([`CoarseHistory`]).
//!
//! Histories and families defined on different time grids are compared after
//! padding the missing times with the identity event (for histories) or the
//! trivial decomposition `{1}` (for families).

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{DensityMatrix, Matrix, Projector};

/// Cap on the number of elementary histories a family may enumerate.
pub const DEFAULT_MAX_ELEMENTARY: usize = 1_000_000;

/// Cap on the elementary histories covered by a dense decoherence table.
pub const DEFAULT_MAX_DECOHERENCE: usize = 4096;

/// Largest number of members a decomposition may hold (one bit each).
pub const MAX_MEMBERS: usize = 64;

/// Checks that `times` is non-empty, finite and strictly increasing.
pub fn validate_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidTimes("empty time grid".into()));
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidTimes("non-finite time".into()));
    }
    if times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidTimes("times must be strictly increasing".into()));
    }
    Ok(())
}

/// Sorted union of two strictly increasing time grids.
pub fn merge_times(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) if x == y => {
                i += 1;
                j += 1;
                x
            }
            (Some(&x), Some(&y)) if x < y => {
                i += 1;
                x
            }
            (Some(_), Some(&y)) => {
                j += 1;
                y
            }
            (Some(&x), None) => {
                i += 1;
                x
            }
            (None, Some(&y)) => {
                j += 1;
                y
            }
            (None, None) => unreachable!(),
        };
        out.push(next);
    }
    out
}

fn default_times(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64).collect()
}

/// A decomposition of the identity: pairwise orthogonal projectors summing to `1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    members: Vec<Projector>,
    labels: Vec<String>,
}

impl Decomposition {
    /// Validates `members`; zero members are rejected.
    pub fn new(members: Vec<Projector>, tol: f64) -> Result<Self> {
        let labels = (0..members.len()).map(|i| format!("m{i}")).collect();
        Self::with_labels(members, labels, tol, false)
    }

    pub fn with_labels(
        members: Vec<Projector>,
        labels: Vec<String>,
        tol: f64,
        allow_zero_members: bool,
    ) -> Result<Self> {
        let first = members.first().ok_or(Error::Empty("decomposition"))?;
        let dim = first.dim();
        if labels.len() != members.len() {
            return Err(Error::DimensionMismatch {
                expected: members.len(),
                found: labels.len(),
            });
        }
        if members.len() > MAX_MEMBERS {
            return Err(Error::TooManyMembers(members.len()));
        }
        for m in &members {
            if m.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: m.dim(),
                });
            }
        }
        if !allow_zero_members {
            if let Some(i) = members.iter().position(|m| m.matrix().max_abs() <= tol) {
                return Err(Error::ZeroMember(i));
            }
        }
        for i in 0..members.len() {
            for j in (i + 1)..members.len() {
                if !members[i].orthogonal(&members[j], tol)? {
                    return Err(Error::NotOrthogonal { i, j });
                }
            }
        }
        let sum = Projector::orthogonal_sum(dim, &members);
        let residual = sum.matrix().max_abs_diff(&Matrix::identity(dim));
        if residual > tol {
            return Err(Error::DoesNotSumToIdentity { residual });
        }
        Ok(Decomposition { members, labels })
    }

    /// Builds from members already known to decompose the identity.
    pub(crate) fn from_parts_unchecked(members: Vec<Projector>, labels: Vec<String>) -> Self {
        Decomposition { members, labels }
    }

    /// `{1}`.
    pub fn trivial(dim: usize) -> Self {
        Decomposition {
            members: vec![Projector::identity(dim)],
            labels: vec!["1".into()],
        }
    }

    /// `{P, 1 - P}`; `P` must be neither zero nor the identity.
    pub fn binary(p: &Projector, label: &str) -> Self {
        Decomposition {
            members: vec![p.clone(), p.complement()],
            labels: vec![label.to_string(), format!("~{label}")],
        }
    }

    pub fn members(&self) -> &[Projector] {
        &self.members
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.members[0].dim()
    }

    pub fn is_trivial(&self) -> bool {
        self.members.len() == 1
    }

    /// Mask of the members whose sum is `p`, or `None` when `p` is not such a sum.
    ///
    /// A member `M` is selected when `Tr(pM) > Tr(M)/2`; for an exact subset
    /// sum that selects precisely the summands.
    pub fn subset_for(&self, p: &Projector, tol: f64) -> Option<u64> {
        if p.dim() != self.dim() {
            return None;
        }
        let mut mask = 0u64;
        for (i, m) in self.members.iter().enumerate() {
            let tm = m.matrix().trace().re;
            if tm <= 0.5 {
                continue;
            }
            let overlap = p.matrix().trace_with_adjoint(m.matrix()).re;
            if overlap > 0.5 * tm {
                mask |= 1 << i;
            }
        }
        let sum = self.subset_sum(mask);
        (sum.matrix().max_abs_diff(p.matrix()) <= tol).then_some(mask)
    }

    pub fn subset_sum(&self, mask: u64) -> Projector {
        Projector::orthogonal_sum(
            self.dim(),
            self.members
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, m)| m),
        )
    }

    /// Label for a subset of members.
    pub fn subset_label(&self, mask: u64) -> String {
        if mask == self.full_mask() {
            return "1".into();
        }
        if mask == 0 {
            return "0".into();
        }
        let parts: Vec<&str> = (0..self.len())
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| self.labels[i].as_str())
            .collect();
        parts.join("+")
    }

    pub fn full_mask(&self) -> u64 {
        if self.len() == 64 {
            u64::MAX
        } else {
            (1u64 << self.len()) - 1
        }
    }

    /// Same set of members (order ignored) within `tol`.
    pub fn same_members(&self, other: &Decomposition, tol: f64) -> bool {
        self.len() == other.len()
            && self
                .members
                .iter()
                .all(|m| other.members.iter().any(|o| o.approx_eq(m, tol)))
    }
}

/// Checks pairwise orthogonality and completeness of `projectors`.
pub fn validate_decomposition(projectors: Vec<Projector>, tol: f64) -> Result<Decomposition> {
    Decomposition::new(projectors, tol)
}

/// A sequence of events at strictly increasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct History {
    times: Vec<f64>,
    events: Vec<Projector>,
    labels: Vec<String>,
}

impl History {
    pub fn new(times: Vec<f64>, events: Vec<Projector>) -> Result<Self> {
        let labels = (0..events.len()).map(|i| format!("P{i}")).collect();
        Self::with_labels(times, events, labels)
    }

    pub fn with_labels(times: Vec<f64>, events: Vec<Projector>, labels: Vec<String>) -> Result<Self> {
        validate_times(&times)?;
        if times.len() != events.len() || labels.len() != events.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                found: events.len(),
            });
        }
        let dim = events[0].dim();
        if let Some(bad) = events.iter().find(|e| e.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        Ok(History {
            times,
            events,
            labels,
        })
    }

    /// History at times `0, 1, ..., n-1`.
    pub fn from_events(events: Vec<Projector>) -> Result<Self> {
        Self::new(default_times(events.len()), events)
    }

    pub fn identity(dim: usize, times: Vec<f64>) -> Result<Self> {
        let n = times.len();
        Self::with_labels(times, vec![Projector::identity(dim); n], vec!["1".into(); n])
    }

    /// Single event at time `time`.
    pub fn single(time: f64, event: Projector, label: &str) -> Self {
        History {
            times: vec![time],
            events: vec![event],
            labels: vec![label.to_string()],
        }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn events(&self) -> &[Projector] {
        &self.events
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.events[0].dim()
    }

    pub fn label(&self) -> String {
        format!("({})", self.labels.join(","))
    }

    /// Inserts identity events at every time of `times` missing from this history.
    pub fn padded_to(&self, times: &[f64]) -> Result<History> {
        if let Some(&t) = self.times.iter().find(|t| !times.contains(t)) {
            return Err(Error::TimeMismatch(t));
        }
        let dim = self.dim();
        let mut events = Vec::with_capacity(times.len());
        let mut labels = Vec::with_capacity(times.len());
        for t in times {
            match self.times.iter().position(|s| s == t) {
                Some(i) => {
                    events.push(self.events[i].clone());
                    labels.push(self.labels[i].clone());
                }
                None => {
                    events.push(Projector::identity(dim));
                    labels.push("1".into());
                }
            }
        }
        Ok(History {
            times: times.to_vec(),
            events,
            labels,
        })
    }

    /// `C_h = E_n ... E_2 E_1`, the last-time event leftmost.
    pub fn chain_operator(&self) -> Matrix {
        let mut c = self.events[0].matrix().clone();
        for e in &self.events[1..] {
            c = e.matrix() * &c;
        }
        c
    }
}

/// `C_h = E_n ... E_1`.
pub fn chain_operator(h: &History) -> Matrix {
    h.chain_operator()
}

/// `D(h1, h2) = Tr(C_{h1} rho C_{h2}^dagger)`.
pub fn decoherence_functional(h1: &History, h2: &History, rho: &DensityMatrix) -> Result<Complex64> {
    for d in [h1.dim(), h2.dim()] {
        if d != rho.dim() {
            return Err(Error::DimensionMismatch {
                expected: rho.dim(),
                found: d,
            });
        }
    }
    let k = &h1.chain_operator() * rho.matrix();
    Ok(k.trace_with_adjoint(&h2.chain_operator()))
}

/// `Tr(C_h rho C_h^dagger)`, the unnormalized weight of a history.
pub fn weight(h: &History, rho: &DensityMatrix) -> Result<f64> {
    Ok(decoherence_functional(h, h, rho)?.re)
}

/// A coarse history of a specific family: one member subset per slot.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CoarseHistory {
    pub masks: Vec<u64>,
}

impl CoarseHistory {
    /// True iff the elementary history with member indices `elementary`
    /// belongs to this cell.
    pub fn contains_elementary(&self, elementary: &[usize]) -> bool {
        self.masks
            .iter()
            .zip(elementary)
            .all(|(m, &i)| m >> i & 1 == 1)
    }

    /// Slot-wise subset inclusion.
    pub fn is_subcell_of(&self, other: &CoarseHistory) -> bool {
        self.masks
            .iter()
            .zip(&other.masks)
            .all(|(a, b)| a & !b == 0)
    }

    pub fn is_empty_cell(&self) -> bool {
        self.masks.iter().any(|&m| m == 0)
    }
}

/// Family of histories generated by one decomposition per time slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Family {
    times: Vec<f64>,
    slots: Vec<Decomposition>,
}

impl Family {
    pub fn new(times: Vec<f64>, slots: Vec<Decomposition>) -> Result<Self> {
        validate_times(&times)?;
        if times.len() != slots.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                found: slots.len(),
            });
        }
        let dim = slots[0].dim();
        if let Some(bad) = slots.iter().find(|s| s.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        Ok(Family { times, slots })
    }

    /// Family at times `0, 1, ..., n-1`.
    pub fn from_slots(slots: Vec<Decomposition>) -> Result<Self> {
        Self::new(default_times(slots.len()), slots)
    }

    /// Every slot is `{1}`.
    pub fn trivial(dim: usize, times: Vec<f64>) -> Result<Self> {
        let n = times.len();
        Self::new(times, vec![Decomposition::trivial(dim); n])
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn slots(&self) -> &[Decomposition] {
        &self.slots
    }

    pub fn dim(&self) -> usize {
        self.slots[0].dim()
    }

    pub fn slot_count(&self) -> usize {
        self.slots.len()
    }

    /// Inserts `{1}` slots at the times of `times` missing from this family.
    pub fn padded_to(&self, times: &[f64]) -> Result<Family> {
        if let Some(&t) = self.times.iter().find(|t| !times.contains(t)) {
            return Err(Error::TimeMismatch(t));
        }
        let dim = self.dim();
        let slots = times
            .iter()
            .map(|t| match self.times.iter().position(|s| s == t) {
                Some(i) => self.slots[i].clone(),
                None => Decomposition::trivial(dim),
            })
            .collect();
        Ok(Family {
            times: times.to_vec(),
            slots,
        })
    }

    pub fn elementary_count(&self) -> u128 {
        self.slots.iter().map(|s| s.len() as u128).product()
    }

    /// Elementary histories as member-index tuples, lexicographic with the
    /// first slot most significant.
    pub fn elementary_indices(&self, cap: usize) -> Result<Vec<Vec<usize>>> {
        let count = self.elementary_count();
        if count > cap as u128 {
            return Err(Error::ExplosionGuard {
                count,
                cap: cap as u128,
            });
        }
        let sizes: Vec<usize> = self.slots.iter().map(|s| s.len()).collect();
        let mut out = Vec::with_capacity(count as usize);
        let mut current = vec![0usize; sizes.len()];
        loop {
            out.push(current.clone());
            let mut k = sizes.len();
            loop {
                if k == 0 {
                    return Ok(out);
                }
                k -= 1;
                current[k] += 1;
                if current[k] < sizes[k] {
                    break;
                }
                current[k] = 0;
            }
        }
    }

    pub fn elementary_history(&self, indices: &[usize]) -> History {
        History {
            times: self.times.clone(),
            events: self
                .slots
                .iter()
                .zip(indices)
                .map(|(s, &i)| s.members[i].clone())
                .collect(),
            labels: self
                .slots
                .iter()
                .zip(indices)
                .map(|(s, &i)| s.labels[i].clone())
                .collect(),
        }
    }

    pub fn elementary_coarse(&self, indices: &[usize]) -> CoarseHistory {
        CoarseHistory {
            masks: indices.iter().map(|&i| 1u64 << i).collect(),
        }
    }

    /// All elementary histories in enumeration order.
    pub fn enumerate_elementary(&self, cap: usize) -> Result<Vec<History>> {
        Ok(self
            .elementary_indices(cap)?
            .iter()
            .map(|ix| self.elementary_history(ix))
            .collect())
    }

    /// Identifies `h` with a cell of this family, or `None` if `h` is not in it.
    ///
    /// Times of `h` absent from the family behave as `{1}` slots: the event
    /// there must be the identity (ignored) or zero (empty cell).
    pub fn locate(&self, h: &History, tol: f64) -> Option<CoarseHistory> {
        if h.dim() != self.dim() {
            return None;
        }
        let mut empty = false;
        for (t, e) in h.times.iter().zip(&h.events) {
            if !self.times.contains(t) {
                if e.matrix().max_abs() <= tol {
                    empty = true;
                } else if e.matrix().max_abs_diff(&Matrix::identity(self.dim())) > tol {
                    return None;
                }
            }
        }
        let mut masks = Vec::with_capacity(self.slots.len());
        for (t, slot) in self.times.iter().zip(&self.slots) {
            let mask = match h.times.iter().position(|s| s == t) {
                Some(i) => slot.subset_for(&h.events[i], tol)?,
                None => slot.full_mask(),
            };
            masks.push(mask);
        }
        if empty {
            masks[0] = 0;
        }
        Some(CoarseHistory { masks })
    }

    pub fn contains(&self, h: &History, tol: f64) -> bool {
        self.locate(h, tol).is_some()
    }

    /// The history (slot-wise member sums) behind a cell.
    pub fn coarse_history(&self, cell: &CoarseHistory) -> History {
        History {
            times: self.times.clone(),
            events: self
                .slots
                .iter()
                .zip(&cell.masks)
                .map(|(s, &m)| s.subset_sum(m))
                .collect(),
            labels: self
                .slots
                .iter()
                .zip(&cell.masks)
                .map(|(s, &m)| s.subset_label(m))
                .collect(),
        }
    }

    /// Member-index tuples of the elementary histories inside `cell`.
    pub fn cell_indices(&self, cell: &CoarseHistory) -> Vec<Vec<usize>> {
        let per_slot: Vec<Vec<usize>> = self
            .slots
            .iter()
            .zip(&cell.masks)
            .map(|(s, &m)| (0..s.len()).filter(|i| m >> i & 1 == 1).collect())
            .collect();
        let mut out = vec![Vec::new()];
        for choices in &per_slot {
            out = out
                .into_iter()
                .flat_map(|prefix: Vec<usize>| {
                    choices.iter().map(move |&c| {
                        let mut p = prefix.clone();
                        p.push(c);
                        p
                    })
                })
                .collect();
        }
        out
    }

    /// Every history of the family: all combinations of member subsets.
    pub fn all_histories(&self, cap: usize) -> Result<Vec<CoarseHistory>> {
        let bits: u32 = self.slots.iter().map(|s| s.len() as u32).sum();
        if bits >= 127 || (1u128 << bits) > cap as u128 {
            return Err(Error::ExplosionGuard {
                count: if bits >= 127 { u128::MAX } else { 1u128 << bits },
                cap: cap as u128,
            });
        }
        let mut out = vec![Vec::new()];
        for s in &self.slots {
            let full = s.full_mask();
            out = out
                .into_iter()
                .flat_map(|prefix: Vec<u64>| {
                    (0..=full).map(move |m| {
                        let mut p = prefix.clone();
                        p.push(m);
                        p
                    })
                })
                .collect();
        }
        Ok(out.into_iter().map(|masks| CoarseHistory { masks }).collect())
    }

    /// Slot-wise set equality of members (after padding both to a common grid).
    pub fn same_as(&self, other: &Family, tol: f64) -> bool {
        let times = merge_times(&self.times, &other.times);
        match (self.padded_to(&times), other.padded_to(&times)) {
            (Ok(a), Ok(b)) if a.dim() == b.dim() => a
                .slots
                .iter()
                .zip(&b.slots)
                .all(|(x, y)| x.same_members(y, tol)),
            _ => false,
        }
    }
}

/// The cell of elementary histories dominated by `h` in `family`.
pub fn coarse_history_cell(h: &History, family: &Family, tol: f64) -> Result<Vec<History>> {
    let cell = family.locate(h, tol).ok_or(Error::HistoryNotInFamily)?;
    Ok(family
        .cell_indices(&cell)
        .iter()
        .map(|ix| family.elementary_history(ix))
        .collect())
}

/// Pairwise decoherence-functional table over a family's elementary histories.
#[derive(Debug, Clone)]
pub struct DecoherenceReport {
    /// Elementary histories (member-index tuples) in enumeration order.
    pub histories: Vec<Vec<usize>>,
    /// Row-major table with `values[i * M + j] = D(h_i, h_j)`.
    pub values: Vec<Complex64>,
    pub max_off_diagonal_re: f64,
    /// Pair attaining `max_off_diagonal_re`.
    pub worst_pair: Option<(usize, usize)>,
    pub is_weakly_decoherent: bool,
    pub tol_used: f64,
}

impl DecoherenceReport {
    pub fn compute(family: &Family, rho: &DensityMatrix, tol: f64, cap: usize) -> Result<Self> {
        if rho.dim() != family.dim() {
            return Err(Error::DimensionMismatch {
                expected: family.dim(),
                found: rho.dim(),
            });
        }
        let histories = family.elementary_indices(cap)?;
        let chains: Vec<Matrix> = histories
            .par_iter()
            .map(|ix| family.elementary_history(ix).chain_operator())
            .collect();
        let m = histories.len();
        let values: Vec<Complex64> = chains
            .par_iter()
            .flat_map_iter(|ci| {
                let k = ci * rho.matrix();
                chains
                    .iter()
                    .map(move |cj| k.trace_with_adjoint(cj))
                    .collect::<Vec<_>>()
            })
            .collect();
        let mut max_off = 0.0;
        let mut worst = None;
        for i in 0..m {
            for j in (i + 1)..m {
                let r = values[i * m + j].re.abs();
                if r > max_off || worst.is_none() {
                    max_off = r;
                    worst = Some((i, j));
                }
            }
        }
        Ok(DecoherenceReport {
            histories,
            values,
            max_off_diagonal_re: max_off,
            worst_pair: worst,
            is_weakly_decoherent: max_off <= tol,
            tol_used: tol,
        })
    }

    pub fn len(&self) -> usize {
        self.histories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.histories.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.histories.len() + j]
    }

    /// Rule-2 probabilities of the elementary histories, in enumeration order.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.get(i, i).re).collect()
    }
}

/// Weak-decoherence check: `|Re D(h1, h2)| <= tol` for all distinct elementary pairs.
pub fn is_weakly_decoherent(family: &Family, rho: &DensityMatrix, tol: f64) -> Result<DecoherenceReport> {
    DecoherenceReport::compute(family, rho, tol, DEFAULT_MAX_DECOHERENCE)
}

/// A family that passed the weak-decoherence check for a given state.
#[derive(Debug, Clone)]
pub struct ConsistentFamily {
    family: Family,
    rho: DensityMatrix,
    tol: f64,
    report: DecoherenceReport,
}

impl ConsistentFamily {
    pub fn new(family: Family, rho: DensityMatrix, tol: f64) -> Result<Self> {
        let report = is_weakly_decoherent(&family, &rho, tol)?;
        if !report.is_weakly_decoherent {
            return Err(Error::InconsistentFamily {
                max_off_diagonal_re: report.max_off_diagonal_re,
            });
        }
        Ok(ConsistentFamily {
            family,
            rho,
            tol,
            report,
        })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn rho(&self) -> &DensityMatrix {
        &self.rho
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn report(&self) -> &DecoherenceReport {
        &self.report
    }

    /// Clamped Rule-2 probabilities of the elementary histories.
    pub fn elementary_probabilities(&self) -> Vec<f64> {
        self.report
            .diagonal()
            .into_iter()
            .map(|p| p.clamp(0.0, 1.0))
            .collect()
    }

    pub fn probability_of_cell(&self, cell: &CoarseHistory) -> f64 {
        let h = self.family.coarse_history(cell);
        let p = decoherence_functional(&h, &h, &self.rho)
            .expect("family and state share a dimension")
            .re;
        p.clamp(0.0, 1.0)
    }

    /// `p(h) = Re D(h, h)`, clamped to `[0, 1]`.
    pub fn probability(&self, h: &History) -> Result<f64> {
        let cell = self.family.locate(h, self.tol).ok_or(Error::HistoryNotInFamily)?;
        Ok(self.probability_of_cell(&cell))
    }

    /// `p(target and given) / p(given)`, the conjunction taken slot-wise.
    pub fn conditional_probability(&self, target: &History, given: &History) -> Result<f64> {
        let given_cell = self
            .family
            .locate(given, self.tol)
            .ok_or(Error::HistoryNotInFamily)?;
        if self.family.locate(target, self.tol).is_none() {
            return Err(Error::HistoryNotInFamily);
        }
        let p_given = self.probability_of_cell(&given_cell);
        if p_given <= self.tol {
            return Err(Error::ZeroConditioningEvent(p_given));
        }
        let conj = conjoin(target, given, self.tol)?;
        let conj_cell = match self.family.locate(&conj, self.tol) {
            Some(c) => c,
            None => {
                let times = merge_times(self.family.times(), conj.times());
                let padded = self.family.padded_to(&times)?;
                let slot = padded
                    .slots
                    .iter()
                    .zip(conj.padded_to(&times)?.events())
                    .position(|(s, e)| s.subset_for(e, self.tol).is_none())
                    .unwrap_or(0);
                return Err(Error::NotConjoinable { slot });
            }
        };
        Ok((self.probability_of_cell(&conj_cell) / p_given).clamp(0.0, 1.0))
    }
}

/// Slot-wise product of two histories; each pair of events must commute.
pub fn conjoin(a: &History, b: &History, tol: f64) -> Result<History> {
    let times = merge_times(a.times(), b.times());
    let a = a.padded_to(&times)?;
    let b = b.padded_to(&times)?;
    let mut events = Vec::with_capacity(times.len());
    let mut labels = Vec::with_capacity(times.len());
    for (slot, (x, y)) in a.events.iter().zip(&b.events).enumerate() {
        if !x.commutes(y, tol)? {
            return Err(Error::NotConjoinable { slot });
        }
        events.push(x.commuting_product(y));
        labels.push(match (a.labels[slot].as_str(), b.labels[slot].as_str()) {
            ("1", l) | (l, "1") => l.to_string(),
            (l, r) => format!("{l}*{r}"),
        });
    }
    History::with_labels(times, events, labels)
}

/// Rule-2 probability of `h` in a consistent `family`.
pub fn probability(h: &History, family: &Family, rho: &DensityMatrix, tol: f64) -> Result<f64> {
    ConsistentFamily::new(family.clone(), rho.clone(), tol)?.probability(h)
}

/// `p(target | given)` in a consistent `family`.
pub fn conditional_probability(
    target: &History,
    given: &History,
    family: &Family,
    rho: &DensityMatrix,
    tol: f64,
) -> Result<f64> {
    ConsistentFamily::new(family.clone(), rho.clone(), tol)?.conditional_probability(target, given)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DEFAULT_TOL;

    fn diag3(axes: &[usize]) -> Projector {
        Projector::coordinate(3, axes)
    }

    fn binary_family(ps: &[Projector]) -> Family {
        Family::from_slots(ps.iter().map(|p| Decomposition::binary(p, "E")).collect()).unwrap()
    }

    #[test]
    fn decomposition_validation() {
        assert!(validate_decomposition(vec![Projector::identity(3)], DEFAULT_TOL).is_ok());
        let p = diag3(&[0]);
        assert!(validate_decomposition(vec![p.clone(), p.complement()], DEFAULT_TOL).is_ok());
        assert_eq!(
            validate_decomposition(vec![p.clone(), p.clone()], DEFAULT_TOL),
            Err(Error::NotOrthogonal { i: 0, j: 1 })
        );
        assert!(matches!(
            validate_decomposition(vec![diag3(&[0]), diag3(&[1])], DEFAULT_TOL),
            Err(Error::DoesNotSumToIdentity { .. })
        ));
        assert_eq!(
            validate_decomposition(vec![Projector::zero(3), Projector::identity(3)], DEFAULT_TOL),
            Err(Error::ZeroMember(0))
        );
        assert!(Decomposition::with_labels(
            vec![Projector::zero(3), Projector::identity(3)],
            vec!["z".into(), "1".into()],
            DEFAULT_TOL,
            true
        )
        .is_ok());
    }

    #[test]
    fn elementary_enumeration_sizes_and_order() {
        let f = binary_family(&[diag3(&[0])]);
        assert_eq!(f.enumerate_elementary(DEFAULT_MAX_ELEMENTARY).unwrap().len(), 2);
        let f = binary_family(&[diag3(&[0]), diag3(&[1]), diag3(&[2])]);
        let ix = f.elementary_indices(DEFAULT_MAX_ELEMENTARY).unwrap();
        assert_eq!(ix.len(), 8);
        assert_eq!(ix[0], vec![0, 0, 0]);
        assert_eq!(ix[1], vec![0, 0, 1]);
        assert_eq!(ix[7], vec![1, 1, 1]);
        assert!(matches!(
            f.elementary_indices(7),
            Err(Error::ExplosionGuard { count: 8, cap: 7 })
        ));
    }

    #[test]
    fn cells() {
        let ps = [diag3(&[0]), diag3(&[1]), diag3(&[2])];
        let f = binary_family(&ps);
        let elem = f.elementary_history(&[1, 0, 1]);
        assert_eq!(coarse_history_cell(&elem, &f, DEFAULT_TOL).unwrap(), vec![elem.clone()]);

        let top = History::identity(3, vec![0.0, 1.0, 2.0]).unwrap();
        assert_eq!(coarse_history_cell(&top, &f, DEFAULT_TOL).unwrap().len(), 8);

        let h = History::from_events(vec![ps[0].clone(), Projector::identity(3), ps[2].clone()]).unwrap();
        let cell = coarse_history_cell(&h, &f, DEFAULT_TOL).unwrap();
        assert_eq!(
            cell,
            vec![f.elementary_history(&[0, 0, 0]), f.elementary_history(&[0, 1, 0])]
        );

        let outside = History::from_events(vec![diag3(&[1])]).unwrap();
        assert_eq!(
            coarse_history_cell(&outside, &f, DEFAULT_TOL),
            Err(Error::HistoryNotInFamily)
        );
    }

    #[test]
    fn chain_operator_basics() {
        let top = History::identity(3, vec![0.0, 1.0]).unwrap();
        assert_eq!(top.chain_operator(), Matrix::identity(3));
        let p = diag3(&[0, 2]);
        assert_eq!(History::from_events(vec![p.clone()]).unwrap().chain_operator(), *p.matrix());
    }

    #[test]
    fn decoherence_functional_basics() {
        let rho = DensityMatrix::maximally_mixed(3);
        let top = History::identity(3, vec![0.0, 1.0]).unwrap();
        let d = decoherence_functional(&top, &top, &rho).unwrap();
        assert!((d - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let e = History::from_events(vec![diag3(&[0])]).unwrap();
        let f = History::from_events(vec![diag3(&[1, 2])]).unwrap();
        assert!(decoherence_functional(&e, &f, &rho).unwrap().norm() < 1e-15);
        let fam = binary_family(&[diag3(&[0])]);
        let p = probability(&e, &fam, &rho, DEFAULT_TOL).unwrap();
        assert!((decoherence_functional(&e, &e, &rho).unwrap().re - p).abs() < 1e-15);
        let wrong = DensityMatrix::maximally_mixed(2);
        assert!(matches!(
            decoherence_functional(&e, &f, &wrong),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn single_slot_family_is_decoherent() {
        let fam = Family::from_slots(vec![Decomposition::new(
            vec![diag3(&[0]), diag3(&[1]), diag3(&[2])],
            DEFAULT_TOL,
        )
        .unwrap()])
        .unwrap();
        let r = is_weakly_decoherent(&fam, &DensityMatrix::maximally_mixed(3), DEFAULT_TOL).unwrap();
        assert!(r.is_weakly_decoherent);
        assert_eq!(r.len(), 3);
        assert!(r.max_off_diagonal_re <= 1e-15);
    }

    #[test]
    fn probability_normalization_and_top() {
        let u = Projector::from_vectors(
            &[vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(1.0, 0.0)]],
            DEFAULT_TOL,
        )
        .unwrap();
        let fam = binary_family(&[diag3(&[0]), u]);
        let rho = DensityMatrix::maximally_mixed(3);
        let cf = ConsistentFamily::new(fam.clone(), rho, DEFAULT_TOL).unwrap();
        let total: f64 = cf.elementary_probabilities().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        let top = History::identity(3, vec![0.0, 1.0]).unwrap();
        assert!((cf.probability(&top).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(
            cf.probability(&History::from_events(vec![diag3(&[1])]).unwrap()),
            Err(Error::HistoryNotInFamily)
        );
    }

    #[test]
    fn conditional_edge_cases() {
        let fam = binary_family(&[diag3(&[0]), diag3(&[0, 1])]);
        let cf = ConsistentFamily::new(fam.clone(), DensityMatrix::maximally_mixed(3), DEFAULT_TOL).unwrap();
        let h = fam.elementary_history(&[0, 0]);
        assert!((cf.conditional_probability(&h, &h).unwrap() - 1.0).abs() < 1e-12);
        // (E, 1 - F) with E <= F is the zero history.
        let zero = fam.elementary_history(&[0, 1]);
        assert!(matches!(
            cf.conditional_probability(&h, &zero),
            Err(Error::ZeroConditioningEvent(_))
        ));
    }

    #[test]
    fn padding_and_time_merge() {
        assert_eq!(merge_times(&[0.0, 2.0], &[1.0, 2.0, 3.0]), vec![0.0, 1.0, 2.0, 3.0]);
        let h = History::new(vec![0.0, 2.0], vec![diag3(&[0]), diag3(&[1])]).unwrap();
        let p = h.padded_to(&[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p.events()[1], Projector::identity(3));
        assert_eq!(p.chain_operator(), h.chain_operator());
        assert_eq!(h.padded_to(&[0.0, 1.0]), Err(Error::TimeMismatch(2.0)));
        assert!(History::new(vec![1.0, 0.0], vec![diag3(&[0]), diag3(&[1])]).is_err());
    }

    #[test]
    fn locate_handles_extra_times() {
        let fam = binary_family(&[diag3(&[0])]);
        let h = History::new(vec![0.0, 5.0], vec![diag3(&[0]), Projector::identity(3)]).unwrap();
        assert_eq!(fam.locate(&h, DEFAULT_TOL).unwrap().masks, vec![0b01]);
        let bad = History::new(vec![0.0, 5.0], vec![diag3(&[0]), diag3(&[1])]).unwrap();
        assert!(fam.locate(&bad, DEFAULT_TOL).is_none());
    }
}
