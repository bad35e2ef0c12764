//! Finite-ensemble model of family supports and per-system truth functionals.
//!
//! The model is one admissible instantiation, not a characterization of
//! supports: every simulated system owns one *maximal* catalog family, drawn
//! with user-supplied weights, and one elementary history of that family,
//! drawn with the Rule-2 probabilities. The system belongs to the support
//! `c(C)` of every catalog family `C` that coarse-grains its maximal family,
//! and the elementary history it realizes in such a `C` is the unique one
//! whose cell contains the realized fine history.
//!
//! With this construction the support axioms (downward closure under
//! coarse-graining, family-independent occurrence, the partition identities)
//! hold by design; the checkers below are regression guards and also run on
//! hand-built models.
//!
//! An optional pairing mode adds, for systems where one of two orthogonal
//! events `E, F` occurs, membership in the catalog family generated by
//! `{E, F}`, so that `E` occurring forces `F` to be defined and false.
//! Families added this way are no longer sampled with Rule-2 frequencies.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family_algebra::{are_compatible, generated_family, is_coarse_graining};
use crate::histories::{CoarseHistory, ConsistentFamily, Family, History};
use crate::inference::ContraryInferenceCertificate;
use crate::linalg::{DensityMatrix, Projector};
use crate::random::stream_rng;

/// Systems per independently seeded shard.
pub const SHARD_SIZE: usize = 4096;

/// Cap on the histories enumerated per family when comparing shared histories.
pub const MAX_SHARED_HISTORIES: usize = 1 << 16;

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: String,
    pub family: Family,
}

impl CatalogEntry {
    pub fn new(name: impl Into<String>, family: Family) -> Self {
        CatalogEntry {
            name: name.into(),
            family,
        }
    }
}

/// A pair of orthogonal events at one time.
#[derive(Debug, Clone)]
pub struct EventPair {
    pub time: f64,
    pub e: Projector,
    pub f: Projector,
}

impl EventPair {
    pub fn new(time: f64, e: Projector, f: Projector) -> Self {
        EventPair { time, e, f }
    }

    pub fn e_history(&self) -> History {
        History::single(self.time, self.e.clone(), "E")
    }

    pub fn f_history(&self) -> History {
        History::single(self.time, self.f.clone(), "F")
    }

    /// `C({E, F})`.
    pub fn generated(&self, tol: f64) -> Result<Family> {
        generated_family(&[self.e_history(), self.f_history()], tol)
    }

    fn check_orthogonal(&self, tol: f64) -> Result<()> {
        if self.e.orthogonal(&self.f, tol)? {
            Ok(())
        } else {
            Err(Error::NotOrthogonal { i: 0, j: 1 })
        }
    }
}

#[derive(Debug, Clone)]
pub struct SupportOptions {
    pub ensemble_size: usize,
    pub seed: u64,
    pub tol: f64,
    /// Event pairs for which `E` occurring must make `F` defined and false
    /// (and vice versa). Each pair's generated family must be in the catalog.
    pub exclusive_pairs: Vec<EventPair>,
}

impl SupportOptions {
    pub fn new(ensemble_size: usize, seed: u64) -> Self {
        SupportOptions {
            ensemble_size,
            seed,
            tol: crate::linalg::DEFAULT_TOL,
            exclusive_pairs: Vec::new(),
        }
    }
}

/// Support of one catalog family for one system, with the elementary history
/// realized there.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Membership {
    pub family: usize,
    pub realized: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemRecord {
    pub id: usize,
    pub maximal_family: usize,
    pub realized_elementary: Vec<usize>,
    pub membership: Vec<Membership>,
}

impl SystemRecord {
    pub fn membership_of(&self, family: usize) -> Option<&Membership> {
        self.membership.iter().find(|m| m.family == family)
    }

    pub fn in_support(&self, family: usize) -> bool {
        self.membership_of(family).is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthValue {
    True,
    False,
    Undefined,
}

/// How a coarse slot reads its realized member off a finer family.
#[derive(Debug, Clone, PartialEq)]
enum SlotMap {
    /// The fine family has no slot at this time; the coarse slot is `{1}`.
    Trivial,
    FromFine { fine_slot: usize, map: Vec<usize> },
}

type CoarseMap = Vec<SlotMap>;

fn coarse_map(coarse: &Family, fine: &Family, tol: f64) -> Result<Option<CoarseMap>> {
    let order = is_coarse_graining(coarse, fine, tol)?;
    let Some(witness) = order.witness else {
        return Ok(None);
    };
    let mut maps = Vec::with_capacity(coarse.slot_count());
    for t in coarse.times() {
        let k = order.times.iter().position(|s| s == t).expect("merged grid");
        match fine.times().iter().position(|s| s == t) {
            None => maps.push(SlotMap::Trivial),
            Some(fine_slot) => {
                let fine_len = fine.slots()[fine_slot].len();
                let mut map = vec![usize::MAX; fine_len];
                for (ci, mask) in witness[k].iter().enumerate() {
                    for (fi, m) in map.iter_mut().enumerate() {
                        if mask >> fi & 1 == 1 {
                            *m = ci;
                        }
                    }
                }
                maps.push(SlotMap::FromFine { fine_slot, map });
            }
        }
    }
    Ok(Some(maps))
}

fn apply_map(map: &CoarseMap, fine_realized: &[usize]) -> Vec<usize> {
    map.iter()
        .map(|m| match m {
            SlotMap::Trivial => 0,
            SlotMap::FromFine { fine_slot, map } => map[fine_realized[*fine_slot]],
        })
        .collect()
}

/// Locations of one history in every catalog family.
#[derive(Debug, Clone)]
pub struct HistoryQuery {
    cells: Vec<Option<CoarseHistory>>,
}

impl HistoryQuery {
    pub fn is_in(&self, family: usize) -> bool {
        self.cells[family].is_some()
    }
}

#[derive(Debug, Clone)]
pub struct SupportModel {
    catalog: Vec<CatalogEntry>,
    /// `order[c][f]`: how `catalog[c]` reads off `catalog[f]` when `c ⊆ f`.
    order: Vec<Vec<Option<CoarseMap>>>,
    probabilities: Vec<Vec<f64>>,
    elementary: Vec<Vec<Vec<usize>>>,
    systems: Vec<SystemRecord>,
    rho: DensityMatrix,
    seed: u64,
    tol: f64,
}

fn prepare_catalog(
    catalog: &[CatalogEntry],
    rho: &DensityMatrix,
    tol: f64,
) -> Result<(Vec<Vec<Option<CoarseMap>>>, Vec<Vec<f64>>, Vec<Vec<Vec<usize>>>)> {
    if catalog.is_empty() {
        return Err(Error::Empty("catalog"));
    }
    let mut probabilities = Vec::with_capacity(catalog.len());
    let mut elementary = Vec::with_capacity(catalog.len());
    for (i, entry) in catalog.iter().enumerate() {
        let cf = match ConsistentFamily::new(entry.family.clone(), rho.clone(), tol) {
            Ok(cf) => cf,
            Err(Error::InconsistentFamily { .. }) => return Err(Error::InconsistentCatalogFamily(i)),
            Err(e) => return Err(e),
        };
        probabilities.push(cf.elementary_probabilities());
        elementary.push(cf.report().histories.clone());
    }
    let order = catalog
        .iter()
        .map(|c| {
            catalog
                .iter()
                .map(|f| coarse_map(&c.family, &f.family, tol))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((order, probabilities, elementary))
}

/// Draws an ensemble: maximal family by weight, realized elementary history
/// by Rule 2, membership by downward closure.
pub fn build_support_model(
    catalog: Vec<CatalogEntry>,
    weights: &[f64],
    rho: &DensityMatrix,
    options: &SupportOptions,
) -> Result<SupportModel> {
    if weights.len() != catalog.len() {
        return Err(Error::WeightCount {
            expected: catalog.len(),
            found: weights.len(),
        });
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || weights.iter().sum::<f64>() <= 0.0 {
        return Err(Error::ZeroWeightSum);
    }
    let tol = options.tol;
    let (order, probabilities, elementary) = prepare_catalog(&catalog, rho, tol)?;

    let mut pairs = Vec::with_capacity(options.exclusive_pairs.len());
    for pair in &options.exclusive_pairs {
        pair.check_orthogonal(tol)?;
        let generated = pair.generated(tol)?;
        let idx = catalog
            .iter()
            .position(|c| c.family.same_as(&generated, tol))
            .ok_or_else(|| Error::CatalogMissingFamily("C({E,F})".into()))?;
        let e_cell = generated.locate(&pair.e_history(), tol);
        let f_cell = generated.locate(&pair.f_history(), tol);
        let e_query = HistoryQuery {
            cells: catalog.iter().map(|c| c.family.locate(&pair.e_history(), tol)).collect(),
        };
        let f_query = HistoryQuery {
            cells: catalog.iter().map(|c| c.family.locate(&pair.f_history(), tol)).collect(),
        };
        pairs.push((idx, e_query, f_query, e_cell, f_cell));
    }

    let family_dist = WeightedIndex::new(weights).map_err(|_| Error::ZeroWeightSum)?;
    let elem_dists: Vec<Option<WeightedIndex<f64>>> = probabilities
        .iter()
        .map(|p| WeightedIndex::new(p).ok())
        .collect();

    let mut model = SupportModel {
        catalog,
        order,
        probabilities,
        elementary,
        systems: Vec::new(),
        rho: rho.clone(),
        seed: options.seed,
        tol,
    };

    let shards = options.ensemble_size.div_ceil(SHARD_SIZE);
    let systems: Vec<SystemRecord> = (0..shards)
        .into_par_iter()
        .flat_map_iter(|shard| {
            let mut rng = stream_rng(options.seed, shard as u64);
            let start = shard * SHARD_SIZE;
            let end = (start + SHARD_SIZE).min(options.ensemble_size);
            let model = &model;
            let family_dist = &family_dist;
            let elem_dists = &elem_dists;
            let pairs = &pairs;
            (start..end)
                .map(|id| {
                    let maximal = family_dist.sample(&mut rng);
                    let pick = elem_dists[maximal]
                        .as_ref()
                        .map(|d| d.sample(&mut rng))
                        .unwrap_or(0);
                    let realized = model.elementary[maximal][pick].clone();
                    let mut record = SystemRecord {
                        id,
                        maximal_family: maximal,
                        realized_elementary: realized.clone(),
                        membership: model.closure_below(maximal, &realized),
                    };
                    for (idx, eq, fq, e_cell, f_cell) in pairs {
                        if record.in_support(*idx) {
                            continue;
                        }
                        let te = model.truth_of(&record, eq);
                        let tf = model.truth_of(&record, fq);
                        let cell = match (te, tf) {
                            (TruthValue::True, _) => e_cell,
                            (_, TruthValue::True) => f_cell,
                            _ => continue,
                        };
                        let Some(cell) = cell else { continue };
                        let realized: Vec<usize> =
                            cell.masks.iter().map(|m| m.trailing_zeros() as usize).collect();
                        for m in model.closure_below(*idx, &realized) {
                            if !record.in_support(m.family) {
                                record.membership.push(m);
                            }
                        }
                    }
                    record.membership.sort_by_key(|m| m.family);
                    record
                })
                .collect::<Vec<_>>()
        })
        .collect();
    model.systems = systems;
    Ok(model)
}

impl SupportModel {
    /// Assembles a model from explicit records (hand-built or perturbed ensembles).
    pub fn from_records(
        catalog: Vec<CatalogEntry>,
        rho: &DensityMatrix,
        tol: f64,
        systems: Vec<SystemRecord>,
    ) -> Result<Self> {
        let (order, probabilities, elementary) = prepare_catalog(&catalog, rho, tol)?;
        Ok(SupportModel {
            catalog,
            order,
            probabilities,
            elementary,
            systems,
            rho: rho.clone(),
            seed: 0,
            tol,
        })
    }

    fn closure_below(&self, fine: usize, realized: &[usize]) -> Vec<Membership> {
        (0..self.catalog.len())
            .filter_map(|c| {
                self.order[c][fine].as_ref().map(|map| Membership {
                    family: c,
                    realized: apply_map(map, realized),
                })
            })
            .collect()
    }

    pub fn catalog(&self) -> &[CatalogEntry] {
        &self.catalog
    }

    pub fn systems(&self) -> &[SystemRecord] {
        &self.systems
    }

    /// Record with the given id (ids normally equal positions).
    pub fn system(&self, id: usize) -> Option<&SystemRecord> {
        self.systems
            .get(id)
            .filter(|s| s.id == id)
            .or_else(|| self.systems.iter().find(|s| s.id == id))
    }

    pub fn into_records(self) -> Vec<SystemRecord> {
        self.systems
    }

    pub fn rho(&self) -> &DensityMatrix {
        &self.rho
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// `C_a ⊆ C_b` within the catalog.
    pub fn is_coarser(&self, a: usize, b: usize) -> bool {
        self.order[a][b].is_some()
    }

    pub fn elementary_probabilities(&self, family: usize) -> &[f64] {
        &self.probabilities[family]
    }

    pub fn elementary_histories(&self, family: usize) -> &[Vec<usize>] {
        &self.elementary[family]
    }

    pub fn family_index(&self, family: &Family) -> Option<usize> {
        self.catalog.iter().position(|c| c.family.same_as(family, self.tol))
    }

    pub fn query(&self, h: &History) -> HistoryQuery {
        HistoryQuery {
            cells: self
                .catalog
                .iter()
                .map(|c| c.family.locate(h, self.tol))
                .collect(),
        }
    }

    fn truth_of(&self, s: &SystemRecord, q: &HistoryQuery) -> TruthValue {
        for m in &s.membership {
            if let Some(cell) = &q.cells[m.family] {
                return if cell.contains_elementary(&m.realized) {
                    TruthValue::True
                } else {
                    TruthValue::False
                };
            }
        }
        TruthValue::Undefined
    }

    /// Truth values of one history across the whole ensemble.
    pub fn truth_table(&self, h: &History) -> Vec<TruthValue> {
        let q = self.query(h);
        self.systems.par_iter().map(|s| self.truth_of(s, &q)).collect()
    }

    /// Systems in `c(C)` for catalog family `family`.
    pub fn support(&self, family: usize) -> Vec<usize> {
        self.systems
            .iter()
            .filter(|s| s.in_support(family))
            .map(|s| s.id)
            .collect()
    }

    /// Line-oriented export: `id`, maximal family name, realized elementary label.
    pub fn to_table(&self) -> String {
        let mut out = String::from("# id\tmaximal_family\trealized_elementary\n");
        for s in &self.systems {
            let entry = &self.catalog[s.maximal_family];
            let label = entry.family.elementary_history(&s.realized_elementary).label();
            out.push_str(&format!("{}\t{}\t{}\n", s.id, entry.name, label));
        }
        out
    }
}

/// `t_s(h)`: true/false when `h` lies in a family of the system's support,
/// undefined otherwise.
pub fn truth_functional(model: &SupportModel, system_id: usize, h: &History) -> Result<TruthValue> {
    let s = model.system(system_id).ok_or(Error::UnknownSystem(system_id))?;
    Ok(model.truth_of(s, &model.query(h)))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Axiom1Report {
    /// Catalog pairs `(coarse, fine)` with `coarse ⊆ fine`, `coarse != fine`.
    pub comparable_pairs: usize,
    /// `(system, coarse, fine)`: in `c(fine)` but not in `c(coarse)`.
    pub violations: Vec<(usize, usize, usize)>,
}

/// Every system in the support of a family is in the support of each of its coarse-grainings.
pub fn check_axiom1(model: &SupportModel) -> Axiom1Report {
    let n = model.catalog.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|c| (0..n).map(move |f| (c, f)))
        .filter(|&(c, f)| c != f && model.is_coarser(c, f))
        .collect();
    let violations = model
        .systems
        .par_iter()
        .flat_map_iter(|s| {
            pairs
                .iter()
                .filter(|&&(c, f)| s.in_support(f) && !s.in_support(c))
                .map(|&(c, f)| (s.id, c, f))
                .collect::<Vec<_>>()
        })
        .collect();
    Axiom1Report {
        comparable_pairs: pairs.len(),
        violations,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Axiom2Report {
    pub family_pairs_checked: usize,
    pub shared_histories: usize,
    /// `(system, family a, family b)`: some shared history occurs via one and not the other.
    pub violations: Vec<(usize, usize, usize)>,
}

/// A history shared by two families has the same occurrence status through both.
pub fn check_axiom2(model: &SupportModel) -> Result<Axiom2Report> {
    let n = model.catalog.len();
    let mut co_occurring = vec![vec![false; n]; n];
    for s in &model.systems {
        for (i, a) in s.membership.iter().enumerate() {
            for b in &s.membership[i + 1..] {
                co_occurring[a.family.min(b.family)][a.family.max(b.family)] = true;
            }
        }
    }
    let mut shared: Vec<((usize, usize), Vec<(CoarseHistory, CoarseHistory)>)> = Vec::new();
    let mut total_shared = 0;
    for a in 0..n {
        for b in (a + 1)..n {
            if !co_occurring[a][b] {
                continue;
            }
            let fa = &model.catalog[a].family;
            let fb = &model.catalog[b].family;
            let cells: Vec<_> = fa
                .all_histories(MAX_SHARED_HISTORIES)?
                .into_iter()
                .filter_map(|ca| {
                    let h = fa.coarse_history(&ca);
                    fb.locate(&h, model.tol).map(|cb| (ca, cb))
                })
                .collect();
            total_shared += cells.len();
            shared.push(((a, b), cells));
        }
    }
    let violations = model
        .systems
        .par_iter()
        .flat_map_iter(|s| {
            let mut v = Vec::new();
            for ((a, b), cells) in &shared {
                let (Some(ma), Some(mb)) = (s.membership_of(*a), s.membership_of(*b)) else {
                    continue;
                };
                if cells.iter().any(|(ca, cb)| {
                    ca.contains_elementary(&ma.realized) != cb.contains_elementary(&mb.realized)
                }) {
                    v.push((s.id, *a, *b));
                }
            }
            v
        })
        .collect();
    Ok(Axiom2Report {
        family_pairs_checked: shared.len(),
        shared_histories: total_shared,
        violations,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PartitionReport {
    pub families_checked: usize,
    /// `(system, family)`: realized indices out of range for the family.
    pub malformed: Vec<(usize, usize)>,
    /// `(system, family, count)`: number of elementary histories occurring is not one.
    pub violations: Vec<(usize, usize, usize)>,
}

/// `c(C)` is partitioned by the occurrence sets of the elementary histories of
/// `C`, and `c0(h;C) = c(C) \ c1(h;C)` for every history `h` of `C`.
///
/// Elementary histories are re-located from their projectors, so the count
/// does not simply echo the stored indices.
pub fn check_partition(model: &SupportModel) -> PartitionReport {
    let mut report = PartitionReport {
        families_checked: model.catalog.len(),
        ..Default::default()
    };
    for (fi, entry) in model.catalog.iter().enumerate() {
        let f = &entry.family;
        let sizes: Vec<usize> = f.slots().iter().map(|s| s.len()).collect();
        let cells: Vec<CoarseHistory> = model.elementary[fi]
            .iter()
            .map(|ix| {
                f.locate(&f.elementary_history(ix), model.tol)
                    .unwrap_or(CoarseHistory { masks: vec![0; sizes.len()] })
            })
            .collect();
        for s in &model.systems {
            let Some(m) = s.membership_of(fi) else { continue };
            if m.realized.len() != sizes.len() || m.realized.iter().zip(&sizes).any(|(r, n)| r >= n) {
                report.malformed.push((s.id, fi));
                continue;
            }
            let occurring = cells.iter().filter(|c| c.contains_elementary(&m.realized)).count();
            if occurring != 1 {
                report.violations.push((s.id, fi, occurring));
            }
        }
    }
    report
}

impl PartitionReport {
    pub fn is_clean(&self) -> bool {
        self.malformed.is_empty() && self.violations.is_empty()
    }
}

/// `c1(h0) ∩ c(C1) ∩ c(C2) = ∅` for a contrary pair `C1, C2` sharing `h0`.
pub fn check_condition8(model: &SupportModel, c1_idx: usize, c2_idx: usize, h0: &History) -> Result<bool> {
    let n = model.catalog.len();
    for i in [c1_idx, c2_idx] {
        if i >= n {
            return Err(Error::CatalogMissingFamily(format!("index {i}")));
        }
    }
    let c1 = &model.catalog[c1_idx].family;
    let c2 = &model.catalog[c2_idx].family;
    if !c1.contains(h0, model.tol) || !c2.contains(h0, model.tol) {
        return Err(Error::NotAContraryPair("h0 is not in both families".into()));
    }
    if are_compatible(c1, c2, &model.rho, model.tol)?.compatible {
        return Err(Error::NotAContraryPair("families are compatible".into()));
    }
    let q = model.query(h0);
    Ok(!model.systems.par_iter().any(|s| {
        s.in_support(c1_idx) && s.in_support(c2_idx) && model.truth_of(s, &q) == TruthValue::True
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Case {
    /// In `c(C1)`; `F1` is defined (and must not occur).
    P1,
    /// In `c(C1)`; `F1` is undefined.
    P2,
    /// In `c(C2)`; `E1` is defined.
    Q1,
    /// In `c(C2)`; `E1` is undefined.
    Q2,
    /// In neither `c(C1)` nor `c(C2)`.
    R,
    /// In both `c(C1)` and `c(C2)`, which no admissible model allows.
    Overlap,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseCounts {
    pub p1: usize,
    pub p2: usize,
    pub q1: usize,
    pub q2: usize,
    pub r: usize,
    pub overlap: usize,
    /// Case-p systems where `F1` occurs anyway (or case-q systems where `E1` does).
    pub exclusive_event_occurs: usize,
}

impl CaseCounts {
    pub fn p(&self) -> usize {
        self.p1 + self.p2
    }

    pub fn q(&self) -> usize {
        self.q1 + self.q2
    }

    pub fn total(&self) -> usize {
        self.p1 + self.p2 + self.q1 + self.q2 + self.r + self.overlap
    }
}

/// Classifies every system where `h0` occurs and which lies in `c(C1)`,
/// `c(C2)` or `c(C({h0}))`.
pub fn classify_systems(
    model: &SupportModel,
    certificate: &ContraryInferenceCertificate,
) -> Result<Vec<(usize, Case)>> {
    let find = |f: &Family, name: &str| {
        model
            .family_index(f)
            .ok_or_else(|| Error::CatalogMissingFamily(name.to_string()))
    };
    let c1 = find(&certificate.family_c1, "C1")?;
    let c2 = find(&certificate.family_c2, "C2")?;
    let ch0 = find(&certificate.family_h0(), "C({h0})")?;
    let h0 = model.query(&certificate.h0());
    let e1 = model.query(&History::single(1.0, certificate.e1.clone(), "E1"));
    let f1 = model.query(&History::single(1.0, certificate.f1.clone(), "F1"));
    Ok(model
        .systems
        .iter()
        .filter(|s| {
            (s.in_support(c1) || s.in_support(c2) || s.in_support(ch0))
                && model.truth_of(s, &h0) == TruthValue::True
        })
        .map(|s| {
            let case = match (s.in_support(c1), s.in_support(c2)) {
                (true, true) => Case::Overlap,
                (true, false) => match model.truth_of(s, &f1) {
                    TruthValue::Undefined => Case::P2,
                    _ => Case::P1,
                },
                (false, true) => match model.truth_of(s, &e1) {
                    TruthValue::Undefined => Case::Q2,
                    _ => Case::Q1,
                },
                (false, false) => Case::R,
            };
            (s.id, case)
        })
        .collect())
}

/// Counts of [`classify_systems`].
pub fn classify_cases(
    model: &SupportModel,
    certificate: &ContraryInferenceCertificate,
) -> Result<CaseCounts> {
    let cases = classify_systems(model, certificate)?;
    let e1 = model.query(&History::single(1.0, certificate.e1.clone(), "E1"));
    let f1 = model.query(&History::single(1.0, certificate.f1.clone(), "F1"));
    let mut counts = CaseCounts::default();
    for (id, case) in cases {
        let s = model.system(id).expect("classified systems exist");
        match case {
            Case::P1 => {
                counts.p1 += 1;
                if model.truth_of(s, &f1) == TruthValue::True {
                    counts.exclusive_event_occurs += 1;
                }
            }
            Case::P2 => counts.p2 += 1,
            Case::Q1 => {
                counts.q1 += 1;
                if model.truth_of(s, &e1) == TruthValue::True {
                    counts.exclusive_event_occurs += 1;
                }
            }
            Case::Q2 => counts.q2 += 1,
            Case::R => counts.r += 1,
            Case::Overlap => counts.overlap += 1,
        }
    }
    Ok(counts)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Proposition1Report {
    /// Systems where both `E` and `F` occur.
    pub double_occurrences: Vec<usize>,
    /// Systems with `E` and `F` both defined but outside `c(C({E, F}))`.
    pub antecedent_failures: Vec<usize>,
}

impl Proposition1Report {
    pub fn holds(&self) -> bool {
        self.double_occurrences.is_empty() && self.antecedent_failures.is_empty()
    }
}

/// Whether `s` lies in the support of an uncatalogued family, given which
/// catalog families it coarse-grains.
fn supports_family(coarser_than: &[bool], s: &SystemRecord) -> bool {
    s.membership.iter().any(|m| coarser_than[m.family])
}

/// Orthogonal events never both occur; systems where both are defined lie in `c(C({E, F}))`.
pub fn proposition1_check(model: &SupportModel, pair: &EventPair) -> Result<Proposition1Report> {
    pair.check_orthogonal(model.tol)?;
    let generated = pair.generated(model.tol)?;
    let coarser_than: Vec<bool> = model
        .catalog
        .iter()
        .map(|c| is_coarse_graining(&generated, &c.family, model.tol).map(|r| r.is_coarse_graining))
        .collect::<Result<_>>()?;
    let eq = model.query(&pair.e_history());
    let fq = model.query(&pair.f_history());
    let mut report = Proposition1Report::default();
    for s in &model.systems {
        let te = model.truth_of(s, &eq);
        let tf = model.truth_of(s, &fq);
        if te == TruthValue::True && tf == TruthValue::True {
            report.double_occurrences.push(s.id);
        }
        if te != TruthValue::Undefined
            && tf != TruthValue::Undefined
            && !supports_family(&coarser_than, s)
        {
            report.antecedent_failures.push(s.id);
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Axiom3Report {
    /// Clause (i): both defined but not in `c(C({E, F}))`.
    pub clause_i_violations: Vec<usize>,
    /// Clause (ii): `E` occurs while `F` is not defined-and-false.
    pub clause_ii_violations: Vec<usize>,
    /// Same with the roles of `E` and `F` swapped.
    pub clause_ii_reverse_violations: Vec<usize>,
    /// Clause (ii) violations where the other event is undefined (the p2-type systems).
    pub undefined_partner: Vec<usize>,
    pub proposition1_holds: bool,
}

impl Axiom3Report {
    pub fn holds(&self) -> bool {
        self.clause_i_violations.is_empty()
            && self.clause_ii_violations.is_empty()
            && self.clause_ii_reverse_violations.is_empty()
    }
}

/// Evaluates the stronger exclusivity axiom: clause (i) as in Proposition 1,
/// clause (ii) `c1(E) ⊆ c0(F)` (checked in both directions).
pub fn check_axiom3_variant(model: &SupportModel, pair: &EventPair) -> Result<Axiom3Report> {
    let prop1 = proposition1_check(model, pair)?;
    let eq = model.query(&pair.e_history());
    let fq = model.query(&pair.f_history());
    let mut report = Axiom3Report {
        clause_i_violations: prop1.antecedent_failures.clone(),
        proposition1_holds: prop1.holds(),
        ..Default::default()
    };
    for s in &model.systems {
        let te = model.truth_of(s, &eq);
        let tf = model.truth_of(s, &fq);
        if te == TruthValue::True && tf != TruthValue::False {
            report.clause_ii_violations.push(s.id);
            if tf == TruthValue::Undefined {
                report.undefined_partner.push(s.id);
            }
        }
        if tf == TruthValue::True && te != TruthValue::False {
            report.clause_ii_reverse_violations.push(s.id);
            if te == TruthValue::Undefined {
                report.undefined_partner.push(s.id);
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyRow {
    pub family: String,
    pub elementary: String,
    pub support_size: usize,
    pub observed: usize,
    pub expected_probability: f64,
    /// `|observed - n p| / sqrt(n p (1 - p))`; zero when the variance vanishes.
    pub z_score: f64,
    /// Whether the row is large enough (expected count >= `min_expected`) to be tested.
    pub tested: bool,
    pub within_bound: bool,
}

/// Empirical elementary frequencies inside each support against Rule 2,
/// with a `sigmas`-wide binomial bound for rows whose expected count is at
/// least `min_expected`.
pub fn frequency_table(model: &SupportModel, sigmas: f64, min_expected: f64) -> Vec<FrequencyRow> {
    let mut rows = Vec::new();
    for (fi, entry) in model.catalog.iter().enumerate() {
        let elementary = &model.elementary[fi];
        let mut counts = vec![0usize; elementary.len()];
        let mut n = 0usize;
        for s in &model.systems {
            if let Some(m) = s.membership_of(fi) {
                n += 1;
                if let Some(k) = elementary.iter().position(|e| *e == m.realized) {
                    counts[k] += 1;
                }
            }
        }
        if n == 0 {
            continue;
        }
        for (k, ix) in elementary.iter().enumerate() {
            let p = model.probabilities[fi][k];
            let expected = n as f64 * p;
            let sd = (expected * (1.0 - p)).sqrt();
            let dev = (counts[k] as f64 - expected).abs();
            let z = if sd > 0.0 { dev / sd } else if dev == 0.0 { 0.0 } else { f64::INFINITY };
            let tested = expected >= min_expected;
            rows.push(FrequencyRow {
                family: entry.name.clone(),
                elementary: entry.family.elementary_history(ix).label(),
                support_size: n,
                observed: counts[k],
                expected_probability: p,
                z_score: z,
                tested,
                within_bound: !tested || z <= sigmas,
            });
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family_algebra::family_of_history;
    use crate::histories::Decomposition;
    use crate::linalg::DEFAULT_TOL;

    fn d(axes: &[usize]) -> Projector {
        Projector::coordinate(3, axes)
    }

    fn trivial_catalog() -> Vec<CatalogEntry> {
        vec![CatalogEntry::new("T", Family::trivial(3, vec![0.0]).unwrap())]
    }

    #[test]
    fn trivial_catalog_everything_occurs() {
        let rho = DensityMatrix::maximally_mixed(3);
        let model = build_support_model(trivial_catalog(), &[1.0], &rho, &SupportOptions::new(50, 1)).unwrap();
        let top = History::identity(3, vec![0.0]).unwrap();
        assert!(model.truth_table(&top).iter().all(|t| *t == TruthValue::True));
        assert!(check_axiom1(&model).violations.is_empty());
        assert_eq!(check_axiom1(&model).comparable_pairs, 0);
        assert!(check_axiom2(&model).unwrap().violations.is_empty());
        assert!(check_partition(&model).is_clean());
    }

    #[test]
    fn weights_validation() {
        let rho = DensityMatrix::maximally_mixed(3);
        let opts = SupportOptions::new(10, 1);
        assert_eq!(
            build_support_model(trivial_catalog(), &[0.0], &rho, &opts).unwrap_err(),
            Error::ZeroWeightSum
        );
        assert_eq!(
            build_support_model(trivial_catalog(), &[-1.0], &rho, &opts).unwrap_err(),
            Error::ZeroWeightSum
        );
        assert!(matches!(
            build_support_model(trivial_catalog(), &[1.0, 1.0], &rho, &opts),
            Err(Error::WeightCount { .. })
        ));
    }

    #[test]
    fn truth_values_in_a_single_family() {
        let fam = Family::from_slots(vec![Decomposition::new(vec![d(&[0]), d(&[1]), d(&[2])], DEFAULT_TOL).unwrap()])
            .unwrap();
        let rho = DensityMatrix::maximally_mixed(3);
        let model = build_support_model(
            vec![CatalogEntry::new("F", fam.clone())],
            &[1.0],
            &rho,
            &SupportOptions::new(30, 9),
        )
        .unwrap();
        for s in model.systems() {
            for k in 0..3 {
                let h = fam.elementary_history(&[k]);
                let t = truth_functional(&model, s.id, &h).unwrap();
                let expect = if s.realized_elementary == vec![k] { TruthValue::True } else { TruthValue::False };
                assert_eq!(t, expect);
            }
        }
        assert_eq!(
            truth_functional(&model, 999, &fam.elementary_history(&[0])).unwrap_err(),
            Error::UnknownSystem(999)
        );
    }

    #[test]
    fn undefined_outside_support() {
        let a = family_of_history(&History::single(0.0, d(&[0]), "A"), DEFAULT_TOL).unwrap();
        let rho = DensityMatrix::maximally_mixed(3);
        let model = build_support_model(vec![CatalogEntry::new("A", a)], &[1.0], &rho, &SupportOptions::new(5, 3)).unwrap();
        let b = History::single(0.0, d(&[1]), "B");
        assert!(model.truth_table(&b).iter().all(|t| *t == TruthValue::Undefined));
    }

    #[test]
    fn same_seed_same_model() {
        let a = family_of_history(&History::single(0.0, d(&[0]), "A"), DEFAULT_TOL).unwrap();
        let rho = DensityMatrix::maximally_mixed(3);
        let build = |seed| {
            build_support_model(vec![CatalogEntry::new("A", a.clone())], &[1.0], &rho, &SupportOptions::new(9000, seed))
                .unwrap()
                .into_records()
        };
        assert_eq!(build(5), build(5));
        assert_ne!(build(5), build(6));
    }
}
