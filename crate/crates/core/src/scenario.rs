//! Scenario files: a JSON document of named vectors, projectors,
//! decompositions, histories and families, resolved in file order.
//!
//! Complex numbers are `[re, im]` pairs and matrices are row-major arrays of
//! rows. Each entry may only refer to names defined earlier, so forward
//! references and cycles are rejected at load time.
//!
//! ```json
//! {
//!   "dim": 2,
//!   "vectors": [{ "name": "up", "entries": [[1, 0], [0, 0]] }],
//!   "projectors": [{ "name": "U", "span": ["up"] }],
//!   "histories": [{ "name": "h", "events": ["U"] }],
//!   "families": [{ "name": "F", "generated_by": ["h"] }]
//! }
//! ```

use std::path::Path;

use indexmap::IndexMap;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family_algebra::{common_refinement, generated_family};
use crate::histories::{Decomposition, Family, History, DEFAULT_MAX_ELEMENTARY};
use crate::inference::{ContraryInferenceCertificate, SearchStrategy};
use crate::linalg::{DensityMatrix, Matrix, Projector, DEFAULT_TOL, MAX_DIM};

pub type ComplexPair = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorSpec {
    pub name: String,
    pub entries: Vec<ComplexPair>,
}

/// Exactly one of the defining fields must be present.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectorSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<ComplexPair>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub complement: Option<String>,
    /// Sum of pairwise orthogonal projectors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sum: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub identity: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub zero: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompositionSpec {
    pub name: String,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistorySpec {
    pub name: String,
    pub events: Vec<String>,
    /// Defaults to `0, 1, ..., n-1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
}

/// Exactly one of `slots`, `generated_by`, `refinement_of`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub name: String,
    /// Decomposition names, one per time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slots: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    /// History names; the family they generate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_by: Option<Vec<String>>,
    /// Two family names; their slot-wise common refinement.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refinement_of: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpec {
    pub dim: usize,
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub strategy: SearchStrategy,
    #[serde(default = "one")]
    pub rank: usize,
    /// Quadruples `[E0, E1, F1, E2]` of projector names evaluated first.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub planted: Vec<[String; 4]>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    pub time: f64,
    pub e: String,
    pub f: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    pub catalog: Vec<String>,
    /// Defaults to equal weights.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    pub ensemble: usize,
    #[serde(default)]
    pub seed: u64,
    /// `[E0, E1, F1, E2]` projector names of the contrary inference to analyse.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contrary: Option<[String; 4]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exclusive_pairs: Vec<PairSpec>,
}

/// Raw scenario document.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub allow_zero_members: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_elementary: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub vectors: Vec<VectorSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub projectors: Vec<ProjectorSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub decompositions: Vec<DecompositionSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub histories: Vec<HistorySpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub families: Vec<FamilySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<Vec<Vec<ComplexPair>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSpec>,
}

/// Fully resolved and validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub dim: usize,
    pub tol: f64,
    pub allow_zero_members: bool,
    pub max_elementary: usize,
    pub rho: DensityMatrix,
    pub vectors: IndexMap<String, Vec<Complex64>>,
    pub projectors: IndexMap<String, Projector>,
    pub decompositions: IndexMap<String, Decomposition>,
    pub histories: IndexMap<String, History>,
    pub families: IndexMap<String, Family>,
    pub search: Option<SearchSpec>,
    pub simulation: Option<SimulationSpec>,
}

fn err(kind: &str, name: &str, msg: impl std::fmt::Display) -> Error {
    Error::Scenario(format!("{kind} '{name}': {msg}"))
}

fn lookup<'a, T>(map: &'a IndexMap<String, T>, kind: &str, owner: &str, name: &str) -> Result<&'a T> {
    map.get(name)
        .ok_or_else(|| err(kind, owner, format!("unknown or not yet defined name '{name}'")))
}

fn insert_unique<T>(map: &mut IndexMap<String, T>, kind: &str, name: &str, value: T) -> Result<()> {
    if map.contains_key(name) {
        return Err(err(kind, name, "duplicate name"));
    }
    map.insert(name.to_string(), value);
    Ok(())
}

fn to_complex(p: &ComplexPair) -> Complex64 {
    Complex64::new(p[0], p[1])
}

fn matrix_from_pairs(rows: &[Vec<ComplexPair>]) -> Result<Matrix> {
    let rows: Vec<Vec<Complex64>> = rows.iter().map(|r| r.iter().map(to_complex).collect()).collect();
    Matrix::from_rows(&rows)
}

fn matrix_to_pairs(m: &Matrix) -> Vec<Vec<ComplexPair>> {
    m.rows()
        .iter()
        .map(|r| r.iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

fn check_dim(kind: &str, name: &str, found: usize, dim: usize) -> Result<()> {
    if found != dim {
        return Err(err(kind, name, Error::DimensionMismatch { expected: dim, found }));
    }
    Ok(())
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Scenario(format!("parse error: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario documents serialize")
    }

    /// Resolves every entry in order; `tol_override` replaces the file's `tol`.
    pub fn resolve(&self, tol_override: Option<f64>) -> Result<Scenario> {
        let dim = self.dim;
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::DimensionOutOfRange(dim));
        }
        let tol = tol_override.or(self.tol).unwrap_or(DEFAULT_TOL);
        if !(tol.is_finite() && tol > 0.0) {
            return Err(Error::Scenario(format!("tol must be positive and finite, got {tol}")));
        }

        let mut vectors = IndexMap::new();
        for v in &self.vectors {
            check_dim("vector", &v.name, v.entries.len(), dim)?;
            let entries: Vec<Complex64> = v.entries.iter().map(to_complex).collect();
            if entries.iter().any(|z| !z.is_finite()) {
                return Err(err("vector", &v.name, "non-finite entry"));
            }
            insert_unique(&mut vectors, "vector", &v.name, entries)?;
        }

        let mut projectors: IndexMap<String, Projector> = IndexMap::new();
        for p in &self.projectors {
            let kinds = [
                p.span.is_some(),
                p.matrix.is_some(),
                p.complement.is_some(),
                p.sum.is_some(),
                p.identity,
                p.zero,
            ];
            if kinds.iter().filter(|k| **k).count() != 1 {
                return Err(err(
                    "projector",
                    &p.name,
                    "exactly one of span, matrix, complement, sum, identity, zero is required",
                ));
            }
            let proj = if let Some(span) = &p.span {
                let vs = span
                    .iter()
                    .map(|n| lookup(&vectors, "projector", &p.name, n).cloned())
                    .collect::<Result<Vec<_>>>()?;
                Projector::from_vectors(&vs, tol).map_err(|e| err("projector", &p.name, e))?
            } else if let Some(rows) = &p.matrix {
                let m = matrix_from_pairs(rows).map_err(|e| err("projector", &p.name, e))?;
                check_dim("projector", &p.name, m.dim(), dim)?;
                Projector::new(m, tol).map_err(|e| err("projector", &p.name, e))?
            } else if let Some(of) = &p.complement {
                lookup(&projectors, "projector", &p.name, of)?.complement()
            } else if let Some(terms) = &p.sum {
                let ps = terms
                    .iter()
                    .map(|n| lookup(&projectors, "projector", &p.name, n))
                    .collect::<Result<Vec<_>>>()?;
                let mut acc = Matrix::zeros(dim);
                for q in ps {
                    acc = &acc + q.matrix();
                }
                Projector::new(acc, tol).map_err(|e| err("projector", &p.name, e))?
            } else if p.identity {
                Projector::identity(dim)
            } else {
                Projector::zero(dim)
            };
            insert_unique(&mut projectors, "projector", &p.name, proj)?;
        }

        let mut decompositions = IndexMap::new();
        for d in &self.decompositions {
            let members = d
                .members
                .iter()
                .map(|n| lookup(&projectors, "decomposition", &d.name, n).cloned())
                .collect::<Result<Vec<_>>>()?;
            let dec = Decomposition::with_labels(members, d.members.clone(), tol, self.allow_zero_members)
                .map_err(|e| err("decomposition", &d.name, e))?;
            insert_unique(&mut decompositions, "decomposition", &d.name, dec)?;
        }

        let mut histories = IndexMap::new();
        for h in &self.histories {
            if h.events.is_empty() {
                return Err(err("history", &h.name, "no events"));
            }
            let events = h
                .events
                .iter()
                .map(|n| lookup(&projectors, "history", &h.name, n).cloned())
                .collect::<Result<Vec<_>>>()?;
            let times = h
                .times
                .clone()
                .unwrap_or_else(|| (0..events.len()).map(|i| i as f64).collect());
            let hist = History::with_labels(times, events, h.events.clone())
                .map_err(|e| err("history", &h.name, e))?;
            insert_unique(&mut histories, "history", &h.name, hist)?;
        }

        let mut families: IndexMap<String, Family> = IndexMap::new();
        for f in &self.families {
            let kinds = [f.slots.is_some(), f.generated_by.is_some(), f.refinement_of.is_some()];
            if kinds.iter().filter(|k| **k).count() != 1 {
                return Err(err(
                    "family",
                    &f.name,
                    "exactly one of slots, generated_by, refinement_of is required",
                ));
            }
            if f.times.is_some() && f.slots.is_none() {
                return Err(err("family", &f.name, "times are only allowed with slots"));
            }
            let fam = if let Some(slots) = &f.slots {
                let decs = slots
                    .iter()
                    .map(|n| lookup(&decompositions, "family", &f.name, n).cloned())
                    .collect::<Result<Vec<_>>>()?;
                match &f.times {
                    Some(t) => Family::new(t.clone(), decs),
                    None => Family::from_slots(decs),
                }
                .map_err(|e| err("family", &f.name, e))?
            } else if let Some(hs) = &f.generated_by {
                let hs = hs
                    .iter()
                    .map(|n| lookup(&histories, "family", &f.name, n).cloned())
                    .collect::<Result<Vec<_>>>()?;
                generated_family(&hs, tol).map_err(|e| err("family", &f.name, e))?
            } else {
                let names = f.refinement_of.as_ref().expect("checked above");
                if names.len() != 2 {
                    return Err(err("family", &f.name, "refinement_of takes two family names"));
                }
                let a = lookup(&families, "family", &f.name, &names[0])?;
                let b = lookup(&families, "family", &f.name, &names[1])?;
                common_refinement(a, b, tol).map_err(|e| err("family", &f.name, e))?
            };
            insert_unique(&mut families, "family", &f.name, fam)?;
        }

        let rho = match &self.rho {
            None => DensityMatrix::maximally_mixed(dim),
            Some(rows) => {
                let m = matrix_from_pairs(rows).map_err(|e| err("rho", "rho", e))?;
                check_dim("rho", "rho", m.dim(), dim)?;
                DensityMatrix::new(m, tol).map_err(|e| err("rho", "rho", e))?
            }
        };

        let scenario = Scenario {
            dim,
            tol,
            allow_zero_members: self.allow_zero_members,
            max_elementary: self.max_elementary.unwrap_or(DEFAULT_MAX_ELEMENTARY),
            rho,
            vectors,
            projectors,
            decompositions,
            histories,
            families,
            search: self.search.clone(),
            simulation: self.simulation.clone(),
        };
        if let Some(search) = &scenario.search {
            for quad in &search.planted {
                for n in quad {
                    scenario.projector(n)?;
                }
            }
        }
        if let Some(sim) = &scenario.simulation {
            for n in &sim.catalog {
                scenario.family(n)?;
            }
            for n in sim.contrary.iter().flatten() {
                scenario.projector(n)?;
            }
            for p in &sim.exclusive_pairs {
                scenario.projector(&p.e)?;
                scenario.projector(&p.f)?;
            }
        }
        Ok(scenario)
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        ScenarioFile::from_json(text)?.resolve(None)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Scenario(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn projector(&self, name: &str) -> Result<&Projector> {
        self.projectors
            .get(name)
            .ok_or_else(|| Error::Scenario(format!("unknown projector '{name}'")))
    }

    pub fn history(&self, name: &str) -> Result<&History> {
        self.histories
            .get(name)
            .ok_or_else(|| Error::Scenario(format!("unknown history '{name}'")))
    }

    pub fn family(&self, name: &str) -> Result<&Family> {
        self.families
            .get(name)
            .ok_or_else(|| Error::Scenario(format!("unknown family '{name}'")))
    }

    /// Name of the first family equal (within `tol`) to `f`.
    pub fn family_name(&self, f: &Family) -> Option<&str> {
        self.families
            .iter()
            .find(|(_, g)| g.same_as(f, self.tol))
            .map(|(n, _)| n.as_str())
    }
}

fn real_vector(name: &str, xs: [f64; 3]) -> VectorSpec {
    VectorSpec {
        name: name.into(),
        entries: xs.iter().map(|&x| [x, 0.0]).collect(),
    }
}

fn span(name: &str, of: &str) -> ProjectorSpec {
    ProjectorSpec {
        name: name.into(),
        span: Some(vec![of.into()]),
        ..Default::default()
    }
}

fn history(name: &str, events: &[&str], times: Option<Vec<f64>>) -> HistorySpec {
    HistorySpec {
        name: name.into(),
        events: events.iter().map(|s| s.to_string()).collect(),
        times,
    }
}

fn generated(name: &str, by: &[&str]) -> FamilySpec {
    FamilySpec {
        name: name.into(),
        generated_by: Some(by.iter().map(|s| s.to_string()).collect()),
        ..Default::default()
    }
}

/// Document form of the three-box scenario (`N = 3`).
///
/// `E0` projects onto `A + B + C`, `E2` onto `A + B - C`, `E1 = |A><A|`,
/// `F1 = |B><B|`. Families: `C1 = C({(E0,E1,E2)})`, `C2 = C({(E0,F1,E2)})`,
/// `Ch0 = C({h0})` with `h0 = (E0, E2)` at times `0, 2`, the common
/// refinement `Joint` of `C1` and `C2`, and `CE1F1 = C({E1, F1})` at time 1.
pub fn three_box_file() -> ScenarioFile {
    ScenarioFile {
        dim: 3,
        tol: Some(DEFAULT_TOL),
        vectors: vec![
            real_vector("A", [1.0, 0.0, 0.0]),
            real_vector("B", [0.0, 1.0, 0.0]),
            real_vector("C", [0.0, 0.0, 1.0]),
            real_vector("psi", [1.0, 1.0, 1.0]),
            real_vector("phi", [1.0, 1.0, -1.0]),
        ],
        projectors: vec![
            span("E0", "psi"),
            span("E1", "A"),
            span("F1", "B"),
            span("E2", "phi"),
            ProjectorSpec {
                name: "I".into(),
                identity: true,
                ..Default::default()
            },
        ],
        histories: vec![
            history("h0", &["E0", "E2"], Some(vec![0.0, 2.0])),
            history("h0_full", &["E0", "I", "E2"], None),
            history("h1", &["E0", "E1", "E2"], None),
            history("h2", &["E0", "F1", "E2"], None),
            history("e1_mid", &["E1"], Some(vec![1.0])),
            history("f1_mid", &["F1"], Some(vec![1.0])),
            history("top", &["I", "I", "I"], None),
        ],
        families: vec![
            generated("C1", &["h1"]),
            generated("C2", &["h2"]),
            generated("Ch0", &["h0"]),
            FamilySpec {
                name: "Joint".into(),
                refinement_of: Some(vec!["C1".into(), "C2".into()]),
                ..Default::default()
            },
            generated("CE1F1", &["e1_mid", "f1_mid"]),
        ],
        simulation: Some(SimulationSpec {
            catalog: vec!["C1".into(), "C2".into(), "Ch0".into()],
            weights: None,
            ensemble: 100_000,
            seed: 7,
            contrary: Some(["E0".into(), "E1".into(), "F1".into(), "E2".into()]),
            exclusive_pairs: Vec::new(),
        }),
        search: Some(SearchSpec {
            dim: 3,
            trials: 1000,
            seed: 1,
            strategy: SearchStrategy::Constrained,
            rank: 1,
            planted: vec![["E0".into(), "E1".into(), "F1".into(), "E2".into()]],
        }),
        ..Default::default()
    }
}

/// Replayable scenario fragment for a certificate: the four projectors as
/// explicit matrices, the histories `h0, h1, h2` and the families `C1, C2, Ch0`.
pub fn certificate_file(cert: &ContraryInferenceCertificate) -> ScenarioFile {
    let proj = |name: &str, p: &Projector| ProjectorSpec {
        name: name.into(),
        matrix: Some(matrix_to_pairs(p.matrix())),
        ..Default::default()
    };
    let rho = matrix_to_pairs(cert.rho.matrix());
    let mixed = DensityMatrix::maximally_mixed(cert.e0.dim());
    ScenarioFile {
        dim: cert.e0.dim(),
        tol: Some(cert.tol),
        projectors: vec![
            proj("E0", &cert.e0),
            proj("E1", &cert.e1),
            proj("F1", &cert.f1),
            proj("E2", &cert.e2),
            ProjectorSpec {
                name: "I".into(),
                identity: true,
                ..Default::default()
            },
        ],
        histories: vec![
            history("h0", &["E0", "I", "E2"], None),
            history("h1", &["E0", "E1", "E2"], None),
            history("h2", &["E0", "F1", "E2"], None),
            history("e1_mid", &["E1"], Some(vec![1.0])),
            history("f1_mid", &["F1"], Some(vec![1.0])),
        ],
        families: vec![generated("C1", &["h1"]), generated("C2", &["h2"]), generated("Ch0", &["h0"])],
        rho: (cert.rho.matrix().max_abs_diff(mixed.matrix()) > 0.0).then_some(rho),
        ..Default::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_document() {
        let s = Scenario::from_json(
            r#"{"dim": 2,
                "vectors": [{"name": "up", "entries": [[1, 0], [0, 0]]}],
                "projectors": [{"name": "U", "span": ["up"]}, {"name": "D", "complement": "U"}],
                "decompositions": [{"name": "Z", "members": ["U", "D"]}],
                "histories": [{"name": "h", "events": ["U"]}],
                "families": [{"name": "F", "slots": ["Z"]}, {"name": "G", "generated_by": ["h"]}]}"#,
        )
        .unwrap();
        assert_eq!(s.dim, 2);
        assert_eq!(s.tol, DEFAULT_TOL);
        assert!(s.family("F").unwrap().same_as(s.family("G").unwrap(), s.tol));
        assert_eq!(s.projector("D").unwrap().rank(), 1);
    }

    #[test]
    fn forward_reference_rejected() {
        let e = Scenario::from_json(
            r#"{"dim": 2,
                "projectors": [{"name": "D", "complement": "U"}, {"name": "U", "identity": true}]}"#,
        )
        .unwrap_err();
        assert!(matches!(e, Error::Scenario(ref m) if m.contains("not yet defined")), "{e}");
    }

    #[test]
    fn duplicate_and_ambiguous_entries_rejected() {
        assert!(Scenario::from_json(
            r#"{"dim": 2, "projectors": [{"name": "U", "identity": true}, {"name": "U", "zero": true}]}"#
        )
        .is_err());
        assert!(Scenario::from_json(r#"{"dim": 2, "projectors": [{"name": "U", "identity": true, "zero": true}]}"#)
            .is_err());
        assert!(Scenario::from_json(r#"{"dim": 2, "bogus": 1}"#).is_err());
    }

    #[test]
    fn dimension_ceiling() {
        assert_eq!(Scenario::from_json(r#"{"dim": 65}"#).unwrap_err(), Error::DimensionOutOfRange(65));
        assert_eq!(Scenario::from_json(r#"{"dim": 0}"#).unwrap_err(), Error::DimensionOutOfRange(0));
    }

    #[test]
    fn zero_members_need_flag() {
        let doc = |flag: bool| {
            format!(
                r#"{{"dim": 2, "allow_zero_members": {flag},
                    "projectors": [{{"name": "I", "identity": true}}, {{"name": "O", "zero": true}}],
                    "decompositions": [{{"name": "Z", "members": ["I", "O"]}}]}}"#
            )
        };
        assert!(Scenario::from_json(&doc(false)).is_err());
        assert!(Scenario::from_json(&doc(true)).is_ok());
    }

    #[test]
    fn rho_is_validated() {
        let bad = r#"{"dim": 2, "rho": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]]}"#;
        assert!(Scenario::from_json(bad).is_err());
        let good = r#"{"dim": 2, "rho": [[[1, 0], [0, 0]], [[0, 0], [0, 0]]]}"#;
        assert!(Scenario::from_json(good).is_ok());
    }

    #[test]
    fn three_box_document_round_trips() {
        let file = three_box_file();
        let text = file.to_json();
        assert_eq!(ScenarioFile::from_json(&text).unwrap(), file);
        let s = file.resolve(None).unwrap();
        assert_eq!(s.family("Joint").unwrap().slots()[1].len(), 3);
    }
}
