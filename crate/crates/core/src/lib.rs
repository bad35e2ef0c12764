//! Consistent-histories computations over finite-dimensional Hilbert spaces.
//!
//! Events are projectors ([`Projector`]), families are sequences of
//! decompositions of the identity ([`Family`]), and consistency is weak
//! decoherence of the family's elementary histories. On top of that the crate
//! builds generated families and the coarse-graining order
//! ([`family_algebra`]), contrary-inference certificates and ordered
//! consistency ([`inference`]), and a finite-ensemble model of family
//! supports ([`support_sim`]). Scenarios can be read from JSON ([`scenario`]).

pub mod error;
pub mod family_algebra;
pub mod histories;
pub mod inference;
pub mod linalg;
pub mod random;
pub mod scenario;
pub mod support_sim;

pub use error::{Error, KentCondition, Result};
pub use family_algebra::{
    are_compatible, atoms_of, common_refinement, family_of_history, generated_family, is_coarse_graining,
    CompatibilityReason, CompatibilityResult, FamilyOrderResult,
};
pub use histories::{
    chain_operator, coarse_history_cell, conditional_probability, decoherence_functional, is_weakly_decoherent,
    probability, validate_decomposition, weight, CoarseHistory, ConsistentFamily, DecoherenceReport, Decomposition,
    Family, History,
};
pub use inference::{
    find_contrary_inferences, history_leq, is_ordered_consistent, kent_triple_check, three_box_fixture,
    ContraryInferenceCertificate, OrderedConsistencyVerdict, SearchParams, SearchStrategy,
};
pub use linalg::{ComplexScalar, DensityMatrix, Matrix, Projector, DEFAULT_TOL};
pub use scenario::{Scenario, ScenarioFile};
pub use support_sim::{build_support_model, truth_functional, SupportModel, SupportOptions, TruthValue};
