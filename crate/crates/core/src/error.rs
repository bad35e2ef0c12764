use thiserror::Error;

/// Which line of a contrary-inference claim failed to hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KentCondition {
    /// The first family is not weakly decoherent.
    FirstFamilyConsistency,
    /// The second family is not weakly decoherent.
    SecondFamilyConsistency,
    /// The conditioning history has (numerically) zero probability.
    JointProbability,
    /// `p(E1 | E0, E2) != 1` in the first family.
    FirstConditional,
    /// `p(F1 | E0, E2) != 1` in the second family.
    SecondConditional,
}

impl std::fmt::Display for KentCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            KentCondition::FirstFamilyConsistency => "first family consistency",
            KentCondition::SecondFamilyConsistency => "second family consistency",
            KentCondition::JointProbability => "p_joint",
            KentCondition::FirstConditional => "p(E1|E0,E2) = 1",
            KentCondition::SecondConditional => "p(F1|E0,E2) = 1",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension {0} outside the supported range 1..=64")]
    DimensionOutOfRange(usize),

    #[error("vectors are linearly dependent (vector {index})")]
    DependentVectors { index: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("matrix is not a projector: {0}")]
    NotAProjector(String),

    #[error("members {i} and {j} are not orthogonal")]
    NotOrthogonal { i: usize, j: usize },

    #[error("members do not sum to the identity (residual {residual:.3e})")]
    DoesNotSumToIdentity { residual: f64 },

    #[error("decomposition member {0} is the zero projector")]
    ZeroMember(usize),

    #[error("a decomposition may hold at most 64 members, got {0}")]
    TooManyMembers(usize),

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("invalid time grid: {0}")]
    InvalidTimes(String),

    #[error("time {0} is not part of the target time grid")]
    TimeMismatch(f64),

    #[error("{count} histories exceed the enumeration cap {cap}")]
    ExplosionGuard { count: u128, cap: u128 },

    #[error("history is not in the family")]
    HistoryNotInFamily,

    #[error("family is not weakly decoherent (max |Re D| = {max_off_diagonal_re:.3e})")]
    InconsistentFamily { max_off_diagonal_re: f64 },

    #[error("conditioning history has zero probability ({0:.3e})")]
    ZeroConditioningEvent(f64),

    #[error("histories cannot be conjoined at slot {slot}")]
    NotConjoinable { slot: usize },

    #[error("projectors {i} and {j} at slot {slot} do not commute")]
    NonCommutingSlot { slot: usize, i: usize, j: usize },

    #[error("contrary-inference condition failed: {which}{}", if *.marginal { " (marginal)" } else { "" })]
    ConditionFailed { which: KentCondition, marginal: bool },

    #[error("history does not belong to any consistent catalog family")]
    HistoryNotInAnyConsistentFamily,

    #[error("catalog family {0} is not weakly decoherent")]
    InconsistentCatalogFamily(usize),

    #[error("membership weights must be non-negative with a positive sum")]
    ZeroWeightSum,

    #[error("expected {expected} weights, got {found}")]
    WeightCount { expected: usize, found: usize },

    #[error("unknown system {0}")]
    UnknownSystem(usize),

    #[error("families do not form a contrary pair for the given history: {0}")]
    NotAContraryPair(String),

    #[error("catalog is missing family {0}")]
    CatalogMissingFamily(String),

    #[error("search dimension {0} outside 3..=8")]
    SearchDimension(usize),

    #[error("scenario: {0}")]
    Scenario(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
