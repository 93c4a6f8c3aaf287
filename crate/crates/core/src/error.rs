use thiserror::Error;

/// Invariants checked by the validating constructors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Invariant {
    NonEmpty,
    Finite,
    NonNegative,
    /// spikes sum to one
    Normalization,
    /// spikes non-increasing
    Ordering,
    /// Σ i·θ_i = 1
    GapNormalization,
    /// Σ i·ε_i ≤ 1
    CapacityFeasibility,
    /// relevance in [0, 1]
    Relevance,
    /// position CTRs strictly decreasing and positive
    CtrOrdering,
}

impl Invariant {
    pub fn name(self) -> &'static str {
        match self {
            Invariant::NonEmpty => "non-empty",
            Invariant::Finite => "finite",
            Invariant::NonNegative => "non-negative",
            Invariant::Normalization => "normalization (spikes sum to 1)",
            Invariant::Ordering => "ordering (spikes non-increasing)",
            Invariant::GapNormalization => "gap normalization (sum of i*gap_i equals 1)",
            Invariant::CapacityFeasibility => "capacity feasibility (sum of i*eps_i at most 1)",
            Invariant::Relevance => "relevance in [0, 1]",
            Invariant::CtrOrdering => "position CTRs strictly decreasing and positive",
        }
    }
}

impl std::fmt::Display for Invariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} violates {invariant}: {detail}")]
    Validation {
        what: &'static str,
        invariant: Invariant,
        detail: String,
    },

    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("inconsistent inputs: {0}")]
    Consistency(String),

    #[error("coefficients are not gap-wise monotone (d_{index} = {next} > d_{prev_index} = {prev}); use the simplex solver")]
    NotMonotone {
        prev_index: usize,
        index: usize,
        prev: f64,
        next: f64,
    },

    #[error("closed form needs 1 - sum_(i>=2) i*eps_i >= eps_1, got {theta1} < {eps1}; use the simplex solver")]
    ClosedFormPrecondition { theta1: f64, eps1: f64 },

    #[error("capacity parameters infeasible: sum of i*eps_i is {0}, above 1")]
    Feasibility(f64),

    #[error("capacity {kappa} is below the threshold index {a}; raising it loses optimal value")]
    Regime { kappa: usize, a: usize },

    #[error("capacity already equals the spike count {0}")]
    CapacityExhausted(usize),

    #[error("coefficients have no threshold index (all d_j equal d_1)")]
    NoThreshold,

    #[error("invalid auction configuration: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn validation(what: &'static str, invariant: Invariant, detail: impl Into<String>) -> Self {
        Error::Validation {
            what,
            invariant,
            detail: detail.into(),
        }
    }

    /// The invariant named by a validation error, if any.
    pub fn invariant(&self) -> Option<Invariant> {
        match self {
            Error::Validation { invariant, .. } => Some(*invariant),
            Error::Feasibility(_) => Some(Invariant::CapacityFeasibility),
            _ => None,
        }
    }
}
