//! Domain types and the spike/gap algebra shared by every mechanism.
//!
//! A selling experiment with `M` outcomes is described either by its spikes
//! `p_1 ≥ p_2 ≥ … ≥ p_M ≥ 0` (summing to one) or, equivalently, by the gaps
//! `θ_j = p_j − p_{j+1}` with `θ_M = p_M`, which satisfy `Σ j·θ_j = 1`.
//! Ties between consecutive spikes are allowed and show up as zero gaps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Invariant, Result};

/// Tolerance for normalization and feasibility checks.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Tolerance for algebraic round-trips between spikes and gaps.
pub const ROUND_TRIP_TOL: f64 = 1e-12;

fn check_entries(what: &'static str, xs: &[f64]) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::validation(what, Invariant::NonEmpty, "length is 0"));
    }
    if let Some((j, x)) = xs.iter().enumerate().find(|(_, x)| !x.is_finite()) {
        return Err(Error::validation(what, Invariant::Finite, format!("entry {} is {x}", j + 1)));
    }
    if let Some((j, x)) = xs.iter().enumerate().find(|(_, &x)| x < 0.0) {
        return Err(Error::validation(what, Invariant::NonNegative, format!("entry {} is {x}", j + 1)));
    }
    Ok(())
}

/// `Σ_{i=1}^{M} i·x_i` with 1-based weights.
pub(crate) fn index_weighted_sum(xs: &[f64]) -> f64 {
    xs.iter().enumerate().map(|(i, x)| (i + 1) as f64 * x).sum()
}

/// Probability spikes `(p_1, …, p_M)` of the selling experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SpikeVector(Vec<f64>);

impl SpikeVector {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_entries("spikes", &probs)?;
        if let Some(j) = probs.windows(2).position(|w| w[0] < w[1]) {
            return Err(Error::validation(
                "spikes",
                Invariant::Ordering,
                format!("p_{} = {} < p_{} = {}", j + 1, probs[j], j + 2, probs[j + 1]),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > FEASIBILITY_TOL {
            return Err(Error::validation(
                "spikes",
                Invariant::Normalization,
                format!("sum is {total}"),
            ));
        }
        Ok(SpikeVector(probs))
    }

    /// The degenerate experiment that always selects the top-ranked bidder.
    pub fn point_mass(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::validation("spikes", Invariant::NonEmpty, "length is 0"));
        }
        let mut probs = vec![0.0; m];
        probs[0] = 1.0;
        Ok(SpikeVector(probs))
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_gaps(&self) -> GapVector {
        spikes_to_gaps(self)
    }
}

impl TryFrom<Vec<f64>> for SpikeVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        SpikeVector::new(v)
    }
}

impl From<SpikeVector> for Vec<f64> {
    fn from(s: SpikeVector) -> Self {
        s.0
    }
}

/// Spike gaps `θ_j`, the variables of the spike-selection LP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct GapVector(Vec<f64>);

impl GapVector {
    pub fn new(gaps: Vec<f64>) -> Result<Self> {
        check_entries("gaps", &gaps)?;
        let weighted = index_weighted_sum(&gaps);
        if (weighted - 1.0).abs() > FEASIBILITY_TOL {
            return Err(Error::validation(
                "gaps",
                Invariant::GapNormalization,
                format!("sum of i*gap_i is {weighted}"),
            ));
        }
        Ok(GapVector(gaps))
    }

    /// Wraps raw gaps without validation. Used to hand candidate (possibly
    /// infeasible) points to checkers such as [`crate::optimizer::check_kkt`].
    pub fn new_unchecked(gaps: Vec<f64>) -> Self {
        GapVector(gaps)
    }

    pub fn gaps(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_spikes(&self) -> SpikeVector {
        gaps_to_spikes(self)
    }
}

impl TryFrom<Vec<f64>> for GapVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        GapVector::new(v)
    }
}

impl From<GapVector> for Vec<f64> {
    fn from(g: GapVector) -> Self {
        g.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BidderId(pub u64);

impl std::fmt::Display for BidderId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A bidder's private value and, for sponsored search, its relevance `e_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BidderProfile {
    pub id: BidderId,
    pub value: f64,
    #[serde(default = "default_relevance")]
    pub relevance: f64,
}

fn default_relevance() -> f64 {
    1.0
}

impl BidderProfile {
    pub fn new(id: u64, value: f64) -> Result<Self> {
        Self::with_relevance(id, value, 1.0)
    }

    pub fn with_relevance(id: u64, value: f64, relevance: f64) -> Result<Self> {
        let b = BidderProfile {
            id: BidderId(id),
            value,
            relevance,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.value.is_finite() || self.value < 0.0 {
            return Err(Error::validation(
                "bidder value",
                Invariant::NonNegative,
                format!("bidder {} has value {}", self.id, self.value),
            ));
        }
        if !(0.0..=1.0).contains(&self.relevance) {
            return Err(Error::validation(
                "bidder relevance",
                Invariant::Relevance,
                format!("bidder {} has relevance {}", self.id, self.relevance),
            ));
        }
        Ok(())
    }

    /// Ranking score `s_i = e_i·v_i` (bids equal values).
    pub fn score(&self) -> f64 {
        self.relevance * self.value
    }
}

/// Convenience for tests and bindings: bidders with ids `0..n` and unit relevance.
pub fn bidders_from_values(values: &[f64]) -> Result<Vec<BidderProfile>> {
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| BidderProfile::new(i as u64, v))
        .collect()
}

/// Orders bidder indices by `key` descending, ties by ascending id.
pub(crate) fn rank_by<F>(bidders: &[BidderProfile], key: F) -> Vec<usize>
where
    F: Fn(&BidderProfile) -> f64,
{
    let mut order: Vec<usize> = (0..bidders.len()).collect();
    order.sort_by(|&a, &b| {
        key(&bidders[b])
            .total_cmp(&key(&bidders[a]))
            .then(bidders[a].id.cmp(&bidders[b].id))
    });
    order
}

pub(crate) fn validate_bidders(bidders: &[BidderProfile]) -> Result<()> {
    if bidders.is_empty() {
        return Err(Error::Input("at least one bidder is required".into()));
    }
    bidders.iter().try_for_each(BidderProfile::validate)
}

/// Lower bounds `ε_j` on the gaps; a positive `ε_j` guarantees the rank-j
/// bidder a positive chance of winning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct CapacityParams(Vec<f64>);

impl CapacityParams {
    pub fn new(epsilons: Vec<f64>) -> Result<Self> {
        check_entries("epsilons", &epsilons)?;
        let weighted = index_weighted_sum(&epsilons);
        if weighted > 1.0 + FEASIBILITY_TOL {
            return Err(Error::Feasibility(weighted));
        }
        Ok(CapacityParams(epsilons))
    }

    pub fn zeros(m: usize) -> Result<Self> {
        Self::new(vec![0.0; m])
    }

    /// `ε_j = eps` for `j ≤ count`, zero beyond.
    pub fn uniform(m: usize, count: usize, eps: f64) -> Result<Self> {
        if count > m {
            return Err(Error::Dimension {
                what: "uniform capacity count",
                expected: m,
                found: count,
            });
        }
        let mut v = vec![0.0; m];
        v[..count].iter_mut().for_each(|e| *e = eps);
        Self::new(v)
    }

    pub fn epsilons(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `Σ i·ε_i`.
    pub fn weighted_sum(&self) -> f64 {
        index_weighted_sum(&self.0)
    }

    /// Mass left after honoring every lower bound, `1 − Σ i·ε_i`.
    pub fn residual(&self) -> f64 {
        1.0 - self.weighted_sum()
    }
}

impl TryFrom<Vec<f64>> for CapacityParams {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        CapacityParams::new(v)
    }
}

impl From<CapacityParams> for Vec<f64> {
    fn from(c: CapacityParams) -> Self {
        c.0
    }
}

/// Coefficients `d_j` of an objective `H = Σ θ_j·j·d_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct CoefficientVector(Vec<f64>);

impl CoefficientVector {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::validation("coefficients", Invariant::NonEmpty, "length is 0"));
        }
        if let Some((j, x)) = coeffs.iter().enumerate().find(|(_, x)| !x.is_finite()) {
            return Err(Error::validation(
                "coefficients",
                Invariant::Finite,
                format!("entry {} is {x}", j + 1),
            ));
        }
        Ok(CoefficientVector(coeffs))
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Gap-wise monotone: `d_1 ≥ d_2 ≥ … ≥ d_M`.
    pub fn is_gapwise_monotone(&self) -> bool {
        self.monotonicity_violation().is_none()
    }

    pub(crate) fn monotonicity_violation(&self) -> Option<Error> {
        self.0.windows(2).position(|w| w[0] < w[1]).map(|j| Error::NotMonotone {
            prev_index: j + 1,
            index: j + 2,
            prev: self.0[j],
            next: self.0[j + 1],
        })
    }
}

impl TryFrom<Vec<f64>> for CoefficientVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        CoefficientVector::new(v)
    }
}

impl From<CoefficientVector> for Vec<f64> {
    fn from(c: CoefficientVector) -> Self {
        c.0
    }
}

pub fn spikes_to_gaps(spikes: &SpikeVector) -> GapVector {
    let p = spikes.probs();
    let m = p.len();
    let gaps = (0..m)
        .map(|j| if j + 1 < m { p[j] - p[j + 1] } else { p[j] })
        .collect();
    GapVector(gaps)
}

pub fn gaps_to_spikes(gaps: &GapVector) -> SpikeVector {
    let mut probs = vec![0.0; gaps.len()];
    let mut acc = 0.0;
    for (p, g) in probs.iter_mut().zip(gaps.gaps()).rev() {
        acc += g;
        *p = acc;
    }
    SpikeVector(probs)
}

/// `H = Σ_j θ_j·j·d_j`.
pub fn evaluate_objective(gaps: &GapVector, coeffs: &CoefficientVector) -> Result<f64> {
    if gaps.len() != coeffs.len() {
        return Err(Error::Dimension {
            what: "objective coefficients",
            expected: gaps.len(),
            found: coeffs.len(),
        });
    }
    Ok(gaps
        .gaps()
        .iter()
        .zip(coeffs.coeffs())
        .enumerate()
        .map(|(i, (t, d))| t * (i + 1) as f64 * d)
        .sum())
}
