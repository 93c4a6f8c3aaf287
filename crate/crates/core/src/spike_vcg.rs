//! VCG mechanism for selling probability spikes.
//!
//! Bidders are ranked by value and the rank-j bidder receives spike `p_j`.
//! Each prospective winner is charged its opportunity cost
//!
//! ```text
//! h_j = Σ_{i=j}^{M-1} (p_i − p_{i+1})·v_σ(i+1) + p_M·v_σ(M+1)
//! ```
//!
//! where ranks past the last real bidder carry value zero. Revenue and
//! efficiency both take the gap-wise form `Σ θ_i·i·d_i` with non-increasing
//! `d_i`, which is what the spike optimizer consumes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{
    evaluate_objective, rank_by, validate_bidders, BidderProfile, CoefficientVector, SpikeVector,
    FEASIBILITY_TOL,
};

/// How prospective winners settle their VCG charge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PaymentScheme {
    /// Charged `h_j` at commit, win or lose.
    Betting,
    /// Charged `h_j / p_j` only when the experiment selects the bidder.
    #[serde(rename = "ppa")]
    PayPerAcquisition,
}

impl PaymentScheme {
    pub fn as_str(self) -> &'static str {
        match self {
            PaymentScheme::Betting => "betting",
            PaymentScheme::PayPerAcquisition => "ppa",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MechanismOutcome {
    /// `ranking[r]` is the index (into the input slice) of the rank-`r+1` bidder.
    pub ranking: Vec<usize>,
    /// Bidder values in rank order.
    pub ranked_values: Vec<f64>,
    /// Expected payment `h_j` of the rank-j prospective winner, one per spike.
    pub expected_payments: Vec<f64>,
    pub revenue: f64,
    pub efficiency: f64,
}

impl MechanismOutcome {
    /// Value at 1-based rank `k`, zero for phantom ranks past the last bidder.
    pub fn value_at_rank(&self, k: usize) -> f64 {
        self.ranked_values.get(k - 1).copied().unwrap_or(0.0)
    }

    /// Per-win charge under `scheme`: `h_j` for betting, `h_j / p_j` for
    /// pay-per-acquisition (zero when `p_j = 0`, since that rank never wins).
    pub fn charges(&self, spikes: &SpikeVector, scheme: PaymentScheme) -> Vec<f64> {
        match scheme {
            PaymentScheme::Betting => self.expected_payments.clone(),
            PaymentScheme::PayPerAcquisition => self
                .expected_payments
                .iter()
                .zip(spikes.probs())
                .map(|(&h, &p)| if p > 0.0 { h / p } else { 0.0 })
                .collect(),
        }
    }

    /// Realized expected utility `p_j·v − h_j` of every assigned rank.
    pub fn utilities(&self, spikes: &SpikeVector) -> Vec<f64> {
        spikes
            .probs()
            .iter()
            .zip(&self.expected_payments)
            .enumerate()
            .take(self.ranked_values.len())
            .map(|(j, (p, h))| p * self.ranked_values[j] - h)
            .collect()
    }
}

/// Coefficients `d_i` of a quantity written as `Σ θ_i·i·d_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapwiseDecomposition {
    pub coeffs: CoefficientVector,
    pub is_monotone: bool,
}

pub fn run_vcg(bidders: &[BidderProfile], spikes: &SpikeVector) -> Result<MechanismOutcome> {
    validate_bidders(bidders)?;
    let ranking = rank_by(bidders, |b| b.value);
    let ranked_values: Vec<f64> = ranking.iter().map(|&i| bidders[i].value).collect();
    let val = |k: usize| ranked_values.get(k - 1).copied().unwrap_or(0.0);

    let p = spikes.probs();
    let m = p.len();
    let mut h = vec![0.0; m];
    h[m - 1] = p[m - 1] * val(m + 1);
    for j in (0..m - 1).rev() {
        // 1-based: h_j = h_{j+1} + (p_j − p_{j+1})·v_σ(j+1)
        h[j] = h[j + 1] + (p[j] - p[j + 1]) * val(j + 2);
    }
    let revenue = h.iter().sum();
    let efficiency = p.iter().enumerate().map(|(j, pj)| pj * val(j + 1)).sum();

    Ok(MechanismOutcome {
        ranking,
        ranked_values,
        expected_payments: h,
        revenue,
        efficiency,
    })
}

fn decompose(
    spikes: &SpikeVector,
    coeffs: Vec<f64>,
    target: f64,
    what: &str,
) -> Result<GapwiseDecomposition> {
    let coeffs = CoefficientVector::new(coeffs)?;
    let h = evaluate_objective(&spikes.to_gaps(), &coeffs)?;
    if (h - target).abs() > FEASIBILITY_TOL * target.abs().max(1.0) {
        return Err(Error::Consistency(format!(
            "{what} {target} does not match its gap-wise form {h}; outcome was produced for other spikes"
        )));
    }
    let is_monotone = coeffs.is_gapwise_monotone();
    Ok(GapwiseDecomposition { coeffs, is_monotone })
}

fn check_lengths(outcome: &MechanismOutcome, spikes: &SpikeVector) -> Result<()> {
    if outcome.expected_payments.len() != spikes.len() {
        return Err(Error::Consistency(format!(
            "outcome has {} payments but there are {} spikes",
            outcome.expected_payments.len(),
            spikes.len()
        )));
    }
    Ok(())
}

/// Revenue as `Σ θ_i·i·v_σ(i+1)`.
pub fn revenue_decomposition(
    outcome: &MechanismOutcome,
    spikes: &SpikeVector,
) -> Result<GapwiseDecomposition> {
    check_lengths(outcome, spikes)?;
    let coeffs = (1..=spikes.len()).map(|i| outcome.value_at_rank(i + 1)).collect();
    decompose(spikes, coeffs, outcome.revenue, "revenue")
}

/// Efficiency as `Σ θ_i·i·d_i` with `d_i` the mean of the top-i values.
pub fn efficiency_decomposition(
    outcome: &MechanismOutcome,
    spikes: &SpikeVector,
) -> Result<GapwiseDecomposition> {
    check_lengths(outcome, spikes)?;
    let mut prefix = 0.0;
    let coeffs = (1..=spikes.len())
        .map(|i| {
            prefix += outcome.value_at_rank(i);
            prefix / i as f64
        })
        .collect();
    decompose(spikes, coeffs, outcome.efficiency, "efficiency")
}

/// Revenue coefficients for `m` spikes; they do not depend on the spikes.
pub fn revenue_coefficients(bidders: &[BidderProfile], m: usize) -> Result<CoefficientVector> {
    let spikes = SpikeVector::point_mass(m)?;
    Ok(revenue_decomposition(&run_vcg(bidders, &spikes)?, &spikes)?.coeffs)
}

/// Efficiency coefficients for `m` spikes.
pub fn efficiency_coefficients(bidders: &[BidderProfile], m: usize) -> Result<CoefficientVector> {
    let spikes = SpikeVector::point_mass(m)?;
    Ok(efficiency_decomposition(&run_vcg(bidders, &spikes)?, &spikes)?.coeffs)
}

fn check_permutation(ranking: &[usize], n: usize) -> Result<()> {
    if ranking.len() != n {
        return Err(Error::Dimension {
            what: "ranking",
            expected: n,
            found: ranking.len(),
        });
    }
    let mut seen = vec![false; n];
    for &i in ranking {
        if i >= n || std::mem::replace(&mut seen[i], true) {
            return Err(Error::Input(format!("ranking is not a permutation of 0..{n}")));
        }
    }
    Ok(())
}

/// `Σ_j p_j·v_ranking[j]` over the assigned ranks.
pub fn allocation_efficiency(
    bidders: &[BidderProfile],
    spikes: &SpikeVector,
    ranking: &[usize],
) -> Result<f64> {
    check_permutation(ranking, bidders.len())?;
    Ok(spikes
        .probs()
        .iter()
        .zip(ranking)
        .map(|(p, &i)| p * bidders[i].value)
        .sum())
}

/// True iff every bidder's realized utility under `(ranking, payments)`
/// equals the best it could get by picking any spike at those prices, or
/// staying out.
pub fn check_walrasian(
    bidders: &[BidderProfile],
    spikes: &SpikeVector,
    ranking: &[usize],
    payments: &[f64],
) -> Result<bool> {
    validate_bidders(bidders)?;
    check_permutation(ranking, bidders.len())?;
    if payments.len() != spikes.len() {
        return Err(Error::Dimension {
            what: "payments",
            expected: spikes.len(),
            found: payments.len(),
        });
    }
    let p = spikes.probs();
    let scale = payments
        .iter()
        .chain(bidders.iter().map(|b| &b.value))
        .fold(1.0f64, |acc, x| acc.max(x.abs()));
    let tol = FEASIBILITY_TOL * scale;

    Ok(ranking.iter().enumerate().all(|(rank, &i)| {
        let v = bidders[i].value;
        let realized = if rank < p.len() {
            p[rank] * v - payments[rank]
        } else {
            0.0
        };
        let best = p
            .iter()
            .zip(payments)
            .map(|(pj, hj)| pj * v - hj)
            .fold(0.0f64, f64::max);
        (realized - best).abs() <= tol
    }))
}
