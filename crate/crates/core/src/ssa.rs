//! Sponsored-search auctions with the last slot sold through spikes.
//!
//! Advertisers are ranked by score `s_i = e_i·v_i` (rank by revenue with
//! generalized second pricing, bids equal to values). At the symmetric Nash
//! equilibrium the auctioneer earns `Σ_j (γ_j − γ_{j+1})·j·s_σ(j+1)`.
//!
//! The combined auction sells slots `1..K−1` as usual and slot `K` through
//! spikes over ranks `K..K+M−1`. It is the plain auction with `K+M−1` slots
//! and effective CTRs `(γ_1, …, γ_{K−1}, γ_K·p_1, …, γ_K·p_M)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizer::{self, LpSolution};
use crate::types::{
    evaluate_objective, rank_by, validate_bidders, BidderProfile, CapacityParams,
    CoefficientVector, SpikeVector,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordAuctionConfig {
    pub slots: usize,
    pub position_ctrs: Vec<f64>,
    pub spike_count: usize,
}

fn check_strict_ctrs(ctrs: &[f64]) -> Result<()> {
    if ctrs.is_empty() {
        return Err(Error::Config("at least one slot is required".into()));
    }
    if let Some(j) = ctrs.iter().position(|g| !(g.is_finite() && *g > 0.0)) {
        return Err(Error::Config(format!("gamma_{} = {} is not positive", j + 1, ctrs[j])));
    }
    if let Some(j) = ctrs.windows(2).position(|w| w[0] <= w[1]) {
        return Err(Error::Config(format!(
            "position CTRs must be strictly decreasing: gamma_{} = {} <= gamma_{} = {}",
            j + 1,
            ctrs[j],
            j + 2,
            ctrs[j + 1]
        )));
    }
    Ok(())
}

impl KeywordAuctionConfig {
    pub fn new(slots: usize, position_ctrs: Vec<f64>, spike_count: usize) -> Result<Self> {
        let cfg = KeywordAuctionConfig {
            slots,
            position_ctrs,
            spike_count,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.slots == 0 {
            return Err(Error::Config("at least one slot is required".into()));
        }
        if self.position_ctrs.len() != self.slots {
            return Err(Error::Config(format!(
                "{} slots but {} position CTRs",
                self.slots,
                self.position_ctrs.len()
            )));
        }
        if self.spike_count == 0 {
            return Err(Error::Config("at least one spike is required".into()));
        }
        check_strict_ctrs(&self.position_ctrs)
    }

    /// `(γ_1, …, γ_{K−1}, γ_K·p_1, …, γ_K·p_M)`.
    pub fn effective_ctrs(&self, spikes: &SpikeVector) -> Result<Vec<f64>> {
        self.validate()?;
        if spikes.len() != self.spike_count {
            return Err(Error::Dimension {
                what: "spikes",
                expected: self.spike_count,
                found: spikes.len(),
            });
        }
        let k = self.slots;
        let last = self.position_ctrs[k - 1];
        Ok(self.position_ctrs[..k - 1]
            .iter()
            .copied()
            .chain(spikes.probs().iter().map(|p| last * p))
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SsaOutcome {
    /// Bidder indices by score, descending.
    pub ranking: Vec<usize>,
    /// Scores `s = e·v` in rank order.
    pub ranked_scores: Vec<f64>,
    pub sne_revenue: f64,
    /// GSP per-click price `s_σ(i+1) / e_σ(i)` for every filled slot.
    pub per_slot_prices: Vec<f64>,
    pub effective_ctrs: Vec<f64>,
}

/// Equilibrium revenue for strictly decreasing, positive position CTRs.
pub fn sne_revenue(bidders: &[BidderProfile], ctrs: &[f64]) -> Result<SsaOutcome> {
    check_strict_ctrs(ctrs)?;
    sne_revenue_weak(bidders, ctrs)
}

/// [`sne_revenue`] for CTRs that are only non-increasing and non-negative,
/// as produced by spikes with ties or zero tails.
pub fn sne_revenue_weak(bidders: &[BidderProfile], ctrs: &[f64]) -> Result<SsaOutcome> {
    validate_bidders(bidders)?;
    if ctrs.is_empty() {
        return Err(Error::Config("at least one slot is required".into()));
    }
    if let Some(j) = ctrs.iter().position(|g| !(g.is_finite() && *g >= 0.0)) {
        return Err(Error::Config(format!("gamma_{} = {} is negative", j + 1, ctrs[j])));
    }
    if let Some(j) = ctrs.windows(2).position(|w| w[0] < w[1]) {
        return Err(Error::Config(format!(
            "position CTRs must be non-increasing: gamma_{} < gamma_{}",
            j + 1,
            j + 2
        )));
    }

    let ranking = rank_by(bidders, BidderProfile::score);
    let ranked_scores: Vec<f64> = ranking.iter().map(|&i| bidders[i].score()).collect();
    let score = |k: usize| ranked_scores.get(k - 1).copied().unwrap_or(0.0);
    let gamma = |k: usize| ctrs.get(k - 1).copied().unwrap_or(0.0);

    let revenue = (1..=ctrs.len())
        .map(|j| (gamma(j) - gamma(j + 1)) * j as f64 * score(j + 1))
        .sum();
    let per_slot_prices = ranking
        .iter()
        .take(ctrs.len())
        .enumerate()
        .map(|(r, &i)| {
            let e = bidders[i].relevance;
            if e > 0.0 {
                score(r + 2) / e
            } else {
                0.0
            }
        })
        .collect();

    Ok(SsaOutcome {
        ranking,
        ranked_scores,
        sne_revenue: revenue,
        per_slot_prices,
        effective_ctrs: ctrs.to_vec(),
    })
}

pub fn combined_auction(
    bidders: &[BidderProfile],
    config: &KeywordAuctionConfig,
    spikes: &SpikeVector,
) -> Result<SsaOutcome> {
    let ctrs = config.effective_ctrs(spikes)?;
    sne_revenue_weak(bidders, &ctrs)
}

fn ranked_scores(bidders: &[BidderProfile]) -> Result<Vec<f64>> {
    validate_bidders(bidders)?;
    Ok(rank_by(bidders, BidderProfile::score)
        .into_iter()
        .map(|i| bidders[i].score())
        .collect())
}

/// `d_j = ((K+j−1)·s_σ(K+j) − (K−1)·s_σ(K)) / j`. May be negative and need
/// not be gap-wise monotone.
pub fn ssa_objective_coefficients(
    bidders: &[BidderProfile],
    config: &KeywordAuctionConfig,
) -> Result<CoefficientVector> {
    config.validate()?;
    let s = ranked_scores(bidders)?;
    let score = |k: usize| s.get(k - 1).copied().unwrap_or(0.0);
    let k = config.slots;
    let kf = k as f64;
    let coeffs = (1..=config.spike_count)
        .map(|j| {
            let jf = j as f64;
            ((kf + jf - 1.0) * score(k + j) - (kf - 1.0) * score(k)) / jf
        })
        .collect();
    CoefficientVector::new(coeffs)
}

/// Revenue from the conventionally sold slots once the spike-dependent part
/// is factored out: `Σ_{j=1}^{K−2} (γ_j − γ_{j+1})·j·s_σ(j+1) + γ_{K−1}·(K−1)·s_σ(K)`.
pub fn fixed_part(bidders: &[BidderProfile], config: &KeywordAuctionConfig) -> Result<f64> {
    config.validate()?;
    let s = ranked_scores(bidders)?;
    let score = |k: usize| s.get(k - 1).copied().unwrap_or(0.0);
    let g = &config.position_ctrs;
    let k = config.slots;
    if k < 2 {
        return Ok(0.0);
    }
    let head: f64 = (1..=k - 2)
        .map(|j| (g[j - 1] - g[j]) * j as f64 * score(j + 1))
        .sum();
    Ok(head + g[k - 2] * (k - 1) as f64 * score(k))
}

/// `fixed_part + γ_K·H(θ)`, the rearranged combined-auction revenue.
pub fn decomposed_revenue(
    bidders: &[BidderProfile],
    config: &KeywordAuctionConfig,
    spikes: &SpikeVector,
) -> Result<f64> {
    let coeffs = ssa_objective_coefficients(bidders, config)?;
    let h = evaluate_objective(&spikes.to_gaps(), &coeffs)?;
    Ok(fixed_part(bidders, config)? + config.position_ctrs[config.slots - 1] * h)
}

/// Spikes for the last slot that maximize equilibrium revenue subject to
/// the gap bounds `eps`.
pub fn optimize_ssa_spikes(
    bidders: &[BidderProfile],
    config: &KeywordAuctionConfig,
    eps: &CapacityParams,
) -> Result<LpSolution> {
    let coeffs = ssa_objective_coefficients(bidders, config)?;
    optimizer::solve(&coeffs, eps)
}
