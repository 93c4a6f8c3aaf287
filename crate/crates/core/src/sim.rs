//! Monte Carlo simulation of the two-stage spike auction.
//!
//! Stage one runs VCG to fix the ranking and the expected payments `h_j`.
//! Stage two draws the winning rank from the categorical distribution given
//! by the spikes. Under betting every prospective winner pays `h_j` each
//! trial; under pay-per-acquisition only the winner pays, `h_j / p_j`.
//!
//! Randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64(seed)`. Trials are split into blocks of [`BLOCK_TRIALS`];
//! block `b` draws from stream `b` of that generator, one uniform per trial,
//! so results are identical for any thread schedule.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spike_vcg::{run_vcg, MechanismOutcome, PaymentScheme};
use crate::types::{BidderProfile, SpikeVector};

pub const BLOCK_TRIALS: u64 = 1 << 16;
/// Below this many trials a scheme comparison makes no pass/fail claim.
pub const LOW_POWER_TRIALS: u64 = 100;
/// Acceptance width in standard errors.
pub const SIGMA_LEVEL: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub trials: u64,
    pub empirical_payment_means: Vec<f64>,
    pub empirical_payment_variances: Vec<f64>,
    pub empirical_revenue_mean: f64,
    /// Auctioneer revenue collected in each trial under betting; `None`
    /// under pay-per-acquisition, where it depends on the winner.
    pub betting_revenue_per_trial: Option<f64>,
    pub win_counts: Vec<u64>,
    pub scheme: PaymentScheme,
    pub seed: u64,
}

impl SimulationResult {
    pub fn win_frequencies(&self) -> Vec<f64> {
        self.win_counts
            .iter()
            .map(|&w| w as f64 / self.trials as f64)
            .collect()
    }
}

/// Index of the first cumulative spike exceeding `u`.
fn sample_rank(cumulative: &[f64], last_positive: usize, u: f64) -> usize {
    let idx = cumulative.partition_point(|&c| c <= u);
    // u can exceed the last cumulative sum by round-off
    idx.min(last_positive)
}

fn count_block(spikes: &SpikeVector, seed: u64, block: u64, trials: u64) -> Vec<u64> {
    let cumulative: Vec<f64> = spikes
        .probs()
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    let last_positive = spikes.probs().iter().rposition(|&p| p > 0.0).unwrap_or(0);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    let mut counts = vec![0u64; spikes.len()];
    for _ in 0..trials {
        let u: f64 = rng.random();
        counts[sample_rank(&cumulative, last_positive, u)] += 1;
    }
    counts
}

/// Per-rank win counts over `trials` draws.
pub fn draw_winners(spikes: &SpikeVector, trials: u64, seed: u64) -> Vec<u64> {
    let blocks = trials.div_ceil(BLOCK_TRIALS);
    let per_block: Vec<Vec<u64>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let n = BLOCK_TRIALS.min(trials - b * BLOCK_TRIALS);
            count_block(spikes, seed, b, n)
        })
        .collect();
    per_block.into_iter().fold(vec![0; spikes.len()], |mut acc, c| {
        acc.iter_mut().zip(c).for_each(|(a, x)| *a += x);
        acc
    })
}

fn summarize(
    outcome: &MechanismOutcome,
    spikes: &SpikeVector,
    scheme: PaymentScheme,
    win_counts: Vec<u64>,
    trials: u64,
    seed: u64,
) -> SimulationResult {
    let t = trials as f64;
    let charges = outcome.charges(spikes, scheme);
    let (means, variances, revenue_mean, per_trial) = match scheme {
        PaymentScheme::Betting => {
            let per_trial: f64 = charges.iter().sum();
            (charges.clone(), vec![0.0; charges.len()], per_trial, Some(per_trial))
        }
        PaymentScheme::PayPerAcquisition => {
            let means = charges
                .iter()
                .zip(&win_counts)
                .map(|(c, &w)| c * w as f64 / t)
                .collect();
            let variances = charges
                .iter()
                .zip(&win_counts)
                .map(|(c, &w)| {
                    if trials < 2 {
                        0.0
                    } else {
                        let w = w as f64;
                        c * c * w * (t - w) / (t * (t - 1.0))
                    }
                })
                .collect();
            let revenue = charges
                .iter()
                .zip(&win_counts)
                .map(|(c, &w)| c * w as f64)
                .sum::<f64>()
                / t;
            (means, variances, revenue, None)
        }
    };
    SimulationResult {
        trials,
        empirical_payment_means: means,
        empirical_payment_variances: variances,
        empirical_revenue_mean: revenue_mean,
        betting_revenue_per_trial: per_trial,
        win_counts,
        scheme,
        seed,
    }
}

pub fn simulate(
    bidders: &[BidderProfile],
    spikes: &SpikeVector,
    scheme: PaymentScheme,
    trials: u64,
    seed: u64,
) -> Result<SimulationResult> {
    if trials == 0 {
        return Err(Error::Input("trials must be at least 1".into()));
    }
    let outcome = run_vcg(bidders, spikes)?;
    let wins = draw_winners(spikes, trials, seed);
    Ok(summarize(&outcome, spikes, scheme, wins, trials, seed))
}

/// Binomial standard error of the pay-per-acquisition mean payment per rank:
/// `(h_j/p_j)·sqrt(p_j(1 − p_j)/trials)`.
pub fn ppa_standard_errors(outcome: &MechanismOutcome, spikes: &SpikeVector, trials: u64) -> Vec<f64> {
    outcome
        .charges(spikes, PaymentScheme::PayPerAcquisition)
        .iter()
        .zip(spikes.probs())
        .map(|(c, p)| c * (p * (1.0 - p) / trials as f64).sqrt())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeComparison {
    pub trials: u64,
    pub seed: u64,
    pub expected_payments: Vec<f64>,
    pub betting_means: Vec<f64>,
    pub ppa_means: Vec<f64>,
    /// `ppa_means − betting_means`.
    pub differences: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub within_bounds: Vec<bool>,
    /// `None` when the sample is too small to support a claim.
    pub passed: Option<bool>,
    pub low_power: bool,
}

/// Runs both schemes on the same draws and checks that their mean payments
/// agree within [`SIGMA_LEVEL`] standard errors.
pub fn compare_schemes(
    bidders: &[BidderProfile],
    spikes: &SpikeVector,
    trials: u64,
    seed: u64,
) -> Result<SchemeComparison> {
    if trials == 0 {
        return Err(Error::Input("trials must be at least 1".into()));
    }
    let outcome = run_vcg(bidders, spikes)?;
    let wins = draw_winners(spikes, trials, seed);
    let betting = summarize(&outcome, spikes, PaymentScheme::Betting, wins.clone(), trials, seed);
    let ppa = summarize(&outcome, spikes, PaymentScheme::PayPerAcquisition, wins, trials, seed);
    let standard_errors = ppa_standard_errors(&outcome, spikes, trials);

    let differences: Vec<f64> = ppa
        .empirical_payment_means
        .iter()
        .zip(&betting.empirical_payment_means)
        .map(|(a, b)| a - b)
        .collect();
    let within_bounds: Vec<bool> = differences
        .iter()
        .zip(&standard_errors)
        .zip(&outcome.expected_payments)
        .map(|((d, se), h)| d.abs() <= SIGMA_LEVEL * se + 1e-12 * h.abs().max(1.0))
        .collect();
    let low_power = trials < LOW_POWER_TRIALS;
    let passed = (!low_power).then(|| within_bounds.iter().all(|&b| b));

    Ok(SchemeComparison {
        trials,
        seed,
        expected_payments: outcome.expected_payments,
        betting_means: betting.empirical_payment_means,
        ppa_means: ppa.empirical_payment_means,
        differences,
        standard_errors,
        within_bounds,
        passed,
        low_power,
    })
}
