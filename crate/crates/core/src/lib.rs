//! Capacity-constrained auctions of a single indivisible item.
//!
//! The item is sold through a randomized experiment: bidders are ranked and
//! the rank-j bidder wins with probability `p_j` (a *spike*). Forcing lower
//! bounds on the gaps between consecutive spikes guarantees that more bidders
//! have a positive chance of winning, i.e. raises the auction's *capacity*.
//!
//! Modules:
//! - [`types`]: spikes, gaps, bidders, capacity parameters, objective coefficients.
//! - [`spike_vcg`]: VCG allocation, payments and their gap-wise decompositions.
//! - [`optimizer`]: optimal spike gaps under capacity constraints, with KKT certificates.
//! - [`capacity`]: capacity index, loss-free capacity increase, price of capacity.
//! - [`ssa`]: sponsored-search auctions selling the last slot through spikes.
//! - [`sim`]: Monte Carlo simulation of the two payment schemes.
//! - [`cli`]: scenario files and the `spikecap` command-line tool.

pub mod capacity;
pub mod cli;
pub mod error;
pub mod optimizer;
pub mod sim;
pub mod spike_vcg;
pub mod ssa;
pub mod types;

pub use error::{Error, Invariant, Result};
pub use types::{
    bidders_from_values, evaluate_objective, gaps_to_spikes, spikes_to_gaps, BidderId,
    BidderProfile, CapacityParams, CoefficientVector, GapVector, SpikeVector,
};
