//! Scenario files.
//!
//! A scenario is a TOML document:
//!
//! ```toml
//! objective = "efficiency"        # revenue | efficiency | ssa_revenue
//! spikes = [0.7, 0.3]
//! epsilons = [0.0, 0.1, 0.05]
//!
//! [[bidders]]
//! id = 0                          # optional, defaults to the position
//! value = 10.0
//! relevance = 1.0                 # optional, defaults to 1
//!
//! [ssa]
//! slots = 2
//! position_ctrs = [1.0, 0.5]
//! spike_count = 2
//! ```
//!
//! Parsing only checks structure; domain invariants are checked when the
//! pieces are converted to validated types.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ssa::KeywordAuctionConfig;
use crate::types::{BidderProfile, CapacityParams, SpikeVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    Revenue,
    Efficiency,
    #[value(name = "ssa-revenue")]
    SsaRevenue,
}

impl Objective {
    pub fn as_str(self) -> &'static str {
        match self {
            Objective::Revenue => "revenue",
            Objective::Efficiency => "efficiency",
            Objective::SsaRevenue => "ssa_revenue",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioBidder {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<u64>,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relevance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SsaBlock {
    pub slots: usize,
    pub position_ctrs: Vec<f64>,
    pub spike_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<Objective>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spikes: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilons: Option<Vec<f64>>,
    #[serde(default)]
    pub bidders: Vec<ScenarioBidder>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ssa: Option<SsaBlock>,
}

/// Structural problem with a scenario file: I/O, syntax or field types.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{0}")]
pub struct ParseError(pub String);

impl Scenario {
    pub fn from_toml(text: &str) -> std::result::Result<Self, ParseError> {
        toml::from_str(text).map_err(|e| ParseError(e.to_string()))
    }

    pub fn load(path: &Path) -> std::result::Result<Self, ParseError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ParseError(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| ParseError(format!("{}: {}", path.display(), e.0)))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario fields are always representable in TOML")
    }

    pub fn bidder_profiles(&self) -> Result<Vec<BidderProfile>> {
        if self.bidders.is_empty() {
            return Err(Error::Input("scenario has no bidders".into()));
        }
        self.bidders
            .iter()
            .enumerate()
            .map(|(i, b)| {
                BidderProfile::with_relevance(
                    b.id.unwrap_or(i as u64),
                    b.value,
                    b.relevance.unwrap_or(1.0),
                )
            })
            .collect()
    }

    pub fn spike_vector(&self) -> Result<SpikeVector> {
        let probs = self
            .spikes
            .clone()
            .ok_or_else(|| Error::Input("scenario has no spikes".into()))?;
        SpikeVector::new(probs)
    }

    pub fn capacity(&self) -> Result<CapacityParams> {
        let eps = self
            .epsilons
            .clone()
            .ok_or_else(|| Error::Input("scenario has no epsilons".into()))?;
        CapacityParams::new(eps)
    }

    pub fn keyword_config(&self) -> Result<KeywordAuctionConfig> {
        let block = self
            .ssa
            .as_ref()
            .ok_or_else(|| Error::Input("scenario has no [ssa] block".into()))?;
        KeywordAuctionConfig::new(block.slots, block.position_ctrs.clone(), block.spike_count)
    }
}
