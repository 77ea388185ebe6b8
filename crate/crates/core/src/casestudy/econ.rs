// Copyright (c) The Gaslight Contributors
// SPDX-License-Identifier: Apache-2.0

//! Back-of-the-envelope economics of gaslighting every other proposer.
//!
//! An adversary holding share `α` of proposer slots gaslights the blocks it
//! does not propose. With overestimation factor `f`, each such block
//! executes only `1/f` of what it could, so the adversary diverts
//! `R · (1 − α) · (f − 1)/f` of the annual execution rewards `R`. It pays a
//! priority fee for one attack transaction in each of those blocks.

use serde::Serialize;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EconParams {
    pub total_execution_rewards_usd: f64,
    pub adversary_share: f64,
    pub overestimation_factor: f64,
    pub priority_fee_gwei: f64,
    pub attack_tx_gas: f64,
    pub blocks_per_year: f64,
    pub eth_price_usd: f64,
    /// Scales both captured rewards and cost for attacks on a fraction of
    /// blocks.
    pub silent_factor: f64,
}

impl Default for EconParams {
    fn default() -> Self {
        EconParams {
            total_execution_rewards_usd: 352e6,
            adversary_share: 0.10,
            overestimation_factor: 715.0,
            priority_fee_gwei: 50.0,
            attack_tx_gas: 50_000.0,
            blocks_per_year: 2.6e6,
            eth_price_usd: 4460.0,
            silent_factor: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum EconError {
    #[error("{0} must be a finite non-negative number")]
    Negative(&'static str),
    #[error("adversary share must lie in [0, 1]")]
    ShareOutOfRange,
    #[error("overestimation factor must be at least 1")]
    FactorBelowOne,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EconReport {
    pub captured_rewards_usd: f64,
    pub attacker_cost_eth: f64,
    pub attacker_cost_usd: f64,
    pub net_usd: f64,
}

impl EconParams {
    pub fn validate(&self) -> Result<(), EconError> {
        let fields = [
            ("total execution rewards", self.total_execution_rewards_usd),
            ("adversary share", self.adversary_share),
            ("overestimation factor", self.overestimation_factor),
            ("priority fee", self.priority_fee_gwei),
            ("attack gas", self.attack_tx_gas),
            ("blocks per year", self.blocks_per_year),
            ("ETH price", self.eth_price_usd),
            ("silent factor", self.silent_factor),
        ];
        if let Some((name, _)) = fields.iter().find(|(_, v)| !v.is_finite() || *v < 0.0) {
            return Err(EconError::Negative(name));
        }
        if self.adversary_share > 1.0 {
            return Err(EconError::ShareOutOfRange);
        }
        if self.overestimation_factor < 1.0 {
            return Err(EconError::FactorBelowOne);
        }
        Ok(())
    }
}

pub fn attack_economics(p: &EconParams) -> Result<EconReport, EconError> {
    p.validate()?;
    let others = 1.0 - p.adversary_share;
    let f = p.overestimation_factor;
    let captured = p.total_execution_rewards_usd * others * (f - 1.0) / f * p.silent_factor;
    let cost_eth =
        p.priority_fee_gwei * p.attack_tx_gas * p.blocks_per_year * others / 1e9 * p.silent_factor;
    let cost_usd = cost_eth * p.eth_price_usd;
    Ok(EconReport {
        captured_rewards_usd: captured,
        attacker_cost_eth: cost_eth,
        attacker_cost_usd: cost_usd,
        net_usd: captured - cost_usd,
    })
}
