// Copyright (c) The Gaslight Contributors
// SPDX-License-Identifier: Apache-2.0

//! Slot timing and the wall-clock mapping of rounds.
//!
//! A coupled slot runs block creation, consensus and execution back to back,
//! so it lasts `δ = δᵉ + δᶜ + δᵇ`. A pipelined slot (decoupled or partial)
//! only waits for the slower of creation and consensus, `σ = max(δᵇ, δᶜ)`.
//! Execution of block `j` starts `shift` after the block is proposed and
//! overlaps consensus, so the block settles after
//! `max(δᵇ + δᶜ, shift + δᵉ)`. Every round of lag beyond what that pipeline
//! depth needs adds one more slot.

use serde::{Deserialize, Serialize};

use crate::builders::Mode;
use crate::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimingModel {
    pub delta_e: u64,
    pub delta_c: u64,
    pub delta_b: u64,
    /// Offset of execution start from proposal in pipelined modes; `None`
    /// means `δᵇ`.
    pub exec_offset: Option<u64>,
}

impl Default for TimingModel {
    fn default() -> Self {
        TimingModel {
            delta_e: 200,
            delta_c: 600,
            delta_b: 200,
            exec_offset: None,
        }
    }
}

impl TimingModel {
    pub fn new(delta_e: u64, delta_c: u64, delta_b: u64) -> Self {
        TimingModel {
            delta_e,
            delta_c,
            delta_b,
            exec_offset: None,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.delta_e > 0 && self.delta_c > 0 && self.delta_b > 0
    }

    /// `δ`.
    pub fn coupled_slot(&self) -> u64 {
        self.delta_e + self.delta_c + self.delta_b
    }

    /// `σ`.
    pub fn pipelined_slot(&self) -> u64 {
        self.delta_b.max(self.delta_c)
    }

    fn shift(&self) -> u64 {
        self.exec_offset.unwrap_or(self.delta_b)
    }

    /// Time from proposal until a block settles with no extra lag.
    pub fn pipeline_depth(&self) -> u64 {
        (self.delta_b + self.delta_c).max(self.shift() + self.delta_e)
    }

    /// Lag, in rounds, that the pipeline imposes by itself.
    pub fn natural_lag(&self) -> u64 {
        let sigma = self.pipelined_slot().max(1);
        self.pipeline_depth().div_ceil(sigma).saturating_sub(1)
    }
}

/// `β = δ / δᵉ` exactly.
pub fn beta(t: &TimingModel) -> Rational {
    Rational::new(t.coupled_slot() as i128, t.delta_e.max(1) as i128)
}

/// Maps rounds to milliseconds for one run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clock {
    pub timing: TimingModel,
    pub mode: Mode,
    pub lag: u64,
}

impl Clock {
    pub fn slot_ms(&self) -> u64 {
        match self.mode {
            Mode::Coupled => self.timing.coupled_slot(),
            Mode::Decoupled | Mode::Partial => self.timing.pipelined_slot(),
        }
    }

    /// Proposal time of block `j` (rounds are 1-based).
    pub fn start_ms(&self, j: u64) -> u64 {
        j.saturating_sub(1) * self.slot_ms()
    }

    /// Time at which block `j` has executed.
    pub fn completion_ms(&self, j: u64) -> u64 {
        match self.mode {
            Mode::Coupled => self.start_ms(j) + self.timing.coupled_slot(),
            Mode::Decoupled | Mode::Partial => {
                let extra = self.lag.saturating_sub(self.timing.natural_lag());
                self.start_ms(j) + self.timing.pipeline_depth() + extra * self.slot_ms()
            }
        }
    }

    /// Time at which a transaction submitted in round `r` becomes visible to
    /// the proposer of block `r + 1`.
    pub fn submit_ms(&self, r: u64) -> u64 {
        self.start_ms(r + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_examples() {
        assert_eq!(beta(&TimingModel::new(200, 600, 200)), Rational::from_integer(5));
        assert_eq!(beta(&TimingModel::new(1, 1, 1)), Rational::from_integer(3));
        assert_eq!(beta(&TimingModel::new(250, 600, 150)), Rational::from_integer(4));
    }

    #[test]
    fn coupled_slot_is_one_second() {
        let c = Clock {
            timing: TimingModel::default(),
            mode: Mode::Coupled,
            lag: 0,
        };
        assert_eq!(c.slot_ms(), 1000);
        assert_eq!(c.completion_ms(1) - c.submit_ms(0), 1000);
    }

    #[test]
    fn pipelined_clock() {
        let t = TimingModel::default();
        assert_eq!(t.natural_lag(), 1);
        let p = Clock {
            timing: t,
            mode: Mode::Partial,
            lag: 1,
        };
        assert_eq!(p.slot_ms(), 600);
        assert_eq!(p.completion_ms(3) - p.submit_ms(2), 800);
        let d = Clock { lag: 2, ..p };
        assert_eq!(d.completion_ms(3) - d.submit_ms(2), 1400);
    }
}
