// Copyright (c) The Gaslight Contributors
// SPDX-License-Identifier: Apache-2.0

//! Round drivers for the coupled, decoupled and partially coupled pipelines.
//!
//! Consensus is a black box that finalizes one block per round. In round
//! `i` the proposer builds `bᵢ` from `Mᵢ`, the block is finalized, the
//! round's arrivals join the mempool, and block `b_{i−L}` executes, where
//! `L` is the lag (zero when coupled). After the last round the pipeline
//! drains so every finalized block executes.

mod driver;
mod record;
mod timing;
mod validators;

use thiserror::Error;

pub use record::{BlockResult, RoundEntry, RunRecord, ValidatorSummary};
pub use timing::{beta, Clock, TimingModel};
pub use validators::{Rotation, ValidatorKind, ValidatorSet};

use crate::adversary::Workload;
use crate::builders::{BuildError, BuilderKind, Caps, Mode};
use crate::exec::CostModel;

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub mode: Mode,
    pub builder: BuilderKind,
    pub caps: Caps,
    pub rounds: u64,
    /// Execution lag in rounds; ignored when coupled. `None` picks the
    /// default: 2 for decoupled, the pipeline's natural lag for partial.
    pub lag: Option<u64>,
    pub cost_model: CostModel,
    pub timing: TimingModel,
    pub validators: ValidatorSet,
    pub rotation: Rotation,
    /// Apply hot-resource reordering to every proposed block.
    pub reorder_hot: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum RunError {
    #[error("validator set is empty")]
    NoValidators,
    #[error("timing values must all be positive")]
    InvalidTiming,
    #[error(transparent)]
    Build(#[from] BuildError),
}

impl RunConfig {
    pub fn effective_lag(&self) -> u64 {
        match self.mode {
            Mode::Coupled => 0,
            Mode::Decoupled => self.lag.unwrap_or(2),
            Mode::Partial => self.lag.unwrap_or_else(|| self.timing.natural_lag()),
        }
    }

    pub fn rotation(&self) -> Rotation {
        self.rotation
    }

    fn check(&self) -> Result<(), RunError> {
        if self.validators.is_empty() {
            return Err(RunError::NoValidators);
        }
        if !self.timing.is_valid() {
            return Err(RunError::InvalidTiming);
        }
        if !self.builder.allowed_in(self.mode) {
            return Err(BuildError::WrongMode {
                builder: self.builder.as_str(),
                mode: self.mode.as_str(),
            }
            .into());
        }
        Ok(())
    }
}

/// Runs `workload` under `cfg.mode`.
pub fn run(cfg: &RunConfig, workload: &Workload) -> Result<RunRecord, RunError> {
    driver::run(cfg, workload)
}

fn with_mode(cfg: &RunConfig, mode: Mode) -> RunConfig {
    RunConfig {
        mode,
        ..cfg.clone()
    }
}

/// Coupled pipeline: the builder sees `stᵢ` and the block executes in its
/// own round.
pub fn run_coupled(cfg: &RunConfig, workload: &Workload) -> Result<RunRecord, RunError> {
    run(&with_mode(cfg, Mode::Coupled), workload)
}

/// Decoupled pipeline with execution `lag` rounds behind consensus.
pub fn run_decoupled(cfg: &RunConfig, workload: &Workload, lag: u64) -> Result<RunRecord, RunError> {
    let mut c = with_mode(cfg, Mode::Decoupled);
    c.lag = Some(lag);
    run(&c, workload)
}

/// Partially coupled pipeline: conflict-aware building over the last
/// settled state, declaration checks at execution.
pub fn run_partial(cfg: &RunConfig, workload: &Workload) -> Result<RunRecord, RunError> {
    run(&with_mode(cfg, Mode::Partial), workload)
}
