// Copyright (c) The Gaslight Contributors
// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use serde::Serialize;

use super::timing::Clock;
use super::validators::ValidatorKind;
use crate::builders::{BuildFlag, BuilderKind, Caps, Mode};
use crate::exec::{CostModel, ExecOutcome};
use crate::model::{GasAmount, StateSnapshot, TxId, TxTag};
use crate::Rational;

/// History of one block from proposal to execution.
#[derive(Clone, Debug)]
pub struct RoundEntry {
    pub round: u64,
    pub proposer: usize,
    pub tx_ids: Vec<TxId>,
    /// Mempool size when the block was built.
    pub mempool_size: usize,
    pub block_gas_est: GasAmount,
    /// Round whose state the builder saw (`None` when it saw no state).
    pub build_settled_round: Option<u64>,
    pub flags: Vec<BuildFlag>,
    /// Filled once the block executes.
    pub exec: Option<BlockResult>,
}

/// Execution-time facts and per-block metrics.
#[derive(Clone, Debug)]
pub struct BlockResult {
    pub exec_round: u64,
    pub completion_ms: u64,
    pub outcomes: Vec<ExecOutcome>,
    pub gas_executed: GasAmount,
    pub gas_burned: GasAmount,
    pub cr_res: Rational,
    pub cr_res_star: Rational,
    pub cr_rew_star: Rational,
    pub burned_ratio: Rational,
    /// Charges actually credited to the proposer.
    pub reward: u64,
    pub assessed: u64,
    pub uncollected: u64,
    /// The creation mempool held a subset filling `G` exactly by gas (and,
    /// outside coupled mode, another by estimate).
    pub congested: bool,
    /// Junk in this block executed below its estimate.
    pub attacked: bool,
    /// The proposer was caught misdeclaring in this block.
    pub proposer_excluded: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidatorSummary {
    pub kind: ValidatorKind,
    pub excluded_at: Option<u64>,
    pub reward: u64,
    pub blocks: u64,
}

#[derive(Clone, Debug)]
pub struct RunRecord {
    pub mode: Mode,
    pub builder: BuilderKind,
    pub caps: Caps,
    pub cost_model: CostModel,
    pub lag: u64,
    pub clock: Clock,
    pub rounds: u64,
    pub entries: Vec<RoundEntry>,
    pub validators: Vec<ValidatorSummary>,
    /// Submission round and tag of every transaction that arrived.
    pub submitted: BTreeMap<TxId, (u64, TxTag)>,
    pub final_state: StateSnapshot,
    pub final_mempool: usize,
    /// Invariant breaches observed during the run.
    pub violations: Vec<String>,
}

impl RunRecord {
    pub fn executed(&self) -> impl Iterator<Item = (&RoundEntry, &BlockResult)> + '_ {
        self.entries
            .iter()
            .filter_map(|e| e.exec.as_ref().map(|x| (e, x)))
    }

    pub fn rewards(&self) -> Vec<u64> {
        self.validators.iter().map(|v| v.reward).collect()
    }

    pub fn outcomes(&self) -> impl Iterator<Item = (&RoundEntry, &ExecOutcome)> + '_ {
        self.executed()
            .flat_map(|(e, x)| x.outcomes.iter().map(move |o| (e, o)))
    }

    /// Total charged to senders whose transactions carry an adversarial tag.
    pub fn adversary_charged(&self) -> u64 {
        self.outcomes()
            .filter(|(_, o)| o.tag.is_adversarial())
            .map(|(_, o)| o.charged)
            .sum()
    }

    pub fn total_uncollected(&self) -> u64 {
        self.outcomes().map(|(_, o)| o.uncollected).sum()
    }

    pub fn attacked_blocks(&self) -> impl Iterator<Item = (&RoundEntry, &BlockResult)> + '_ {
        self.executed().filter(|(_, x)| x.attacked)
    }
}
