// Copyright (c) The Gaslight Contributors
// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::record::{BlockResult, RoundEntry, RunRecord, ValidatorSummary};
use super::timing::Clock;
use super::validators::{ValidatorKind, ValidatorSet};
use super::{RunConfig, RunError};
use crate::adversary::{rational_filter, Workload};
use crate::builders::{build, reorder_hot, BuildContext, Mode};
use crate::exec::{execute_block_with, AbortReason, ExecOptions, ExecOutcome};
use crate::metrics::{
    burned_gas, executed_gas, gas_ratio, is_congested, oracle_cost, oracle_gas, ratio_or_one,
};
use crate::model::{Address, Block, Mempool, StateSnapshot, TxId, TxRef, TxTag};

struct Pending {
    block: Block,
    /// Mempool the proposer saw, kept for the optimal-block comparisons.
    creation_mempool: Vec<TxRef>,
    entry: usize,
}

/// Drops one data cell from the first transaction's declared writes, the
/// misbehavior partial coupling must catch.
fn misdeclare(block: &mut Block) {
    if !block.has_declarations() {
        return;
    }
    let mut writes = block.declared_writes.clone();
    if let Some(first) = writes.first_mut() {
        if let Some(&victim) = first.iter().find(|a| !a.is_balance()) {
            first.remove(&victim);
            block.set_declarations(writes);
        }
    }
}

struct Driver<'a> {
    cfg: &'a RunConfig,
    clock: Clock,
    validators: ValidatorSet,
    state: StateSnapshot,
    entries: Vec<RoundEntry>,
    rewards: Vec<u64>,
    blocks: Vec<u64>,
    violations: Vec<String>,
}

impl Driver<'_> {
    fn execute(&mut self, p: Pending, exec_round: u64) {
        let cfg = self.cfg;
        let caps = cfg.caps;
        let opts = ExecOptions {
            verify_declarations: cfg.mode == Mode::Partial,
        };
        let pre = &self.state;
        let ex = execute_block_with(&p.block, pre, cfg.cost_model, opts);
        let gas_executed = executed_gas(&ex.outcomes);
        let gas_burned = burned_gas(&ex.outcomes);
        let best_gas = oracle_gas(&p.creation_mempool, pre, caps);
        let best_cost = oracle_cost(&p.creation_mempool, pre, caps, cfg.cost_model);
        let assessed: u64 = ex.outcomes.iter().map(|o| o.assessed).sum();
        let reward: u64 = ex.outcomes.iter().map(|o| o.charged).sum();
        let uncollected: u64 = ex.outcomes.iter().map(|o| o.uncollected).sum();
        let congested = is_congested(&p.creation_mempool, pre, caps, cfg.mode != Mode::Coupled);
        let attacked = ex
            .outcomes
            .iter()
            .any(|o| o.tag == TxTag::Junk && o.is_executed() && junk_cheap(o, &p.block));
        let proposer_excluded = ex
            .outcomes
            .iter()
            .any(|o| o.abort_reason == Some(AbortReason::AccessMismatch));

        if assessed != reward + uncollected {
            self.violations
                .push(format!("block {}: charges do not balance", p.block.round));
        }
        if cfg.mode == Mode::Coupled && gas_burned > caps.g {
            self.violations
                .push(format!("block {}: executed gas {} exceeds the cap", p.block.round, gas_burned));
        }
        if proposer_excluded {
            self.validators.exclude(p.block.proposer, exec_round);
        }
        self.rewards[p.block.proposer] += reward;

        self.entries[p.entry].exec = Some(BlockResult {
            exec_round,
            completion_ms: self.clock.completion_ms(p.block.round),
            gas_executed,
            gas_burned,
            cr_res: gas_ratio(gas_executed, caps.g),
            cr_res_star: ratio_or_one(gas_executed.micro() as u128, best_gas.weight as u128),
            cr_rew_star: ratio_or_one(assessed as u128, best_cost.value),
            burned_ratio: gas_ratio(gas_burned, caps.g),
            reward,
            assessed,
            uncollected,
            congested,
            attacked,
            proposer_excluded,
            outcomes: ex.outcomes,
        });
        self.state = ex.state;
    }
}

/// Junk that ran below its own estimate.
fn junk_cheap(o: &ExecOutcome, b: &Block) -> bool {
    b.txs
        .iter()
        .find(|t| t.id == o.tx_id)
        .is_some_and(|t| o.gas_consumed < t.est)
}

pub(super) fn run(cfg: &RunConfig, wl: &Workload) -> Result<RunRecord, RunError> {
    cfg.check()?;
    let lag = cfg.effective_lag();
    let clock = Clock {
        timing: cfg.timing,
        mode: cfg.mode,
        lag,
    };
    let mut validators = cfg.validators.clone();
    if let Some(v) = wl.rational {
        if v < validators.len() {
            let mut kinds = validators.kinds().to_vec();
            kinds[v] = ValidatorKind::Rational;
            validators = ValidatorSet::new(kinds, cfg.rotation());
        }
    }
    let n_val = validators.len();
    let mut d = Driver {
        cfg,
        clock,
        validators,
        state: wl.initial_state.clone(),
        entries: Vec::with_capacity(cfg.rounds as usize),
        rewards: vec![0; n_val],
        blocks: vec![0; n_val],
        violations: Vec::new(),
    };

    let mut submitted = BTreeMap::new();
    for tx in wl.arrivals.iter().take(cfg.rounds as usize).flatten() {
        submitted.insert(tx.id, (tx.submit_round, tx.tag));
    }
    let mut mempool = Mempool::new();
    if let Some(first) = wl.arrivals.first() {
        mempool.extend(first.iter().cloned());
    }
    let mut included: BTreeSet<TxId> = BTreeSet::new();
    let mut pending: VecDeque<Pending> = VecDeque::new();

    for i in 1..=cfg.rounds {
        let proposer = d.validators.proposer(i);
        let view: Vec<TxRef> = mempool.snapshot();
        let entry_idx = d.entries.len();
        let (block, flags) = match proposer {
            None => (Block::new(i, 0, Vec::new()), Vec::new()),
            Some(p) => {
                let visible = if d.validators.kind(p) == ValidatorKind::Rational {
                    rational_filter(p, &view)
                } else {
                    view.clone()
                };
                let pending_writes: BTreeSet<Address> = pending
                    .iter()
                    .flat_map(|q| q.block.declared_write_union.iter().copied())
                    .collect();
                let state = match cfg.mode {
                    Mode::Decoupled => None,
                    Mode::Coupled | Mode::Partial => Some(&d.state),
                };
                let ctx = BuildContext {
                    round: i,
                    proposer: p,
                    mempool: &visible,
                    mode: cfg.mode,
                    state,
                    pending_writes: &pending_writes,
                    caps: cfg.caps,
                    cost_model: cfg.cost_model,
                };
                let built = build(cfg.builder, &ctx)?;
                let mut block = built.block;
                if cfg.reorder_hot {
                    block = reorder_hot(&block, &view);
                }
                if cfg.mode == Mode::Partial && d.validators.kind(p) == ValidatorKind::Misdeclaring {
                    misdeclare(&mut block);
                }
                d.blocks[p] += 1;
                (block, built.flags)
            }
        };
        if block.len() > cfg.caps.n {
            d.violations.push(format!("block {i}: {} transactions exceed N", block.len()));
        }
        if cfg.mode != Mode::Coupled && block.est_total() > cfg.caps.g {
            d.violations.push(format!("block {i}: estimates exceed G"));
        }
        if let Some(p) = proposer {
            if d.validators.is_excluded(p) {
                d.violations.push(format!("block {i}: excluded validator {p} proposed"));
            }
        }
        for t in &block.txs {
            if !included.insert(t.id) {
                d.violations.push(format!("block {i}: transaction {} included twice", t.id));
            }
        }
        d.entries.push(RoundEntry {
            round: i,
            proposer: block.proposer,
            tx_ids: block.txs.iter().map(|t| t.id).collect(),
            mempool_size: view.len(),
            block_gas_est: block.est_total(),
            build_settled_round: (cfg.mode != Mode::Decoupled).then_some(d.state.settled_round),
            flags,
            exec: None,
        });
        mempool.remove_block(&block);
        if let Some(batch) = wl.arrivals.get(i as usize) {
            if i < cfg.rounds {
                mempool.extend(batch.iter().cloned());
            }
        }
        pending.push_back(Pending {
            block,
            creation_mempool: view,
            entry: entry_idx,
        });
        while pending.front().is_some_and(|p| p.block.round + lag <= i) {
            let p = pending.pop_front().expect("front checked");
            d.execute(p, i);
        }
    }
    // let the pipeline drain so every agreed block executes
    while let Some(p) = pending.pop_front() {
        let r = p.block.round + lag;
        d.execute(p, r);
    }

    if submitted.len() != mempool.len() + included.len() {
        d.violations.push("mempool conservation broken".to_string());
    }
    let validators = (0..n_val)
        .map(|v| ValidatorSummary {
            kind: d.validators.kind(v),
            excluded_at: d.validators.excluded_at(v),
            reward: d.rewards[v],
            blocks: d.blocks[v],
        })
        .collect();
    Ok(RunRecord {
        mode: cfg.mode,
        builder: cfg.builder,
        caps: cfg.caps,
        cost_model: cfg.cost_model,
        lag,
        clock,
        rounds: cfg.rounds,
        entries: d.entries,
        validators,
        submitted,
        final_state: d.state,
        final_mempool: mempool.len(),
        violations: d.violations,
    })
}
