// Copyright (c) The Gaslight Contributors
// SPDX-License-Identifier: Apache-2.0

//! Utilization, reward, fairness, throughput and latency measures.
//!
//! All ratios are exact. Utilization counts the path gas of transactions
//! that executed; `burned_ratio` also counts estimates burned by aborts.
//! Comparisons against the best possible block use the knapsack oracle over
//! the mempool the proposer saw, evaluated at the block's execution
//! pre-state.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::builders::Caps;
use crate::exec::{cost, execute_block, CostModel, ExecOutcome};
use crate::knapsack::{self, Item, Selection};
use crate::model::{Block, GasAmount, StateSnapshot, TxId, TxRef, TxTag};
use crate::protocol::RunRecord;
use crate::Rational;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("the run has no rounds")]
    EmptyRun,
    #[error("transaction {0} never executed")]
    TxNeverExecuted(TxId),
}

/// `num / den`, with `0 / 0` read as one (nothing was missed).
pub fn ratio_or_one(num: u128, den: u128) -> Rational {
    if den == 0 {
        if num == 0 {
            Rational::from_integer(1)
        } else {
            // cannot happen for oracle denominators; keep it visible
            Rational::from_integer(i128::MAX)
        }
    } else {
        Rational::new(num as i128, den as i128)
    }
}

pub fn gas_ratio(gas: GasAmount, g: GasAmount) -> Rational {
    Rational::new(gas.micro() as i128, g.micro().max(1) as i128)
}

/// Σ path gas of executed outcomes.
pub fn executed_gas(outcomes: &[ExecOutcome]) -> GasAmount {
    outcomes
        .iter()
        .filter(|o| o.is_executed())
        .map(|o| o.gas_consumed)
        .sum()
}

/// Σ gas consumed, aborts included.
pub fn burned_gas(outcomes: &[ExecOutcome]) -> GasAmount {
    outcomes.iter().map(|o| o.gas_consumed).sum()
}

/// Block utilization: executed gas of `b` run on `st`, over `G`.
pub fn cr_res(b: &Block, st: &StateSnapshot, g: GasAmount, model: CostModel) -> Rational {
    gas_ratio(executed_gas(&execute_block(b, st, model).outcomes), g)
}

/// Gas-maximal block over `mempool` at `st` (transactions that would abort
/// there contribute nothing and are left out).
pub fn oracle_gas(mempool: &[TxRef], st: &StateSnapshot, caps: Caps) -> Selection {
    let weights: Vec<u64> = mempool
        .iter()
        .map(|t| {
            let g = crate::exec::gas_actual(t, st);
            if g <= t.est {
                g.micro()
            } else {
                u64::MAX
            }
        })
        .collect();
    knapsack::max_weight(&weights, caps.n, caps.g.micro())
}

/// Cost-maximal block over `mempool` at `st`.
pub fn oracle_cost(
    mempool: &[TxRef],
    st: &StateSnapshot,
    caps: Caps,
    model: CostModel,
) -> Selection {
    let items: Vec<Item> = mempool
        .iter()
        .map(|t| {
            let g = crate::exec::gas_actual(t, st);
            if g <= t.est {
                Item {
                    weight: g.micro(),
                    value: cost(t, st, model) as u128,
                }
            } else {
                Item {
                    weight: u64::MAX,
                    value: 0,
                }
            }
        })
        .collect();
    knapsack::solve(&items, caps.n, caps.g.micro())
}

/// `gas(b, st) / gas(b*, st)`.
pub fn cr_res_star(
    b: &Block,
    mempool: &[TxRef],
    st: &StateSnapshot,
    caps: Caps,
    model: CostModel,
) -> Rational {
    let got = executed_gas(&execute_block(b, st, model).outcomes);
    ratio_or_one(got.micro() as u128, oracle_gas(mempool, st, caps).weight as u128)
}

/// `cost(b, st) / cost(b*, st)` with `b*` the cost-maximal block.
pub fn cr_rew_star(
    b: &Block,
    mempool: &[TxRef],
    st: &StateSnapshot,
    caps: Caps,
    model: CostModel,
) -> Rational {
    let got: u64 = execute_block(b, st, model)
        .outcomes
        .iter()
        .map(|o| o.assessed)
        .sum();
    ratio_or_one(got as u128, oracle_cost(mempool, st, caps, model).value)
}

/// Whether some subset of at most `N` transactions fills `G` exactly by
/// gas at `st`, and, when `by_estimate` is set, another by estimate.
pub fn is_congested(mempool: &[TxRef], st: &StateSnapshot, caps: Caps, by_estimate: bool) -> bool {
    if oracle_gas(mempool, st, caps).weight != caps.g.micro() {
        return false;
    }
    if !by_estimate {
        return true;
    }
    let ests: Vec<u64> = mempool.iter().map(|t| t.est.micro()).collect();
    knapsack::max_weight(&ests, caps.n, caps.g.micro()).weight == caps.g.micro()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Throughput {
    /// Gas units per round.
    pub per_round: Rational,
    /// Gas units per second of simulated time.
    pub per_second: Rational,
}

/// Executed gas per round, over every block the run executed.
pub fn throughput(run: &RunRecord) -> Result<Throughput, MetricsError> {
    if run.rounds == 0 {
        return Err(MetricsError::EmptyRun);
    }
    let total: u64 = run.executed().map(|(_, x)| x.gas_executed.micro()).sum();
    let per_round = Rational::new(total as i128, run.rounds as i128 * 1_000_000);
    let per_second = per_round * Rational::new(1000, run.clock.slot_ms().max(1) as i128);
    Ok(Throughput {
        per_round,
        per_second,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Latency {
    pub rounds: u64,
    pub ms: u64,
}

fn first_execution(run: &RunRecord) -> BTreeMap<TxId, (u64, u64, u64)> {
    // tx → (block round, exec round, completion ms) of the first block holding it
    let mut out = BTreeMap::new();
    for (e, x) in run.executed() {
        for id in &e.tx_ids {
            out.entry(*id).or_insert((e.round, x.exec_round, x.completion_ms));
        }
    }
    out
}

/// Latency of one transaction, from submission to execution of the first
/// block containing it.
pub fn tx_latency(run: &RunRecord, id: TxId) -> Result<Latency, MetricsError> {
    let (submit, _) = *run.submitted.get(&id).ok_or(MetricsError::TxNeverExecuted(id))?;
    let (_, exec_round, done_ms) = *first_execution(run)
        .get(&id)
        .ok_or(MetricsError::TxNeverExecuted(id))?;
    Ok(Latency {
        rounds: exec_round - submit,
        ms: done_ms - run.clock.submit_ms(submit),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MeanLatency {
    pub rounds: Rational,
    pub ms: Rational,
    pub count: u64,
}

/// Mean latency over executed transactions whose tag passes `keep`.
pub fn mean_latency(
    run: &RunRecord,
    keep: impl Fn(TxTag) -> bool,
) -> Result<MeanLatency, MetricsError> {
    if run.rounds == 0 {
        return Err(MetricsError::EmptyRun);
    }
    let first = first_execution(run);
    let (mut rounds, mut ms, mut count) = (0u128, 0u128, 0u64);
    for (id, &(submit, tag)) in &run.submitted {
        if !keep(tag) {
            continue;
        }
        if let Some(&(_, exec_round, done_ms)) = first.get(id) {
            rounds += (exec_round - submit) as u128;
            ms += (done_ms - run.clock.submit_ms(submit)) as u128;
            count += 1;
        }
    }
    if count == 0 {
        return Err(MetricsError::EmptyRun);
    }
    Ok(MeanLatency {
        rounds: Rational::new(rounds as i128, count as i128),
        ms: Rational::new(ms as i128, count as i128),
        count,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FairnessReport {
    pub rewards: Vec<u64>,
    /// Validators the verdict covers (never excluded during the run).
    pub considered: Vec<usize>,
    /// `ratios[i][j] = ρᵢ/ρⱼ` over considered validators; `None` is infinite.
    pub ratios: Vec<Vec<Option<Rational>>>,
    /// `max |ρᵢ/ρⱼ − 1|`; `None` is infinite.
    pub max_deviation: Option<Rational>,
    pub epsilon: Rational,
    pub fair: bool,
}

/// `ρᵢ/ρⱼ`, with `0/0 = 1` and `x/0 = ∞` for `x > 0`.
pub fn reward_ratio(ri: u64, rj: u64) -> Option<Rational> {
    match (ri, rj) {
        (0, 0) => Some(Rational::from_integer(1)),
        (_, 0) => None,
        _ => Some(Rational::new(ri as i128, rj as i128)),
    }
}

pub fn fairness_of(rewards: &[u64], considered: Vec<usize>, epsilon: Rational) -> FairnessReport {
    let one = Rational::from_integer(1);
    let mut max_dev = Some(Rational::from_integer(0));
    let ratios: Vec<Vec<Option<Rational>>> = considered
        .iter()
        .map(|&i| {
            considered
                .iter()
                .map(|&j| {
                    let r = reward_ratio(rewards[i], rewards[j]);
                    max_dev = match (max_dev, r) {
                        (Some(m), Some(r)) => {
                            let d = if r > one { r - one } else { one - r };
                            Some(m.max(d))
                        }
                        _ => None,
                    };
                    r
                })
                .collect()
        })
        .collect();
    let fair = max_dev.is_some_and(|d| d <= epsilon);
    FairnessReport {
        rewards: rewards.to_vec(),
        considered,
        ratios,
        max_deviation: max_dev,
        epsilon,
        fair,
    }
}

/// Reward fairness over the validators that stayed in the rotation.
pub fn fairness(run: &RunRecord, epsilon: Rational) -> FairnessReport {
    let considered = run
        .validators
        .iter()
        .enumerate()
        .filter(|(_, v)| v.excluded_at.is_none())
        .map(|(i, _)| i)
        .collect();
    fairness_of(&run.rewards(), considered, epsilon)
}

/// Default fairness tolerance, `0.05`.
pub fn default_epsilon() -> Rational {
    Rational::new(1, 20)
}

/// Full proposer rotations covered by the run.
pub fn rotations(run: &RunRecord) -> u64 {
    run.rounds / run.validators.len().max(1) as u64
}
