// Copyright (c) The Gaslight Contributors
// SPDX-License-Identifier: Apache-2.0

//! Block creation for the three integration modes.
//!
//! * The coupled builder sees the settled state and solves a knapsack over
//!   true gas.
//! * The decoupled builder sees only the mempool and packs by estimate.
//! * The partial builder sees an older settled state plus the write union of
//!   blocks still waiting for execution, and only admits transactions whose
//!   declared reads avoid that union.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{cost, execute_tx, CostModel};
use crate::knapsack;
use crate::model::{
    actual_access_sets, trace, AccessSets, Address, Block, GasAmount, StateSnapshot, StateView,
    TxRef,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Coupled,
    Decoupled,
    Partial,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Coupled => "coupled",
            Mode::Decoupled => "decoupled",
            Mode::Partial => "partial",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BuilderKind {
    Knapsack,
    GreedyEst,
    Partial,
}

impl BuilderKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BuilderKind::Knapsack => "knapsack",
            BuilderKind::GreedyEst => "greedy-est",
            BuilderKind::Partial => "partial",
        }
    }

    /// Whether this builder may run under `mode`.
    pub fn allowed_in(self, mode: Mode) -> bool {
        matches!(
            (mode, self),
            (Mode::Coupled, BuilderKind::Knapsack | BuilderKind::GreedyEst)
                | (Mode::Decoupled, BuilderKind::GreedyEst)
                | (Mode::Partial, BuilderKind::Partial)
        )
    }
}

/// Per-block caps: at most `n` transactions and `g` total gas.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Caps {
    pub n: usize,
    pub g: GasAmount,
}

impl Caps {
    /// `min(⌊G⌋, |M|)`.
    pub fn non_trivial_floor(&self, mempool_len: usize) -> usize {
        (self.g.whole_units() as usize).min(mempool_len)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BuildContext<'a> {
    pub round: u64,
    pub proposer: usize,
    /// Pending transactions in ascending id order.
    pub mempool: &'a [TxRef],
    pub mode: Mode,
    /// Settled state the builder may read; `None` in decoupled mode.
    pub state: Option<&'a StateSnapshot>,
    /// Declared write union of finalized but unexecuted blocks.
    pub pending_writes: &'a BTreeSet<Address>,
    pub caps: Caps,
    pub cost_model: CostModel,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BuildFlag {
    MempoolEmpty,
    NoIndependentTransactions,
    /// The gas cap left fewer transactions than `min(⌊G⌋, |M|)`.
    NonTrivialityViolated { required: usize, got: usize },
}

#[derive(Clone, Debug)]
pub struct Built {
    pub block: Block,
    pub flags: Vec<BuildFlag>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum BuildError {
    #[error("builder {builder} cannot run in {mode} mode")]
    WrongMode {
        builder: &'static str,
        mode: &'static str,
    },
    #[error("builder needs a settled state")]
    MissingState,
}

fn finish(ctx: &BuildContext<'_>, block: Block, mut flags: Vec<BuildFlag>) -> Built {
    if ctx.mempool.is_empty() {
        flags.push(BuildFlag::MempoolEmpty);
    }
    let required = ctx.caps.non_trivial_floor(ctx.mempool.len());
    if block.len() < required {
        flags.push(BuildFlag::NonTrivialityViolated {
            required,
            got: block.len(),
        });
    }
    Built { block, flags }
}

/// Dispatches on `kind`, checking that it matches the mode.
pub fn build(kind: BuilderKind, ctx: &BuildContext<'_>) -> Result<Built, BuildError> {
    if !kind.allowed_in(ctx.mode) {
        return Err(BuildError::WrongMode {
            builder: kind.as_str(),
            mode: ctx.mode.as_str(),
        });
    }
    match kind {
        BuilderKind::Knapsack => build_coupled_knapsack(ctx),
        BuilderKind::GreedyEst => Ok(build_decoupled(ctx)),
        BuilderKind::Partial => build_partial(ctx),
    }
}

/// True when `tx` runs to completion at `st` and its sender can pay.
fn admissible<V: StateView + ?Sized>(tx: &TxRef, st: &V, model: CostModel) -> bool {
    let gas = trace(tx, st).gas;
    gas <= tx.est && (cost(tx, st, model) as i128) <= st.balance(tx.sender).max(0) as i128
}

/// Knapsack over `candidates` by gas at `st`, padded with zero-gas
/// candidates up to the non-triviality floor. Result is in id order.
fn knapsack_select(candidates: &[TxRef], gas: &[GasAmount], ctx: &BuildContext<'_>) -> Vec<TxRef> {
    let weights: Vec<u64> = gas.iter().map(|g| g.micro()).collect();
    let sel = knapsack::max_weight(&weights, ctx.caps.n, ctx.caps.g.micro());
    let mut chosen: BTreeSet<usize> = sel.chosen.into_iter().collect();
    let floor = ctx.caps.non_trivial_floor(ctx.mempool.len()).min(ctx.caps.n);
    for (i, g) in gas.iter().enumerate() {
        if chosen.len() >= floor {
            break;
        }
        if *g == GasAmount::ZERO {
            chosen.insert(i);
        }
    }
    chosen.into_iter().map(|i| candidates[i].clone()).collect()
}

/// Executes `txs` in order on a scratch copy of `st` and returns the positions
/// whose in-block behavior differs from what the builder assumed: a changed
/// gas figure, an abort, a charge that cannot be collected, or (when
/// `check_declared`) accesses outside the declared sets. Also returns each
/// transaction's in-context write set.
fn verify_in_context(
    txs: &[TxRef],
    expected_gas: &[GasAmount],
    st: &StateSnapshot,
    model: CostModel,
    check_declared: bool,
) -> (Vec<usize>, Vec<BTreeSet<Address>>) {
    let mut cur = st.clone();
    let mut bad = Vec::new();
    let mut writes = Vec::with_capacity(txs.len());
    for (k, tx) in txs.iter().enumerate() {
        let access = actual_access_sets(tx, &cur);
        let o = execute_tx(tx, &cur, model);
        let declared_ok = !check_declared || AccessSets::declared(tx).covers(&access);
        if !o.is_executed() || o.uncollected > 0 || o.gas_consumed != expected_gas[k] || !declared_ok
        {
            bad.push(k);
        }
        cur.apply(&o.writes);
        writes.push(access.writes);
    }
    (bad, writes)
}

/// Shared loop for the two state-aware builders: select, verify in context,
/// drop offenders, repeat until the selection is stable.
fn select_verified(
    mut candidates: Vec<TxRef>,
    st: &StateSnapshot,
    ctx: &BuildContext<'_>,
    check_declared: bool,
) -> (Vec<TxRef>, Vec<BTreeSet<Address>>) {
    loop {
        let gas: Vec<GasAmount> = candidates.iter().map(|t| trace(t, st).gas).collect();
        let picked = knapsack_select(&candidates, &gas, ctx);
        let expected: Vec<GasAmount> = picked.iter().map(|t| trace(t, st).gas).collect();
        let (bad, writes) = verify_in_context(&picked, &expected, st, ctx.cost_model, check_declared);
        if bad.is_empty() {
            return (picked, writes);
        }
        let drop: BTreeSet<_> = bad.iter().map(|&k| picked[k].id).collect();
        candidates.retain(|t| !drop.contains(&t.id));
    }
}

/// State-aware builder: maximizes `Σ gas(tx, st_i)` under both caps.
///
/// Transactions that would abort or could not pay at `st_i` are never
/// proposed, and a selection whose members interfere with each other is
/// re-solved without the offenders.
pub fn build_coupled_knapsack(ctx: &BuildContext<'_>) -> Result<Built, BuildError> {
    if ctx.mode != Mode::Coupled {
        return Err(BuildError::WrongMode {
            builder: BuilderKind::Knapsack.as_str(),
            mode: ctx.mode.as_str(),
        });
    }
    let st = ctx.state.ok_or(BuildError::MissingState)?;
    let candidates: Vec<TxRef> = ctx
        .mempool
        .iter()
        .filter(|t| admissible(t, st, ctx.cost_model))
        .cloned()
        .collect();
    let (txs, _) = select_verified(candidates, st, ctx, false);
    Ok(finish(ctx, Block::new(ctx.round, ctx.proposer, txs), Vec::new()))
}

/// State-oblivious builder: orders by (price desc, est desc, id asc) and
/// adds every transaction that still fits both caps.
pub fn build_decoupled(ctx: &BuildContext<'_>) -> Built {
    let mut order: Vec<&TxRef> = ctx.mempool.iter().collect();
    order.sort_by(|a, b| {
        b.price
            .cmp(&a.price)
            .then(b.est.cmp(&a.est))
            .then(a.id.cmp(&b.id))
    });
    let mut txs = Vec::new();
    let mut total = GasAmount::ZERO;
    for tx in order {
        if txs.len() == ctx.caps.n {
            break;
        }
        if total + tx.est <= ctx.caps.g {
            total += tx.est;
            txs.push(tx.clone());
        }
    }
    finish(ctx, Block::new(ctx.round, ctx.proposer, txs), Vec::new())
}

/// Conflict-aware builder for partial coupling.
///
/// Candidates declare no read inside the pending write union and their
/// declarations cover their actual accesses at `st_t`. Because none of them
/// reads pending state, their gas at `st_t` is their true execution gas, so
/// the knapsack runs on exact values. The block records each transaction's
/// in-context write set.
pub fn build_partial(ctx: &BuildContext<'_>) -> Result<Built, BuildError> {
    if ctx.mode != Mode::Partial {
        return Err(BuildError::WrongMode {
            builder: BuilderKind::Partial.as_str(),
            mode: ctx.mode.as_str(),
        });
    }
    let st = ctx.state.ok_or(BuildError::MissingState)?;
    let candidates: Vec<TxRef> = ctx
        .mempool
        .iter()
        .filter(|t| t.declared_reads.is_disjoint(ctx.pending_writes))
        .filter(|t| AccessSets::declared(t).covers(&actual_access_sets(t, st)))
        .filter(|t| admissible(t, st, ctx.cost_model))
        .cloned()
        .collect();
    let mut flags = Vec::new();
    if candidates.is_empty() && !ctx.mempool.is_empty() {
        flags.push(BuildFlag::NoIndependentTransactions);
    }
    let (txs, writes) = select_verified(candidates, st, ctx, true);
    let mut block = Block::new(ctx.round, ctx.proposer, txs);
    block.set_declarations(writes);
    Ok(finish(ctx, block, flags))
}

fn declared_sets(b: &Block, k: usize) -> AccessSets {
    let tx = &b.txs[k];
    AccessSets {
        reads: tx.declared_reads.clone(),
        writes: if b.has_declarations() {
            b.declared_writes[k].clone()
        } else {
            tx.declared_writes.clone()
        },
    }
}

/// Moves transactions whose writes are in demand toward the front.
///
/// Demand is the number of mempool transactions that declare a read on a
/// cell the transaction writes. Neighbors swap only when the later one has
/// strictly higher demand and the two are access-disjoint, so conflicting
/// pairs keep their order and the executed result is unchanged.
pub fn reorder_hot(b: &Block, mempool: &[TxRef]) -> Block {
    let n = b.len();
    let sets: Vec<AccessSets> = (0..n).map(|k| declared_sets(b, k)).collect();
    let score: Vec<usize> = sets
        .iter()
        .map(|s| {
            mempool
                .iter()
                .filter(|m| !m.declared_reads.is_disjoint(&s.writes))
                .count()
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    let mut swapped = true;
    while swapped {
        swapped = false;
        for p in 1..n {
            let (a, c) = (order[p - 1], order[p]);
            if score[c] > score[a] && !sets[a].conflicts_with(&sets[c]) {
                order.swap(p - 1, p);
                swapped = true;
            }
        }
    }
    let mut out = Block::new(b.round, b.proposer, order.iter().map(|&k| b.txs[k].clone()).collect());
    if b.has_declarations() {
        out.set_declarations(order.iter().map(|&k| b.declared_writes[k].clone()).collect());
    }
    out
}
