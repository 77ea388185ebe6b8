// Copyright (c) The Gaslight Contributors
// SPDX-License-Identifier: Apache-2.0

//! Deterministic execution: gas metering, abort with rollback, and charging.
//!
//! A transaction runs against the state left by everything before it in the
//! block. If its path gas fits in the estimate, the charge is debited from the
//! sender and the effects apply. Otherwise the transaction burns its whole
//! estimate, the sender is charged for the burn, and no effect applies.
//! Charges that exceed the sender's balance are collected down to zero and
//! the remainder is booked as uncollected. Collected charges are credited to
//! the proposer's account.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{
    actual_access_sets, trace, AccountId, Address, Block, Effect, GasAmount, Overlay,
    StateSnapshot, StateView, Transaction, TxId, TxTag,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum CostModel {
    /// `c_base + price * gas(tx, st)`.
    Current { c_base: u64 },
    /// `c_base + price * Est(tx)` regardless of the gas actually used.
    FullEstimate { c_base: u64 },
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel::Current { c_base: 0 }
    }
}

impl CostModel {
    pub fn c_base(self) -> u64 {
        match self {
            CostModel::Current { c_base } | CostModel::FullEstimate { c_base } => c_base,
        }
    }

    /// Charge for a transaction whose path gas under the pre-state is `gas`.
    pub fn charge(self, tx: &Transaction, gas: GasAmount) -> u64 {
        match self {
            CostModel::Current { c_base } => c_base + tx.price * gas.micro(),
            CostModel::FullEstimate { c_base } => c_base + tx.price * tx.est.micro(),
        }
    }

    /// Charge for an aborted transaction, which burns its whole estimate.
    pub fn burn_charge(self, tx: &Transaction) -> u64 {
        self.c_base() + tx.price * tx.est.micro()
    }
}

/// `gas(tx, st)`: path gas under `st`, independent of the estimate.
pub fn gas_actual<V: StateView + ?Sized>(tx: &Transaction, st: &V) -> GasAmount {
    trace(tx, st).gas
}

/// `cost(tx, st)` under the given model.
pub fn cost<V: StateView + ?Sized>(tx: &Transaction, st: &V, model: CostModel) -> u64 {
    match model {
        CostModel::Current { .. } => model.charge(tx, gas_actual(tx, st)),
        CostModel::FullEstimate { .. } => model.charge(tx, GasAmount::ZERO),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExecStatus {
    Executed,
    Aborted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AbortReason {
    OutOfGas,
    /// Actual accesses disagreed with the proposer's declaration.
    AccessMismatch,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExecOutcome {
    pub tx_id: TxId,
    pub sender: AccountId,
    pub tag: TxTag,
    pub status: ExecStatus,
    pub abort_reason: Option<AbortReason>,
    /// Path gas under the pre-state.
    pub gas_actual: GasAmount,
    pub gas_consumed: GasAmount,
    /// Amount owed under the cost model.
    pub assessed: u64,
    /// Amount actually debited from the sender.
    pub charged: u64,
    pub uncollected: u64,
    /// Final values of every cell this transaction changed, charge included.
    pub writes: BTreeMap<Address, i64>,
}

impl ExecOutcome {
    pub fn is_executed(&self) -> bool {
        self.status == ExecStatus::Executed
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ExecOptions {
    /// Abort transactions whose actual accesses disagree with the block's
    /// per-transaction write declarations (partial coupling).
    pub verify_declarations: bool,
}

fn set_tracked(ov: &mut Overlay<'_>, writes: &mut BTreeMap<Address, i64>, a: Address, v: i64) {
    ov.set(a, v);
    writes.insert(a, v);
}

/// Debits up to `assessed` from the sender; returns `(collected, uncollected)`.
fn collect(
    ov: &mut Overlay<'_>,
    writes: &mut BTreeMap<Address, i64>,
    sender: AccountId,
    assessed: u64,
) -> (u64, u64) {
    if assessed == 0 {
        return (0, 0);
    }
    let bal = ov.balance(sender).max(0) as u64;
    let collected = assessed.min(bal);
    let cell = sender.balance_cell();
    let after = ov.get(cell) - collected as i64;
    set_tracked(ov, writes, cell, after);
    (collected, assessed - collected)
}

fn apply_tx(
    tx: &Transaction,
    ov: &mut Overlay<'_>,
    model: CostModel,
    declared_writes: Option<&std::collections::BTreeSet<Address>>,
) -> ExecOutcome {
    let path = trace(tx, &*ov);
    let mut writes = BTreeMap::new();

    if let Some(declared) = declared_writes {
        let actual = actual_access_sets(tx, &*ov);
        if &actual.writes != declared || !actual.reads.is_subset(&tx.declared_reads) {
            return ExecOutcome {
                tx_id: tx.id,
                sender: tx.sender,
                tag: tx.tag,
                status: ExecStatus::Aborted,
                abort_reason: Some(AbortReason::AccessMismatch),
                gas_actual: path.gas,
                gas_consumed: tx.est,
                assessed: 0,
                charged: 0,
                uncollected: 0,
                writes,
            };
        }
    }

    if path.gas > tx.est {
        let assessed = model.burn_charge(tx);
        let (charged, uncollected) = collect(ov, &mut writes, tx.sender, assessed);
        return ExecOutcome {
            tx_id: tx.id,
            sender: tx.sender,
            tag: tx.tag,
            status: ExecStatus::Aborted,
            abort_reason: Some(AbortReason::OutOfGas),
            gas_actual: path.gas,
            gas_consumed: tx.est,
            assessed,
            charged,
            uncollected,
            writes,
        };
    }

    let assessed = model.charge(tx, path.gas);
    let (charged, uncollected) = collect(ov, &mut writes, tx.sender, assessed);
    for step in &tx.steps[..path.steps_applied] {
        for effect in &step.effects {
            match *effect {
                Effect::WriteCell(a, v) => set_tracked(ov, &mut writes, a, v),
                Effect::Transfer { to, amount } => {
                    let from = tx.sender.balance_cell();
                    let moved = amount.min(ov.get(from).max(0));
                    let from_after = ov.get(from) - moved;
                    set_tracked(ov, &mut writes, from, from_after);
                    let to_after = ov.get(to.balance_cell()) + moved;
                    set_tracked(ov, &mut writes, to.balance_cell(), to_after);
                }
            }
        }
    }
    ExecOutcome {
        tx_id: tx.id,
        sender: tx.sender,
        tag: tx.tag,
        status: ExecStatus::Executed,
        abort_reason: None,
        gas_actual: path.gas,
        gas_consumed: path.gas,
        assessed,
        charged,
        uncollected,
        writes,
    }
}

/// Executes a single transaction against `st`. The outcome's `writes` hold
/// the resulting state delta; no proposer is credited.
pub fn execute_tx(tx: &Transaction, st: &StateSnapshot, model: CostModel) -> ExecOutcome {
    let mut ov = Overlay::new(st);
    apply_tx(tx, &mut ov, model, None)
}

/// Block execution result with totals.
#[derive(Clone, Debug)]
pub struct BlockExecution {
    pub state: StateSnapshot,
    pub outcomes: Vec<ExecOutcome>,
}

impl BlockExecution {
    /// Σ gas of executed transactions (aborted ones excluded).
    pub fn gas_executed(&self) -> GasAmount {
        self.outcomes
            .iter()
            .filter(|o| o.is_executed())
            .map(|o| o.gas_consumed)
            .sum()
    }

    /// Σ gas consumed, including estimates burned by aborts.
    pub fn gas_burned(&self) -> GasAmount {
        self.outcomes.iter().map(|o| o.gas_consumed).sum()
    }

    pub fn collected(&self) -> u64 {
        self.outcomes.iter().map(|o| o.charged).sum()
    }

    pub fn uncollected(&self) -> u64 {
        self.outcomes.iter().map(|o| o.uncollected).sum()
    }

    pub fn assessed(&self) -> u64 {
        self.outcomes.iter().map(|o| o.assessed).sum()
    }
}

/// Executes `b` in order against `st`, crediting collected charges to the
/// proposer's account (`AccountId(b.proposer)`).
pub fn execute_block(b: &Block, st: &StateSnapshot, model: CostModel) -> BlockExecution {
    execute_block_with(b, st, model, ExecOptions::default())
}

pub fn execute_block_with(
    b: &Block,
    st: &StateSnapshot,
    model: CostModel,
    opts: ExecOptions,
) -> BlockExecution {
    let mut ov = Overlay::new(st);
    let reward_cell = AccountId(b.proposer as u64).balance_cell();
    let verify = opts.verify_declarations && b.has_declarations();
    let mut outcomes = Vec::with_capacity(b.txs.len());
    for (k, tx) in b.txs.iter().enumerate() {
        let declared = verify.then(|| &b.declared_writes[k]);
        let outcome = apply_tx(tx, &mut ov, model, declared);
        if outcome.charged > 0 {
            let credited = ov.get(reward_cell) + outcome.charged as i64;
            ov.set(reward_cell, credited);
        }
        outcomes.push(outcome);
    }
    let mut state = ov.to_snapshot();
    state.settled_round = b.round;
    BlockExecution { state, outcomes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Comparator, Guard, Step};
    use std::collections::BTreeSet;
    use std::sync::Arc;

    fn tx(id: u64, sender: u64, price: u64, est: u64, steps: Vec<Step>) -> Transaction {
        Transaction {
            id: TxId(id),
            sender: AccountId(sender),
            price,
            est: GasAmount::from_micro(est),
            steps,
            declared_reads: BTreeSet::new(),
            declared_writes: BTreeSet::new(),
            submit_round: 0,
            tag: TxTag::Honest,
        }
    }

    fn g(micro: u64) -> GasAmount {
        GasAmount::from_micro(micro)
    }

    const X: Address = Address::data(0);

    fn cheap_or_expensive() -> Vec<Step> {
        // if x > 100 { cheap exit } else { expensive }
        vec![
            Step::guarded(Guard::new(X, Comparator::Le, 100), GasAmount::ZERO, vec![]),
            Step::plain(g(900_000), vec![]),
        ]
    }

    #[test]
    fn gas_follows_guard() {
        let t = tx(1, 10, 1, 1_000_000, cheap_or_expensive());
        let hi = StateSnapshot::with_cells([(X, 101)]);
        let lo = StateSnapshot::with_cells([(X, 100)]);
        assert_eq!(gas_actual(&t, &hi), GasAmount::ZERO);
        assert_eq!(gas_actual(&t, &lo).micro(), 900_000);
        assert_eq!(gas_actual(&tx(2, 10, 1, 0, vec![]), &hi), GasAmount::ZERO);
        let three = vec![Step::plain(g(100_000), vec![]); 3];
        assert_eq!(gas_actual(&tx(3, 10, 1, 0, three), &hi).micro(), 300_000);
    }

    #[test]
    fn cost_formulas() {
        let st = StateSnapshot::new();
        let zero = tx(1, 10, 3, 1_000_000, vec![]);
        assert_eq!(cost(&zero, &st, CostModel::Current { c_base: 0 }), 0);
        let half = tx(2, 10, 2, 1_000_000, vec![Step::plain(g(500_000), vec![])]);
        assert_eq!(cost(&half, &st, CostModel::Current { c_base: 0 }), 1_000_000);
        let full = tx(3, 10, 2, 1_000_000, vec![]);
        assert_eq!(cost(&full, &st, CostModel::FullEstimate { c_base: 0 }), 2_000_000);
    }

    #[test]
    fn zero_gas_path_charges_nothing() {
        let t = tx(1, 10, 5, 1_000_000, cheap_or_expensive());
        let st = StateSnapshot::with_cells([(X, 101), (Address(10), 1_000)]);
        let o = execute_tx(&t, &st, CostModel::default());
        assert_eq!(o.status, ExecStatus::Executed);
        assert_eq!(o.charged, 0);
    }

    #[test]
    fn over_estimate_aborts_and_rolls_back() {
        let t = tx(
            1,
            10,
            0,
            300_000,
            vec![Step::plain(g(400_000), vec![Effect::WriteCell(Address::data(5), 1)])],
        );
        let st = StateSnapshot::with_cells([(Address(10), 100)]);
        let o = execute_tx(&t, &st, CostModel::default());
        assert_eq!(o.status, ExecStatus::Aborted);
        assert_eq!(o.gas_consumed.micro(), 300_000);
        assert!(o.writes.is_empty());
    }

    #[test]
    fn short_balance_is_partially_collected() {
        // one account, balance 10, charge 25
        let t = tx(1, 10, 25, 1, vec![Step::plain(g(1), vec![])]);
        let st = StateSnapshot::with_cells([(Address(10), 10)]);
        let o = execute_tx(&t, &st, CostModel::default());
        assert_eq!((o.charged, o.uncollected), (10, 15));
        assert_eq!(o.writes.get(&Address(10)), Some(&0));
    }

    #[test]
    fn block_order_matters_and_credits_proposer() {
        // t1 writes x = 5; t2 takes the expensive path iff x = 5
        let t1 = tx(1, 10, 1, 0, vec![Step::plain(GasAmount::ZERO, vec![Effect::WriteCell(X, 5)])]);
        let t2 = tx(
            2,
            11,
            1,
            1_000_000,
            vec![
                Step::guarded(Guard::new(X, Comparator::Eq, 5), GasAmount::ZERO, vec![]),
                Step::plain(g(700_000), vec![]),
            ],
        );
        let st = StateSnapshot::with_cells([(Address(11), 1_000_000)]);
        let b = Block::new(1, 3, vec![Arc::new(t1), Arc::new(t2)]);
        let ex = execute_block(&b, &st, CostModel::default());
        assert_eq!(ex.outcomes[1].gas_consumed.micro(), 700_000);
        assert_eq!(ex.state.get(Address(3)), 700_000);
        assert_eq!(ex.state.get(Address(11)), 300_000);
    }

    #[test]
    fn empty_block_is_identity() {
        let st = StateSnapshot::with_cells([(Address(1), 1)]);
        let ex = execute_block(&Block::new(4, 0, vec![]), &st, CostModel::default());
        assert!(ex.outcomes.is_empty());
        assert_eq!(ex.state.get(Address(1)), 1);
    }

    #[test]
    fn ten_tenths_fill_one_unit() {
        let txs = (0..10)
            .map(|i| Arc::new(tx(i, 100 + i, 1, 100_000, vec![Step::plain(g(100_000), vec![])])))
            .collect();
        let ex = execute_block(&Block::new(1, 0, txs), &StateSnapshot::new(), CostModel::default());
        assert_eq!(ex.gas_burned(), GasAmount::ONE);
        assert_eq!(ex.gas_executed(), GasAmount::ONE);
    }

    #[test]
    fn drain_pays_its_gas_before_emptying() {
        let drain = tx(
            1,
            10,
            2,
            100,
            vec![Step::plain(g(100), vec![Effect::Transfer { to: AccountId(11), amount: 1_000 }])],
        );
        let st = StateSnapshot::with_cells([(Address(10), 1_000)]);
        let b = Block::new(1, 2, vec![Arc::new(drain)]);
        let ex = execute_block(&b, &st, CostModel::FullEstimate { c_base: 0 });
        assert_eq!(ex.state.get(Address(10)), 0);
        assert_eq!(ex.state.get(Address(2)), 200);
        assert_eq!(ex.state.get(Address(11)), 800);
    }

    #[test]
    fn mismatched_declaration_aborts_without_charge() {
        let t = tx(1, 10, 1, 1_000, vec![Step::plain(g(1_000), vec![Effect::WriteCell(X, 1)])]);
        let st = StateSnapshot::with_cells([(Address(10), 10_000)]);
        let mut b = Block::new(1, 0, vec![Arc::new(t)]);
        b.set_declarations(vec![BTreeSet::from([Address(10)])]);
        let opts = ExecOptions { verify_declarations: true };
        let ex = execute_block_with(&b, &st, CostModel::default(), opts);
        assert_eq!(ex.outcomes[0].abort_reason, Some(AbortReason::AccessMismatch));
        assert_eq!(ex.state, st.clone().tap_round(1));
    }

    trait TapRound {
        fn tap_round(self, r: u64) -> Self;
    }
    impl TapRound for StateSnapshot {
        fn tap_round(mut self, r: u64) -> Self {
            self.settled_round = r;
            self
        }
    }
}
