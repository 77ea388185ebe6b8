// Copyright (c) The Gaslight Contributors
// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};

use super::gas::GasAmount;
use super::state::{Address, StateView};
use super::tx::{Effect, Transaction};

/// Result of walking a program against a state without committing anything.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathTrace {
    pub gas: GasAmount,
    /// Guard cells consulted on the taken path.
    pub guard_reads: BTreeSet<Address>,
    /// Steps whose effects apply (a prefix of the program).
    pub steps_applied: usize,
    /// Cells written by effects on the taken path, including both balance
    /// cells of every transfer.
    pub effect_writes: BTreeSet<Address>,
}

/// Actual read and write sets of one transaction under a concrete state.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AccessSets {
    pub reads: BTreeSet<Address>,
    pub writes: BTreeSet<Address>,
}

impl AccessSets {
    /// Read-write, write-read or write-write overlap.
    pub fn conflicts_with(&self, other: &AccessSets) -> bool {
        !self.writes.is_disjoint(&other.writes)
            || !self.writes.is_disjoint(&other.reads)
            || !self.reads.is_disjoint(&other.writes)
    }

    pub fn declared(tx: &Transaction) -> AccessSets {
        AccessSets {
            reads: tx.declared_reads.clone(),
            writes: tx.declared_writes.clone(),
        }
    }

    /// `self` covers `actual` when both of its sets are supersets.
    pub fn covers(&self, actual: &AccessSets) -> bool {
        self.reads.is_superset(&actual.reads) && self.writes.is_superset(&actual.writes)
    }
}

/// Program-local view: the transaction's own writes shadow the state.
struct Scratch<'a, V: StateView + ?Sized> {
    base: &'a V,
    own: BTreeMap<Address, i64>,
}

impl<V: StateView + ?Sized> Scratch<'_, V> {
    fn get(&self, a: Address) -> i64 {
        self.own.get(&a).copied().unwrap_or_else(|| self.base.get(a))
    }
}

/// Walks `tx` against `state`, applying effects to a private scratch map so
/// later guards observe earlier steps.
pub fn trace<V: StateView + ?Sized>(tx: &Transaction, state: &V) -> PathTrace {
    let mut scratch = Scratch {
        base: state,
        own: BTreeMap::new(),
    };
    let mut gas = GasAmount::ZERO;
    let mut guard_reads = BTreeSet::new();
    let mut effect_writes = BTreeSet::new();
    let mut steps_applied = 0;
    for step in &tx.steps {
        gas += step.gas_cost;
        if let Some(g) = step.guard {
            guard_reads.insert(g.addr);
            if !g.cmp.eval(scratch.get(g.addr), g.value) {
                break;
            }
        }
        for effect in &step.effects {
            match *effect {
                Effect::WriteCell(a, v) => {
                    scratch.own.insert(a, v);
                    effect_writes.insert(a);
                }
                Effect::Transfer { to, amount } => {
                    let from = tx.sender.balance_cell();
                    let to = to.balance_cell();
                    let moved = amount.min(scratch.get(from).max(0));
                    let from_after = scratch.get(from) - moved;
                    scratch.own.insert(from, from_after);
                    let to_after = scratch.get(to) + moved;
                    scratch.own.insert(to, to_after);
                    effect_writes.insert(from);
                    effect_writes.insert(to);
                }
            }
        }
        steps_applied += 1;
    }
    PathTrace {
        gas,
        guard_reads,
        steps_applied,
        effect_writes,
    }
}

/// Reads are the guards reached plus the sender's balance (charging reads
/// it); writes are the effect targets on the taken path plus the sender's
/// balance (charging writes it).
pub fn actual_access_sets<V: StateView + ?Sized>(tx: &Transaction, state: &V) -> AccessSets {
    let t = trace(tx, state);
    let sender = tx.sender.balance_cell();
    let mut reads = t.guard_reads;
    reads.insert(sender);
    let mut writes = t.effect_writes;
    writes.insert(sender);
    AccessSets { reads, writes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::state::{AccountId, StateSnapshot};
    use crate::model::tx::{Comparator, Guard, Step, TxId, TxTag};

    fn tx_with(steps: Vec<Step>) -> Transaction {
        Transaction {
            id: TxId(1),
            sender: AccountId(0),
            price: 1,
            est: GasAmount::ONE,
            steps,
            declared_reads: BTreeSet::new(),
            declared_writes: BTreeSet::new(),
            submit_round: 0,
            tag: TxTag::Honest,
        }
    }

    #[test]
    fn empty_program_touches_only_sender_balance() {
        let t = tx_with(vec![]);
        let s = actual_access_sets(&t, &StateSnapshot::new());
        assert_eq!(s.reads, BTreeSet::from([Address(0)]));
        assert_eq!(s.writes, BTreeSet::from([Address(0)]));
    }

    #[test]
    fn true_guard_reads_and_writes() {
        let g = Guard::new(Address(100), Comparator::Ge, 1);
        let t = tx_with(vec![Step::guarded(
            g,
            GasAmount::ZERO,
            vec![Effect::WriteCell(Address(200), 7)],
        )]);
        let st = StateSnapshot::with_cells([(Address(100), 1)]);
        let s = actual_access_sets(&t, &st);
        assert!(s.reads.contains(&Address(100)));
        assert!(s.writes.contains(&Address(200)));
    }

    #[test]
    fn false_guard_writes_only_sender() {
        // three cells: sender balance 0, guard cell 100, target 200
        let st = StateSnapshot::with_cells([(Address(0), 50), (Address(100), 0), (Address(200), 3)]);
        let g = Guard::new(Address(100), Comparator::Gt, 0);
        let t = tx_with(vec![Step::guarded(
            g,
            GasAmount::ZERO,
            vec![Effect::WriteCell(Address(200), 7)],
        )]);
        let s = actual_access_sets(&t, &st);
        assert_eq!(s.writes, BTreeSet::from([Address(0)]));
        assert_eq!(s.reads, BTreeSet::from([Address(0), Address(100)]));
    }

    #[test]
    fn later_guard_sees_earlier_write() {
        let t = tx_with(vec![
            Step::plain(GasAmount::ZERO, vec![Effect::WriteCell(Address(5), 9)]),
            Step::guarded(Guard::new(Address(5), Comparator::Eq, 9), GasAmount::from_micro(10), vec![]),
            Step::plain(GasAmount::from_micro(20), vec![]),
        ]);
        assert_eq!(trace(&t, &StateSnapshot::new()).gas.micro(), 30);
    }

    #[test]
    fn transfer_clamps_to_balance() {
        let st = StateSnapshot::with_cells([(Address(0), 30)]);
        let t = tx_with(vec![Step::plain(
            GasAmount::ZERO,
            vec![Effect::Transfer { to: AccountId(9), amount: 100 }],
        )]);
        let s = actual_access_sets(&t, &st);
        assert_eq!(s.writes, BTreeSet::from([Address(0), Address(9)]));
    }
}
