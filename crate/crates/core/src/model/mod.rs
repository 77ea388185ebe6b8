// Copyright (c) The Gaslight Contributors
// SPDX-License-Identifier: Apache-2.0

//! Domain types shared by every other module.

mod access;
mod gas;
mod state;
pub mod text;
mod tx;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

pub use access::{actual_access_sets, trace, AccessSets, PathTrace};
pub use gas::{GasAmount, MICRO_PER_UNIT};
pub use state::{
    AccountId, Address, Overlay, StateSnapshot, StateView, ACCOUNT_SPACE, STATE_SIZE,
};
pub use tx::{
    Comparator, Effect, Guard, Step, Transaction, TxError, TxId, TxTag, MAX_GUARDS,
};

pub type TxRef = Arc<Transaction>;

/// Ordered list of transactions agreed on for one round.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Block {
    pub round: u64,
    pub proposer: usize,
    pub txs: Vec<TxRef>,
    /// Per-transaction write sets announced by the proposer. Empty outside
    /// partial coupling; otherwise parallel to `txs`.
    pub declared_writes: Vec<BTreeSet<Address>>,
    pub declared_write_union: BTreeSet<Address>,
}

impl Block {
    pub fn new(round: u64, proposer: usize, txs: Vec<TxRef>) -> Self {
        Block {
            round,
            proposer,
            txs,
            ..Block::default()
        }
    }

    pub fn len(&self) -> usize {
        self.txs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.txs.is_empty()
    }

    pub fn est_total(&self) -> GasAmount {
        self.txs.iter().map(|t| t.est).sum()
    }

    pub fn has_declarations(&self) -> bool {
        !self.declared_writes.is_empty()
    }

    /// Installs per-transaction write declarations and recomputes the union.
    pub fn set_declarations(&mut self, writes: Vec<BTreeSet<Address>>) {
        debug_assert_eq!(writes.len(), self.txs.len());
        self.declared_write_union = writes.iter().flatten().copied().collect();
        self.declared_writes = writes;
    }
}

/// Pending transactions keyed by id.
#[derive(Clone, Debug, Default)]
pub struct Mempool {
    pending: BTreeMap<TxId, TxRef>,
}

impl Mempool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_txs<I: IntoIterator<Item = TxRef>>(txs: I) -> Self {
        let mut m = Self::new();
        m.extend(txs);
        m
    }

    pub fn extend<I: IntoIterator<Item = TxRef>>(&mut self, txs: I) {
        for t in txs {
            self.pending.insert(t.id, t);
        }
    }

    /// `M \ b`.
    pub fn remove_block(&mut self, block: &Block) {
        for t in &block.txs {
            self.pending.remove(&t.id);
        }
    }

    pub fn contains(&self, id: TxId) -> bool {
        self.pending.contains_key(&id)
    }

    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }

    /// Transactions in ascending id order.
    pub fn iter(&self) -> impl Iterator<Item = &TxRef> + '_ {
        self.pending.values()
    }

    pub fn snapshot(&self) -> Vec<TxRef> {
        self.pending.values().cloned().collect()
    }
}
