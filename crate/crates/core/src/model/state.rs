// Copyright (c) The Gaslight Contributors
// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Index of a state cell. Addresses below [`ACCOUNT_SPACE`] are account
/// balance cells (account `k` keeps its balance at address `k`); everything
/// above is data.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Address(pub u64);

/// Account identifier. Its balance lives at `Address(account.0)`.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct AccountId(pub u64);

/// First data address; `[0, ACCOUNT_SPACE)` are balance cells.
pub const ACCOUNT_SPACE: u64 = 1 << 40;

/// Exclusive upper bound on any address a transaction may reference.
pub const STATE_SIZE: u64 = 1 << 42;

impl AccountId {
    pub const fn balance_cell(self) -> Address {
        Address(self.0)
    }
}

impl Address {
    pub const fn data(offset: u64) -> Address {
        Address(ACCOUNT_SPACE + offset)
    }

    pub const fn is_balance(self) -> bool {
        self.0 < ACCOUNT_SPACE
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for AccountId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Read access to cell values. Missing cells read as zero.
pub trait StateView {
    fn get(&self, addr: Address) -> i64;

    fn balance(&self, account: AccountId) -> i64 {
        self.get(account.balance_cell())
    }
}

/// Complete ledger state after some prefix of blocks has executed.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateSnapshot {
    cells: BTreeMap<Address, i64>,
    /// Round whose execution produced this state (0 for genesis).
    pub settled_round: u64,
}

impl StateSnapshot {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_cells<I: IntoIterator<Item = (Address, i64)>>(cells: I) -> Self {
        let mut s = Self::new();
        for (a, v) in cells {
            s.set(a, v);
        }
        s
    }

    pub fn set(&mut self, addr: Address, value: i64) {
        if value == 0 {
            self.cells.remove(&addr);
        } else {
            self.cells.insert(addr, value);
        }
    }

    pub fn cells(&self) -> impl Iterator<Item = (Address, i64)> + '_ {
        self.cells.iter().map(|(a, v)| (*a, *v))
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn apply(&mut self, delta: &BTreeMap<Address, i64>) {
        for (a, v) in delta {
            self.set(*a, *v);
        }
    }
}

impl StateView for StateSnapshot {
    fn get(&self, addr: Address) -> i64 {
        self.cells.get(&addr).copied().unwrap_or(0)
    }
}

/// Copy-on-write view over a base snapshot. Writes stay in the overlay until
/// [`Overlay::into_delta`] hands them back.
#[derive(Clone, Debug)]
pub struct Overlay<'a> {
    base: &'a StateSnapshot,
    delta: BTreeMap<Address, i64>,
}

impl<'a> Overlay<'a> {
    pub fn new(base: &'a StateSnapshot) -> Self {
        Overlay {
            base,
            delta: BTreeMap::new(),
        }
    }

    pub fn set(&mut self, addr: Address, value: i64) {
        self.delta.insert(addr, value);
    }

    pub fn delta(&self) -> &BTreeMap<Address, i64> {
        &self.delta
    }

    pub fn into_delta(self) -> BTreeMap<Address, i64> {
        self.delta
    }

    /// Materializes base plus overlay as a new snapshot.
    pub fn to_snapshot(&self) -> StateSnapshot {
        let mut s = self.base.clone();
        s.apply(&self.delta);
        s
    }
}

impl StateView for Overlay<'_> {
    fn get(&self, addr: Address) -> i64 {
        match self.delta.get(&addr) {
            Some(v) => *v,
            None => self.base.get(addr),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_cells_are_not_stored() {
        let mut s = StateSnapshot::new();
        s.set(Address(3), 5);
        s.set(Address(3), 0);
        assert!(s.is_empty());
        assert_eq!(s.get(Address(3)), 0);
    }

    #[test]
    fn overlay_shadows_base() {
        let base = StateSnapshot::with_cells([(Address(1), 10)]);
        let mut o = Overlay::new(&base);
        o.set(Address(1), 4);
        o.set(Address(2), 9);
        assert_eq!(o.get(Address(1)), 4);
        assert_eq!(base.get(Address(1)), 10);
        let snap = o.to_snapshot();
        assert_eq!(snap.get(Address(2)), 9);
    }
}
