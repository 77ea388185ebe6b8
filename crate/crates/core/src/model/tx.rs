// Copyright (c) The Gaslight Contributors
// SPDX-License-Identifier: Apache-2.0

//! The transaction mini-language: a straight-line list of guarded steps.
//!
//! Each step optionally checks one cell against a constant. A step that is
//! reached always costs its `gas_cost`, whether or not the guard holds. A true
//! (or absent) guard applies the step's effects and moves on to the next step;
//! a false guard ends the program. This is the smallest language with
//! state-dependent gas: `[guard(x <= 100), gas 0] [gas 0.9]` is an early exit
//! when `x > 100` and an expensive path otherwise.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::gas::GasAmount;
use super::state::{AccountId, Address, STATE_SIZE};

/// Programs with more guarded steps than this are rejected by validation.
pub const MAX_GUARDS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Comparator {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl Comparator {
    pub fn eval(self, lhs: i64, rhs: i64) -> bool {
        match self {
            Comparator::Lt => lhs < rhs,
            Comparator::Le => lhs <= rhs,
            Comparator::Eq => lhs == rhs,
            Comparator::Ge => lhs >= rhs,
            Comparator::Gt => lhs > rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::Eq => "=",
            Comparator::Ge => ">=",
            Comparator::Gt => ">",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Guard {
    pub addr: Address,
    pub cmp: Comparator,
    pub value: i64,
}

impl Guard {
    pub fn new(addr: Address, cmp: Comparator, value: i64) -> Self {
        Guard { addr, cmp, value }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Effect {
    /// Overwrite a cell with a constant.
    WriteCell(Address, i64),
    /// Move up to `amount` from the sender's balance to `to`. The transfer
    /// never overdraws; it moves `min(amount, balance)`.
    Transfer { to: AccountId, amount: i64 },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Step {
    pub guard: Option<Guard>,
    pub effects: Vec<Effect>,
    pub gas_cost: GasAmount,
}

impl Step {
    pub fn plain(gas_cost: GasAmount, effects: Vec<Effect>) -> Self {
        Step {
            guard: None,
            effects,
            gas_cost,
        }
    }

    pub fn guarded(guard: Guard, gas_cost: GasAmount, effects: Vec<Effect>) -> Self {
        Step {
            guard: Some(guard),
            effects,
            gas_cost,
        }
    }
}

/// Unique transaction identifier. Generators pack `(round, source, seq)` so
/// ids are unique without shared counters and sort by submission round.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct TxId(pub u64);

impl TxId {
    pub const fn pack(round: u64, source: u8, seq: u32) -> TxId {
        TxId((round << 32) | ((source as u64) << 24) | (seq as u64 & 0x00FF_FFFF))
    }
}

impl fmt::Display for TxId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Bookkeeping label used by reports. Builders never look at it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TxTag {
    #[default]
    Honest,
    /// Gaslighting transaction: high estimate, state-dependent cheap exit.
    Junk,
    /// Flips the trigger cell that makes junk cheap.
    Setup,
    /// Transaction whose estimate equals its true gas, offered by the adversary.
    Decoy,
    /// Moves the adversary's whole balance away.
    Drain,
    /// Chargeable transaction sent from the drained account.
    DrainAttack,
}

impl TxTag {
    pub fn is_adversarial(self) -> bool {
        !matches!(self, TxTag::Honest)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TxTag::Honest => "honest",
            TxTag::Junk => "junk",
            TxTag::Setup => "setup",
            TxTag::Decoy => "decoy",
            TxTag::Drain => "drain",
            TxTag::DrainAttack => "drain-attack",
        }
    }

    pub fn parse(s: &str) -> Option<TxTag> {
        Some(match s {
            "honest" => TxTag::Honest,
            "junk" => TxTag::Junk,
            "setup" => TxTag::Setup,
            "decoy" => TxTag::Decoy,
            "drain" => TxTag::Drain,
            "drain-attack" => TxTag::DrainAttack,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub id: TxId,
    pub sender: AccountId,
    /// Currency units charged per micro-unit of gas.
    pub price: u64,
    pub est: GasAmount,
    pub steps: Vec<Step>,
    pub declared_reads: BTreeSet<Address>,
    pub declared_writes: BTreeSet<Address>,
    pub submit_round: u64,
    pub tag: TxTag,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TxError {
    #[error("transaction {0}: worst-case path gas {1} exceeds 1.0")]
    PathGasExceedsOne(TxId, GasAmount),
    #[error("transaction {0}: estimate {1} outside [0, 1]")]
    EstimateOutOfRange(TxId, GasAmount),
    #[error("transaction {0}: address {1} outside the state")]
    AddressOutOfBounds(TxId, Address),
    #[error("transaction {0}: {1} guarded steps exceeds the limit of {MAX_GUARDS}")]
    TooManyGuards(TxId, usize),
    #[error("transaction {0}: negative transfer amount {1}")]
    NegativeTransfer(TxId, i64),
}

impl Transaction {
    pub fn guard_count(&self) -> usize {
        self.steps.iter().filter(|s| s.guard.is_some()).count()
    }

    fn referenced_addresses(&self) -> impl Iterator<Item = Address> + '_ {
        let from_steps = self.steps.iter().flat_map(|s| {
            s.guard.map(|g| g.addr).into_iter().chain(s.effects.iter().map(|e| match e {
                Effect::WriteCell(a, _) => *a,
                Effect::Transfer { to, .. } => to.balance_cell(),
            }))
        });
        std::iter::once(self.sender.balance_cell())
            .chain(from_steps)
            .chain(self.declared_reads.iter().copied())
            .chain(self.declared_writes.iter().copied())
    }

    /// Checks every structural invariant; returns the first violation.
    pub fn validate(&self) -> Result<(), TxError> {
        if !self.est.is_normalized() {
            return Err(TxError::EstimateOutOfRange(self.id, self.est));
        }
        if let Some(a) = self.referenced_addresses().find(|a| a.0 >= STATE_SIZE) {
            return Err(TxError::AddressOutOfBounds(self.id, a));
        }
        for step in &self.steps {
            for e in &step.effects {
                if let Effect::Transfer { amount, .. } = e {
                    if *amount < 0 {
                        return Err(TxError::NegativeTransfer(self.id, *amount));
                    }
                }
            }
        }
        let guards = self.guard_count();
        if guards > MAX_GUARDS {
            return Err(TxError::TooManyGuards(self.id, guards));
        }
        let worst = self.worst_path_gas();
        if !worst.is_normalized() {
            return Err(TxError::PathGasExceedsOne(self.id, worst));
        }
        Ok(())
    }

    /// Maximum gas over every combination of guard outcomes.
    ///
    /// Explores both outcomes at each guarded step depth-first; a false
    /// outcome terminates that branch, so the walk visits `g + 1` leaves even
    /// though it ranges over all `2^g` outcome vectors.
    pub fn worst_path_gas(&self) -> GasAmount {
        fn walk(steps: &[Step], acc: u64, best: &mut u64) {
            let Some((first, rest)) = steps.split_first() else {
                *best = (*best).max(acc);
                return;
            };
            let acc = acc + first.gas_cost.micro();
            if first.guard.is_some() {
                // false outcome: program ends after paying for the guard
                *best = (*best).max(acc);
            }
            walk(rest, acc, best);
        }
        let mut best = 0;
        walk(&self.steps, 0, &mut best);
        GasAmount::from_micro(best)
    }
}
