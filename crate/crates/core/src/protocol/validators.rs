// Copyright (c) The Gaslight Contributors
// SPDX-License-Identifier: Apache-2.0

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValidatorKind {
    Honest,
    /// Submits junk as a client and keeps it out of its own blocks.
    Rational,
    /// Announces a write set that omits a cell it will touch.
    Misdeclaring,
}

impl ValidatorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ValidatorKind::Honest => "honest",
            ValidatorKind::Rational => "rational",
            ValidatorKind::Misdeclaring => "misdeclaring",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Rotation {
    RoundRobin,
    /// Uniform over non-excluded validators, seeded per round.
    Uniform { seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidatorSet {
    kinds: Vec<ValidatorKind>,
    excluded_at: Vec<Option<u64>>,
    rotation: Rotation,
}

impl ValidatorSet {
    pub fn new(kinds: Vec<ValidatorKind>, rotation: Rotation) -> Self {
        let n = kinds.len();
        ValidatorSet {
            kinds,
            excluded_at: vec![None; n],
            rotation,
        }
    }

    pub fn honest(n: usize) -> Self {
        Self::new(vec![ValidatorKind::Honest; n], Rotation::RoundRobin)
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn kind(&self, v: usize) -> ValidatorKind {
        self.kinds[v]
    }

    pub fn kinds(&self) -> &[ValidatorKind] {
        &self.kinds
    }

    pub fn is_excluded(&self, v: usize) -> bool {
        self.excluded_at[v].is_some()
    }

    pub fn excluded_at(&self, v: usize) -> Option<u64> {
        self.excluded_at[v]
    }

    /// Removes `v` from scheduling for the rest of the run. Repeated calls
    /// keep the first exclusion round.
    pub fn exclude(&mut self, v: usize, round: u64) {
        self.excluded_at[v].get_or_insert(round);
    }

    /// Proposer for block `round` (1-based), or `None` if every validator is
    /// excluded. Round-robin starts at `(round − 1) mod N` and walks forward
    /// past excluded validators.
    pub fn proposer(&self, round: u64) -> Option<usize> {
        let n = self.kinds.len();
        let active: Vec<usize> = (0..n).filter(|&v| !self.is_excluded(v)).collect();
        if active.is_empty() {
            return None;
        }
        match self.rotation {
            Rotation::RoundRobin => {
                let start = (round.saturating_sub(1) % n as u64) as usize;
                (0..n).map(|d| (start + d) % n).find(|&v| !self.is_excluded(v))
            }
            Rotation::Uniform { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(round);
                Some(active[rng.gen_range(0..active.len())])
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_robin_cycles() {
        let v = ValidatorSet::honest(4);
        let seq: Vec<_> = (1..=6).map(|r| v.proposer(r).unwrap()).collect();
        assert_eq!(seq, vec![0, 1, 2, 3, 0, 1]);
    }

    #[test]
    fn excluded_are_skipped() {
        let mut v = ValidatorSet::honest(3);
        v.exclude(1, 5);
        v.exclude(1, 9);
        assert_eq!(v.excluded_at(1), Some(5));
        assert_eq!(v.proposer(2), Some(2));
        v.exclude(0, 6);
        v.exclude(2, 6);
        assert_eq!(v.proposer(1), None);
    }

    #[test]
    fn uniform_is_seeded() {
        let v = ValidatorSet::new(vec![ValidatorKind::Honest; 5], Rotation::Uniform { seed: 3 });
        let a: Vec<_> = (1..50).map(|r| v.proposer(r)).collect();
        let b: Vec<_> = (1..50).map(|r| v.proposer(r)).collect();
        assert_eq!(a, b);
        assert!((0..5).all(|x| a.contains(&Some(x))));
    }
}
