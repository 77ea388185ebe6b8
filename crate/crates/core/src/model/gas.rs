// Copyright (c) The Gaslight Contributors
// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Sub};

use serde::{Deserialize, Serialize};

/// Number of micro-units in one normalized unit of gas.
pub const MICRO_PER_UNIT: u64 = 1_000_000;

/// Fixed-point gas quantity. `1_000_000` micro-units represent `1.0`, the
/// per-transaction maximum. Block-level sums may exceed one unit.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct GasAmount(u64);

impl GasAmount {
    pub const ZERO: GasAmount = GasAmount(0);
    pub const ONE: GasAmount = GasAmount(MICRO_PER_UNIT);

    pub const fn from_micro(micro: u64) -> Self {
        GasAmount(micro)
    }

    pub const fn units(units: u64) -> Self {
        GasAmount(units * MICRO_PER_UNIT)
    }

    pub const fn micro(self) -> u64 {
        self.0
    }

    /// True when the value lies in the normalized per-transaction domain `[0, 1]`.
    pub const fn is_normalized(self) -> bool {
        self.0 <= MICRO_PER_UNIT
    }

    /// `floor(self)` in whole units.
    pub const fn whole_units(self) -> u64 {
        self.0 / MICRO_PER_UNIT
    }

    pub fn checked_add(self, rhs: GasAmount) -> Option<GasAmount> {
        self.0.checked_add(rhs.0).map(GasAmount)
    }

    pub fn saturating_sub(self, rhs: GasAmount) -> GasAmount {
        GasAmount(self.0.saturating_sub(rhs.0))
    }

    /// Parses a decimal such as `"0.25"` or `"10"` exactly. At most six
    /// fractional digits are accepted.
    pub fn parse_decimal(s: &str) -> Option<GasAmount> {
        let s = s.trim();
        let (whole, frac) = match s.split_once('.') {
            Some((w, f)) => (w, f),
            None => (s, ""),
        };
        if frac.len() > 6 || (whole.is_empty() && frac.is_empty()) {
            return None;
        }
        let whole: u64 = if whole.is_empty() { 0 } else { whole.parse().ok()? };
        let mut frac_micro = 0u64;
        for (i, c) in frac.chars().enumerate() {
            let d = c.to_digit(10)? as u64;
            frac_micro += d * 10u64.pow(5 - i as u32);
        }
        whole
            .checked_mul(MICRO_PER_UNIT)?
            .checked_add(frac_micro)
            .map(GasAmount)
    }
}

impl fmt::Display for GasAmount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let whole = self.0 / MICRO_PER_UNIT;
        let frac = self.0 % MICRO_PER_UNIT;
        if frac == 0 {
            write!(f, "{whole}")
        } else {
            let digits = format!("{frac:06}");
            write!(f, "{whole}.{}", digits.trim_end_matches('0'))
        }
    }
}

impl Add for GasAmount {
    type Output = GasAmount;
    fn add(self, rhs: GasAmount) -> GasAmount {
        GasAmount(self.0 + rhs.0)
    }
}

impl AddAssign for GasAmount {
    fn add_assign(&mut self, rhs: GasAmount) {
        self.0 += rhs.0;
    }
}

impl Sub for GasAmount {
    type Output = GasAmount;
    fn sub(self, rhs: GasAmount) -> GasAmount {
        GasAmount(self.0 - rhs.0)
    }
}

impl Sum for GasAmount {
    fn sum<I: Iterator<Item = GasAmount>>(iter: I) -> GasAmount {
        iter.fold(GasAmount::ZERO, Add::add)
    }
}

impl<'a> Sum<&'a GasAmount> for GasAmount {
    fn sum<I: Iterator<Item = &'a GasAmount>>(iter: I) -> GasAmount {
        iter.copied().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_round_trip() {
        assert_eq!(GasAmount::parse_decimal("0.25"), Some(GasAmount::from_micro(250_000)));
        assert_eq!(GasAmount::parse_decimal("10"), Some(GasAmount::units(10)));
        assert_eq!(GasAmount::parse_decimal(".5"), Some(GasAmount::from_micro(500_000)));
        assert_eq!(GasAmount::parse_decimal("0.0000001"), None);
        assert_eq!(GasAmount::parse_decimal("x"), None);
        assert_eq!(GasAmount::from_micro(655_600).to_string(), "0.6556");
        assert_eq!(GasAmount::units(3).to_string(), "3");
    }

    #[test]
    fn normalized_boundary() {
        assert!(GasAmount::ONE.is_normalized());
        assert!(!GasAmount::from_micro(1_000_001).is_normalized());
        assert_eq!(GasAmount::from_micro(2_999_999).whole_units(), 2);
    }
}
