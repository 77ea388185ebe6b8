// Copyright (c) The Gaslight Contributors
// SPDX-License-Identifier: Apache-2.0

//! Overestimation statistics.
//!
//! A row's overestimation is `o = 100 · (limit − used) / used`, in percent,
//! kept as an exact rational. Percentiles use the nearest-rank rule: the
//! K-th percentile of `n` sorted values is the one at rank `⌈K·n/100⌉`.

use serde::Serialize;
use thiserror::Error;

use super::ingest::TraceRow;
use crate::Rational;

pub const PERCENTILE_RANKS: [u32; 5] = [10, 25, 50, 75, 90];

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("no rows with positive gas usage")]
    NoUsableRows,
}

/// `(K, value)` pairs for every K in [`PERCENTILE_RANKS`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Percentiles(pub Vec<(u32, Rational)>);

impl Percentiles {
    pub fn get(&self, k: u32) -> Option<Rational> {
        self.0.iter().find(|(r, _)| *r == k).map(|(_, v)| *v)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OverestimationStats {
    pub rows: usize,
    /// Rows with zero gas used, left out of every statistic.
    pub zero_use_rows: usize,
    /// Mean of `o`, summed in ascending order. Floating point because the
    /// exact sum of many ratios with distinct denominators outgrows `i128`.
    pub mean_pct: f64,
    /// Percentiles of `o` in ascending order: p10 is low overestimation.
    pub ascending: Percentiles,
    /// Percentiles counted from the top: p10 is the value exceeded by the
    /// most overestimated tenth.
    pub descending: Percentiles,
    /// Largest `limit / used`.
    pub max_factor: Rational,
    pub sum_used: u128,
    pub sum_limit: u128,
}

impl OverestimationStats {
    /// `β · Σused / Σlimit`: executed share of declared gas packing.
    pub fn effective_beta_ratio_of_sums(&self, beta: Rational) -> Rational {
        beta * Rational::new(self.sum_used as i128, self.sum_limit.max(1) as i128)
    }

    /// `β / (1 + mean(o)/100)`.
    pub fn effective_beta_mean_of_ratios(&self, beta: Rational) -> f64 {
        to_f64(beta) / (1.0 + self.mean_pct / 100.0)
    }
}

/// Value at nearest rank `⌈k·n/100⌉` of an ascending slice.
pub fn nearest_rank(sorted: &[Rational], k: u32) -> Rational {
    let n = sorted.len() as u64;
    let rank = (k as u64 * n).div_ceil(100).max(1);
    sorted[(rank - 1) as usize]
}

fn to_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn overestimation(r: &TraceRow) -> Rational {
    Rational::new(
        100 * (r.gas_limit as i128 - r.gas_used as i128),
        r.gas_used as i128,
    )
}

fn summarize(rows: &[TraceRow], mut o: Vec<Rational>, sort: impl FnOnce(&mut [Rational])) -> Result<OverestimationStats, StatsError> {
    let usable: Vec<&TraceRow> = rows.iter().filter(|r| r.gas_used > 0).collect();
    if usable.is_empty() {
        return Err(StatsError::NoUsableRows);
    }
    sort(&mut o);
    let n = o.len();
    let sum: f64 = o.iter().copied().map(to_f64).sum();
    let desc: Vec<Rational> = o.iter().rev().copied().collect();
    let pick = |v: &[Rational]| Percentiles(PERCENTILE_RANKS.iter().map(|&k| (k, nearest_rank(v, k))).collect());
    let max_factor = usable
        .iter()
        .map(|r| Rational::new(r.gas_limit as i128, r.gas_used as i128))
        .max()
        .expect("nonempty");
    Ok(OverestimationStats {
        rows: n,
        zero_use_rows: rows.len() - n,
        mean_pct: sum / n as f64,
        ascending: pick(&o),
        descending: pick(&desc),
        max_factor,
        sum_used: usable.iter().map(|r| r.gas_used as u128).sum(),
        sum_limit: usable.iter().map(|r| r.gas_limit as u128).sum(),
    })
}

/// Single-threaded reference implementation.
pub fn overestimation_stats_sequential(rows: &[TraceRow]) -> Result<OverestimationStats, StatsError> {
    let o: Vec<Rational> = rows
        .iter()
        .filter(|r| r.gas_used > 0)
        .map(overestimation)
        .collect();
    summarize(rows, o, |v| v.sort_unstable())
}

/// Same result as [`overestimation_stats_sequential`]; the per-row ratios
/// and the sort run on the rayon pool when the `parallel` feature is on.
pub fn overestimation_stats(rows: &[TraceRow]) -> Result<OverestimationStats, StatsError> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let o: Vec<Rational> = rows
            .par_iter()
            .filter(|r| r.gas_used > 0)
            .map(overestimation)
            .collect();
        summarize(rows, o, |v| v.par_sort_unstable())
    }
    #[cfg(not(feature = "parallel"))]
    {
        overestimation_stats_sequential(rows)
    }
}
