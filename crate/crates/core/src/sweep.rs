// Copyright (c) The Gaslight Contributors
// SPDX-License-Identifier: Apache-2.0

//! Seed fan-out. Each seed is an independent run, so the parallel path
//! only changes wall time; results come back in seed order either way.

use crate::config::SimConfig;
use crate::report::{summarize, RunSummary};

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub seed: u64,
    pub result: Result<RunSummary, String>,
}

fn one(cfg: &SimConfig, seed: u64) -> SweepRow {
    let mut c = cfg.clone();
    c.seed = seed;
    SweepRow {
        seed,
        result: c.execute().map(|r| summarize(&r)).map_err(|e| e.to_string()),
    }
}

/// Runs every seed on the calling thread.
pub fn sweep_sequential(cfg: &SimConfig, seeds: &[u64]) -> Vec<SweepRow> {
    seeds.iter().map(|&s| one(cfg, s)).collect()
}

/// Runs seeds across the rayon pool when the `parallel` feature is on.
#[cfg(feature = "parallel")]
pub fn sweep(cfg: &SimConfig, seeds: &[u64]) -> Vec<SweepRow> {
    use rayon::prelude::*;
    seeds.par_iter().map(|&s| one(cfg, s)).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn sweep(cfg: &SimConfig, seeds: &[u64]) -> Vec<SweepRow> {
    sweep_sequential(cfg, seeds)
}

/// `first..first+count`.
pub fn seed_range(first: u64, count: u64) -> Vec<u64> {
    (first..first.saturating_add(count)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_matches_sequential() {
        let cfg = SimConfig::preset("partial-secure").unwrap();
        let seeds = seed_range(10, 4);
        let a = sweep(&cfg, &seeds);
        let b = sweep_sequential(&cfg, &seeds);
        assert_eq!(a.len(), 4);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.seed, y.seed);
            assert_eq!(x.result.as_ref().unwrap(), y.result.as_ref().unwrap());
        }
    }
}
