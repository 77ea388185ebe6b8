// Copyright (c) The Gaslight Contributors
// SPDX-License-Identifier: Apache-2.0

//! Sequential versus rayon paths for seed sweeps and trace statistics.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use gaslight_core::casestudy::{overestimation_stats, overestimation_stats_sequential, TraceRow};
use gaslight_core::config::SimConfig;
use gaslight_core::sweep::{seed_range, sweep, sweep_sequential};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bench_sweep(c: &mut Criterion) {
    let cfg = SimConfig::preset("partial-secure").expect("bundled preset");
    let seeds = seed_range(1, 16);
    let mut g = c.benchmark_group("sweep-16-seeds");
    g.sample_size(10);
    g.bench_function("sequential", |b| b.iter(|| black_box(sweep_sequential(&cfg, &seeds))));
    g.bench_function("parallel", |b| b.iter(|| black_box(sweep(&cfg, &seeds))));
    g.finish();
}

fn synthetic_trace(n: usize) -> Vec<TraceRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    (0..n)
        .map(|i| {
            let used = rng.gen_range(21_000u64..2_000_000);
            let limit = used + rng.gen_range(0..used);
            TraceRow {
                tx_id: format!("0x{i:064x}"),
                gas_limit: limit,
                gas_used: used,
                price: None,
            }
        })
        .collect()
}

fn bench_trace(c: &mut Criterion) {
    let rows = synthetic_trace(200_000);
    let mut g = c.benchmark_group("trace-stats-200k");
    g.sample_size(10);
    g.bench_function("sequential", |b| {
        b.iter(|| black_box(overestimation_stats_sequential(&rows).unwrap()))
    });
    g.bench_function("parallel", |b| b.iter(|| black_box(overestimation_stats(&rows).unwrap())));
    g.finish();
}

criterion_group!(benches, bench_sweep, bench_trace);
criterion_main!(benches);
