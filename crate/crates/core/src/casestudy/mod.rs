// Copyright (c) The Gaslight Contributors
// SPDX-License-Identifier: Apache-2.0

//! Gas-limit overestimation analysis of real-chain traces and the economics
//! of gaslighting a proposer rotation.

mod econ;
mod ingest;
mod stats;

pub use econ::{attack_economics, EconError, EconParams, EconReport};
pub use ingest::{ingest_reader, ingest_trace, IngestError, TraceFormat, TraceLoad, TraceRow};
pub use stats::{
    nearest_rank, overestimation_stats, overestimation_stats_sequential, Percentiles,
    OverestimationStats, StatsError, PERCENTILE_RANKS,
};
