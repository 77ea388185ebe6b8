// Copyright (c) The Gaslight Contributors
// SPDX-License-Identifier: Apache-2.0

//! Discrete-round simulator for leader-based blockchains whose block
//! creation, consensus and execution are coupled, decoupled, or partially
//! coupled, together with the workloads that attack them and the metrics that
//! measure the damage.
//!
//! The crate is organized bottom-up:
//!
//! * [`model`] holds gas arithmetic, state, the transaction language and
//!   access-set extraction.
//! * [`exec`] runs transactions and blocks and charges senders.
//! * [`knapsack`] and [`builders`] choose blocks.
//! * [`protocol`] drives rounds and records runs.
//! * [`adversary`] generates honest and adversarial workloads.
//! * [`metrics`] turns run records into utilization, reward, fairness,
//!   throughput and latency figures.
//! * [`casestudy`] analyzes gas-limit traces and attack economics.
//! * [`config`], [`report`] and [`sweep`] wire scenarios to files.

pub mod adversary;
pub mod builders;
pub mod casestudy;
pub mod config;
pub mod exec;
pub mod knapsack;
pub mod metrics;
pub mod model;
pub mod protocol;
pub mod report;
pub mod sweep;

/// Exact rational used for every ratio the simulator reports.
pub type Rational = num_rational::Ratio<i128>;
