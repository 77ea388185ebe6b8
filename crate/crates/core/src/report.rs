// Copyright (c) The Gaslight Contributors
// SPDX-License-Identifier: Apache-2.0

//! Run artifacts: per-round CSV, per-transaction CSV, a key/value summary
//! and a plain-text report. Output depends only on the run record, so equal
//! runs produce byte-identical files.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::exec::{CostModel, ExecStatus};
use crate::metrics::{default_epsilon, fairness, mean_latency, rotations, throughput, FairnessReport};
use crate::protocol::{beta, RunRecord};
use crate::Rational;

/// `n` for integers, `n/d` otherwise.
pub fn fmt_ratio(r: &Rational) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Six-decimal rendering for human eyes.
pub fn fmt_decimal(r: &Rational) -> String {
    format!("{:.6}", *r.numer() as f64 / *r.denom() as f64)
}

fn fmt_opt_ratio(r: &Option<Rational>) -> String {
    r.as_ref().map_or("inf".to_string(), fmt_ratio)
}

/// Headline numbers of one run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RunSummary {
    pub mode: String,
    pub builder: String,
    pub cost_model: String,
    pub rounds: u64,
    pub validators: usize,
    pub gas_cap: String,
    pub lag: u64,
    pub slot_ms: u64,
    pub beta: Rational,
    pub blocks_executed: usize,
    pub min_cr_res: Option<Rational>,
    pub mean_cr_res: Option<Rational>,
    pub attacked_blocks: usize,
    pub max_attacked_cr_res: Option<Rational>,
    pub max_attacked_cr_res_star: Option<Rational>,
    pub max_attacked_cr_rew_star: Option<Rational>,
    pub adversary_charged: u64,
    pub uncollected: u64,
    pub throughput_per_round: Option<Rational>,
    pub throughput_per_second: Option<Rational>,
    pub honest_latency_rounds: Option<Rational>,
    pub honest_latency_ms: Option<Rational>,
    pub congested_blocks: usize,
    pub non_trivial_violations: usize,
    pub rotations: u64,
    pub fairness: FairnessReport,
    pub excluded: Vec<usize>,
    pub violations: Vec<String>,
}

fn cost_model_name(m: CostModel) -> String {
    match m {
        CostModel::Current { c_base } => format!("current(c_base={c_base})"),
        CostModel::FullEstimate { c_base } => format!("full-estimate(c_base={c_base})"),
    }
}

pub fn summarize(run: &RunRecord) -> RunSummary {
    let results: Vec<_> = run.executed().map(|(_, x)| x).collect();
    let min_cr_res = results.iter().map(|x| x.cr_res).min();
    let mean_cr_res = (!results.is_empty()).then(|| {
        results.iter().map(|x| x.cr_res).sum::<Rational>() / Rational::from_integer(results.len() as i128)
    });
    let attacked: Vec<_> = run.attacked_blocks().map(|(_, x)| x).collect();
    let tp = throughput(run).ok();
    let lat = mean_latency(run, |t| !t.is_adversarial()).ok();
    RunSummary {
        mode: run.mode.as_str().into(),
        builder: run.builder.as_str().into(),
        cost_model: cost_model_name(run.cost_model),
        rounds: run.rounds,
        validators: run.validators.len(),
        gas_cap: run.caps.g.to_string(),
        lag: run.lag,
        slot_ms: run.clock.slot_ms(),
        beta: beta(&run.clock.timing),
        blocks_executed: results.len(),
        min_cr_res,
        mean_cr_res,
        attacked_blocks: attacked.len(),
        max_attacked_cr_res: attacked.iter().map(|x| x.cr_res).max(),
        max_attacked_cr_res_star: attacked.iter().map(|x| x.cr_res_star).max(),
        max_attacked_cr_rew_star: attacked.iter().map(|x| x.cr_rew_star).max(),
        adversary_charged: run.adversary_charged(),
        uncollected: run.total_uncollected(),
        throughput_per_round: tp.as_ref().map(|t| t.per_round),
        throughput_per_second: tp.as_ref().map(|t| t.per_second),
        honest_latency_rounds: lat.as_ref().map(|l| l.rounds),
        honest_latency_ms: lat.as_ref().map(|l| l.ms),
        congested_blocks: results.iter().filter(|x| x.congested).count(),
        non_trivial_violations: run
            .entries
            .iter()
            .filter(|e| {
                e.flags
                    .iter()
                    .any(|f| matches!(f, crate::builders::BuildFlag::NonTrivialityViolated { .. }))
            })
            .count(),
        rotations: rotations(run),
        fairness: fairness(run, default_epsilon()),
        excluded: run
            .validators
            .iter()
            .enumerate()
            .filter(|(_, v)| v.excluded_at.is_some())
            .map(|(i, _)| i)
            .collect(),
        violations: run.violations.clone(),
    }
}

fn opt(r: &Option<Rational>) -> String {
    r.as_ref().map_or(String::new(), fmt_ratio)
}

/// `key,value` rows.
pub fn summary_rows(s: &RunSummary) -> Vec<(String, String)> {
    let mut rows: Vec<(String, String)> = vec![
        ("mode".into(), s.mode.clone()),
        ("builder".into(), s.builder.clone()),
        ("cost_model".into(), s.cost_model.clone()),
        ("rounds".into(), s.rounds.to_string()),
        ("validators".into(), s.validators.to_string()),
        ("gas_cap".into(), s.gas_cap.clone()),
        ("lag".into(), s.lag.to_string()),
        ("slot_ms".into(), s.slot_ms.to_string()),
        ("beta".into(), fmt_ratio(&s.beta)),
        ("blocks_executed".into(), s.blocks_executed.to_string()),
        ("min_cr_res".into(), opt(&s.min_cr_res)),
        ("mean_cr_res".into(), opt(&s.mean_cr_res)),
        ("attacked_blocks".into(), s.attacked_blocks.to_string()),
        ("max_attacked_cr_res".into(), opt(&s.max_attacked_cr_res)),
        ("max_attacked_cr_res_star".into(), opt(&s.max_attacked_cr_res_star)),
        ("max_attacked_cr_rew_star".into(), opt(&s.max_attacked_cr_rew_star)),
        ("adversary_charged".into(), s.adversary_charged.to_string()),
        ("uncollected".into(), s.uncollected.to_string()),
        ("throughput_gas_per_round".into(), opt(&s.throughput_per_round)),
        ("throughput_gas_per_second".into(), opt(&s.throughput_per_second)),
        ("honest_latency_rounds".into(), opt(&s.honest_latency_rounds)),
        ("honest_latency_ms".into(), opt(&s.honest_latency_ms)),
        ("congested_blocks".into(), s.congested_blocks.to_string()),
        ("non_trivial_violations".into(), s.non_trivial_violations.to_string()),
        ("rotations".into(), s.rotations.to_string()),
        ("fair".into(), s.fairness.fair.to_string()),
        ("fairness_max_deviation".into(), fmt_opt_ratio(&s.fairness.max_deviation)),
        ("fairness_epsilon".into(), fmt_ratio(&s.fairness.epsilon)),
    ];
    for (v, r) in s.fairness.rewards.iter().enumerate() {
        rows.push((format!("reward_{v}"), r.to_string()));
    }
    rows.push((
        "excluded".into(),
        s.excluded.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "),
    ));
    rows.push(("violations".into(), s.violations.len().to_string()));
    rows
}

pub fn write_summary_csv<W: Write>(s: &RunSummary, out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["key", "value"])?;
    for (k, v) in summary_rows(s) {
        w.write_record([k, v])?;
    }
    w.flush()
}

pub fn write_rounds_csv<W: Write>(run: &RunRecord, out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "round",
        "proposer",
        "txs",
        "mempool_size",
        "block_gas_est",
        "block_gas_actual",
        "gas_burned",
        "cr_res",
        "cr_res_star",
        "cr_rew_star",
        "burned_ratio",
        "reward",
        "uncollected",
        "exec_round",
        "completion_ms",
        "congested",
        "attacked",
        "flags",
    ])?;
    for e in &run.entries {
        let mut row = vec![
            e.round.to_string(),
            e.proposer.to_string(),
            e.tx_ids.len().to_string(),
            e.mempool_size.to_string(),
            e.block_gas_est.to_string(),
        ];
        match &e.exec {
            Some(x) => row.extend([
                x.gas_executed.to_string(),
                x.gas_burned.to_string(),
                fmt_ratio(&x.cr_res),
                fmt_ratio(&x.cr_res_star),
                fmt_ratio(&x.cr_rew_star),
                fmt_ratio(&x.burned_ratio),
                x.reward.to_string(),
                x.uncollected.to_string(),
                x.exec_round.to_string(),
                x.completion_ms.to_string(),
                x.congested.to_string(),
                x.attacked.to_string(),
            ]),
            None => row.extend(std::iter::repeat_n(String::new(), 12)),
        }
        let flags: Vec<String> = e.flags.iter().map(|f| format!("{f:?}")).collect();
        row.push(flags.join(" "));
        w.write_record(&row)?;
    }
    w.flush()
}

pub fn write_outcomes_csv<W: Write>(run: &RunRecord, out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["round", "tx_id", "status", "gas_consumed", "charged", "uncollected", "tag"])?;
    for (e, o) in run.outcomes() {
        let status = match (o.status, o.abort_reason) {
            (ExecStatus::Executed, _) => "executed",
            (ExecStatus::Aborted, Some(crate::exec::AbortReason::AccessMismatch)) => "aborted-mismatch",
            (ExecStatus::Aborted, _) => "aborted",
        };
        w.write_record([
            e.round.to_string(),
            o.tx_id.to_string(),
            status.to_string(),
            o.gas_consumed.to_string(),
            o.charged.to_string(),
            o.uncollected.to_string(),
            o.tag.as_str().to_string(),
        ])?;
    }
    w.flush()
}

/// Human-readable report block.
pub fn render_report(name: &str, s: &RunSummary) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scenario: {name}");
    let _ = writeln!(
        out,
        "mode {} / builder {} / cost {} / N={} G={} / lag {} / {} rounds",
        s.mode, s.builder, s.cost_model, s.validators, s.gas_cap, s.lag, s.rounds
    );
    let _ = writeln!(out, "slot {} ms, beta {}", s.slot_ms, fmt_ratio(&s.beta));
    let show = |r: &Option<Rational>| r.as_ref().map_or("n/a".to_string(), |r| format!("{} ({})", fmt_ratio(r), fmt_decimal(r)));
    let _ = writeln!(out, "utilization: min CR_Res {}, mean {}", show(&s.min_cr_res), show(&s.mean_cr_res));
    let _ = writeln!(
        out,
        "attacked blocks: {} (max CR_Res {}, max CR_Res* {}, max CR_Rew* {})",
        s.attacked_blocks,
        show(&s.max_attacked_cr_res),
        show(&s.max_attacked_cr_res_star),
        show(&s.max_attacked_cr_rew_star)
    );
    let _ = writeln!(out, "adversary charged {}, uncollected {}", s.adversary_charged, s.uncollected);
    let _ = writeln!(
        out,
        "throughput: {} gas/round, {} gas/s",
        show(&s.throughput_per_round),
        show(&s.throughput_per_second)
    );
    let _ = writeln!(
        out,
        "honest latency: {} rounds, {} ms",
        show(&s.honest_latency_rounds),
        show(&s.honest_latency_ms)
    );
    let _ = writeln!(
        out,
        "congested blocks {}, non-triviality violations {}",
        s.congested_blocks, s.non_trivial_violations
    );
    let _ = writeln!(
        out,
        "fairness over {} rotations: {} (max deviation {}, epsilon {})",
        s.rotations,
        if s.fairness.fair { "fair" } else { "unfair" },
        fmt_opt_ratio(&s.fairness.max_deviation),
        fmt_ratio(&s.fairness.epsilon)
    );
    let _ = writeln!(out, "rewards: {:?}", s.fairness.rewards);
    if !s.excluded.is_empty() {
        let _ = writeln!(out, "excluded validators: {:?}", s.excluded);
    }
    if s.violations.is_empty() {
        let _ = writeln!(out, "invariants: ok");
    } else {
        let _ = writeln!(out, "invariant violations:");
        for v in &s.violations {
            let _ = writeln!(out, "  {v}");
        }
    }
    out
}

/// Writes `rounds.csv`, `outcomes.csv`, `summary.csv` and `report.txt`
/// into `dir`, creating it if needed.
pub fn write_artifacts(name: &str, run: &RunRecord, dir: &Path) -> io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let summary = summarize(run);
    let paths: Vec<PathBuf> = ["rounds.csv", "outcomes.csv", "summary.csv", "report.txt"]
        .iter()
        .map(|f| dir.join(f))
        .collect();
    write_rounds_csv(run, io::BufWriter::new(std::fs::File::create(&paths[0])?))?;
    write_outcomes_csv(run, io::BufWriter::new(std::fs::File::create(&paths[1])?))?;
    write_summary_csv(&summary, io::BufWriter::new(std::fs::File::create(&paths[2])?))?;
    std::fs::write(&paths[3], render_report(name, &summary))?;
    Ok(paths)
}
