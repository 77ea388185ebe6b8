// Copyright (c) The Gaslight Contributors
// SPDX-License-Identifier: Apache-2.0

//! `gaslight`: runs simulator scenarios and analyzes gas traces.
//!
//! Exit status is 0 on success, 1 when a run breaks one of the simulator's
//! invariants, and 2 for bad input (arguments, configs, missing files).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gaslight_core::casestudy::{
    attack_economics, ingest_trace, overestimation_stats, EconParams, EconReport,
    OverestimationStats, TraceFormat, PERCENTILE_RANKS,
};
use gaslight_core::config::{preset_text, SimConfig, PRESET_NAMES};
use gaslight_core::protocol::{beta, TimingModel};
use gaslight_core::report::{
    fmt_decimal, fmt_ratio, render_report, summarize, summary_rows, write_artifacts,
};
use gaslight_core::sweep::{seed_range, sweep, sweep_sequential, SweepRow};
use gaslight_core::Rational;

#[derive(Parser)]
#[command(name = "gaslight", version, about = "Coupled, decoupled and partially coupled blockchain simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulator scenarios.
    #[command(subcommand)]
    Sim(SimCmd),
    /// Gas-limit trace analysis and attack economics.
    #[command(subcommand)]
    Trace(TraceCmd),
}

#[derive(Subcommand)]
enum SimCmd {
    /// Run one scenario and write its artifacts.
    Run {
        #[command(flatten)]
        source: Source,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the number of rounds.
        #[arg(long)]
        rounds: Option<u64>,
        /// Artifact directory (defaults to the config's `output_dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the summary as JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Run a scenario over consecutive seeds.
    Sweep {
        #[command(flatten)]
        source: Source,
        /// Number of seeds.
        #[arg(long, default_value_t = 8)]
        seeds: u64,
        /// First seed of the range.
        #[arg(long, default_value_t = 1)]
        first_seed: u64,
        /// Stay on one thread.
        #[arg(long)]
        sequential: bool,
        /// Also write `sweep.csv` here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List bundled presets.
    Presets,
    /// Print a preset's TOML, a starting point for custom configs.
    ShowPreset { name: String },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Bundled preset name.
    #[arg(long)]
    preset: Option<String>,
    /// Scenario TOML file.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct EconFlags {
    /// Annual execution rewards in USD.
    #[arg(long, default_value_t = 352e6)]
    rewards_usd: f64,
    /// Adversary's share of proposer slots.
    #[arg(long, default_value_t = 0.10)]
    alpha: f64,
    /// Gas-limit overestimation factor exploited.
    #[arg(long, default_value_t = 715.0)]
    factor: f64,
    #[arg(long, default_value_t = 50.0)]
    priority_fee_gwei: f64,
    /// Gas of the one attack transaction per block.
    #[arg(long, default_value_t = 50_000.0)]
    attack_gas: f64,
    #[arg(long, default_value_t = 2.6e6)]
    blocks_per_year: f64,
    #[arg(long, default_value_t = 4460.0)]
    eth_price_usd: f64,
    /// Fraction of blocks attacked.
    #[arg(long, default_value_t = 1.0)]
    silent_factor: f64,
}

impl From<&EconFlags> for EconParams {
    fn from(f: &EconFlags) -> Self {
        EconParams {
            total_execution_rewards_usd: f.rewards_usd,
            adversary_share: f.alpha,
            overestimation_factor: f.factor,
            priority_fee_gwei: f.priority_fee_gwei,
            attack_tx_gas: f.attack_gas,
            blocks_per_year: f.blocks_per_year,
            eth_price_usd: f.eth_price_usd,
            silent_factor: f.silent_factor,
        }
    }
}

#[derive(Subcommand)]
enum TraceCmd {
    /// Overestimation statistics of a CSV trace plus the economics report.
    Stats {
        path: PathBuf,
        /// Speed-up to dilute, as `n` or `n/d` (default: the timing model's).
        #[arg(long)]
        beta: Option<Rational>,
        /// Write `trace-report.txt` and `trace-report.json` here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        econ: EconFlags,
    },
    /// Economics of gaslighting a proposer rotation.
    Econ {
        #[command(flatten)]
        econ: EconFlags,
        #[arg(long)]
        json: bool,
    },
}

/// Error carrying its exit status.
struct Failure {
    code: u8,
    msg: String,
}

fn input(msg: impl ToString) -> Failure {
    Failure {
        code: 2,
        msg: msg.to_string(),
    }
}

fn load(source: &Source) -> Result<(String, SimConfig), Failure> {
    match (&source.preset, &source.config) {
        (Some(name), _) => Ok((name.clone(), SimConfig::preset(name).map_err(input)?)),
        (None, Some(path)) => Ok((path.display().to_string(), SimConfig::from_path(path).map_err(input)?)),
        (None, None) => Err(input("pass --preset or --config")),
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report types serialize")
}

fn sim_run(
    source: &Source,
    seed: Option<u64>,
    rounds: Option<u64>,
    out: Option<PathBuf>,
    json: bool,
) -> Result<(), Failure> {
    let (name, mut cfg) = load(source)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(r) = rounds {
        cfg.run.rounds = r;
    }
    let run = cfg.execute().map_err(input)?;
    let summary = summarize(&run);
    if json {
        println!("{}", to_json(&summary));
    } else {
        print!("{}", render_report(&name, &summary));
    }
    if let Some(dir) = out.or_else(|| cfg.output_dir.clone()) {
        let paths = write_artifacts(&name, &run, &dir).map_err(|e| input(format!("{}: {e}", dir.display())))?;
        for p in paths {
            eprintln!("wrote {}", p.display());
        }
    }
    if run.violations.is_empty() {
        Ok(())
    } else {
        Err(Failure {
            code: 1,
            msg: format!("{} invariant violations", run.violations.len()),
        })
    }
}

fn sweep_table(rows: &[SweepRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header = ["seed", "min_cr_res", "attacked_blocks", "adversary_charged", "uncollected", "throughput_gas_per_round", "fair", "violations", "error"];
    w.write_record(header).expect("in-memory write");
    for r in rows {
        let rec: Vec<String> = match &r.result {
            Ok(s) => {
                let get = |k: &str| {
                    summary_rows(s)
                        .into_iter()
                        .find(|(key, _)| key == k)
                        .map(|(_, v)| v)
                        .unwrap_or_default()
                };
                vec![
                    r.seed.to_string(),
                    get("min_cr_res"),
                    get("attacked_blocks"),
                    get("adversary_charged"),
                    get("uncollected"),
                    get("throughput_gas_per_round"),
                    get("fair"),
                    get("violations"),
                    String::new(),
                ]
            }
            Err(e) => {
                let mut v = vec![r.seed.to_string()];
                v.extend(std::iter::repeat_n(String::new(), 7));
                v.push(e.clone());
                v
            }
        };
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

fn sim_sweep(source: &Source, count: u64, first: u64, sequential: bool, out: Option<PathBuf>) -> Result<(), Failure> {
    let (_, cfg) = load(source)?;
    let seeds = seed_range(first, count);
    let rows = if sequential {
        sweep_sequential(&cfg, &seeds)
    } else {
        sweep(&cfg, &seeds)
    };
    let table = sweep_table(&rows);
    print!("{table}");
    if let Some(dir) = out {
        std::fs::create_dir_all(&dir)
            .and_then(|_| std::fs::write(dir.join("sweep.csv"), &table))
            .map_err(|e| input(format!("{}: {e}", dir.display())))?;
    }
    let broken = rows
        .iter()
        .filter(|r| r.result.as_ref().map_or(true, |s| !s.violations.is_empty()))
        .count();
    if broken == 0 {
        Ok(())
    } else {
        Err(Failure {
            code: 1,
            msg: format!("{broken} seeds failed or broke invariants"),
        })
    }
}

fn econ_text(r: &EconReport) -> String {
    format!(
        "captured rewards   ${:.1}M\nattacker cost      {:.1} ETH (${:.1}M)\nnet gain           ${:.1}M\n",
        r.captured_rewards_usd / 1e6,
        r.attacker_cost_eth,
        r.attacker_cost_usd / 1e6,
        r.net_usd / 1e6
    )
}

fn stats_text(path: &Path, s: &OverestimationStats, skipped: (usize, usize), b: Rational) -> String {
    let mut t = String::new();
    let _ = writeln!(t, "trace: {}", path.display());
    let _ = writeln!(
        t,
        "rows used {}, zero-use {}, malformed {}, over limit {}",
        s.rows, s.zero_use_rows, skipped.0, skipped.1
    );
    let _ = writeln!(t, "mean overestimation {:.6}%", s.mean_pct);
    let _ = writeln!(t, "max factor {} ({})", fmt_ratio(&s.max_factor), fmt_decimal(&s.max_factor));
    let _ = writeln!(t, "{:<6}{:>20}{:>20}", "rank", "ascending %", "descending %");
    for k in PERCENTILE_RANKS {
        let a = s.ascending.get(k).expect("rank computed");
        let d = s.descending.get(k).expect("rank computed");
        let _ = writeln!(t, "p{:<5}{:>20}{:>20}", k, fmt_decimal(&a), fmt_decimal(&d));
    }
    let rs = s.effective_beta_ratio_of_sums(b);
    let _ = writeln!(t, "beta {} -> effective {} ({}) by ratio of sums, {:.6} by mean of ratios",
        fmt_ratio(&b), fmt_ratio(&rs), fmt_decimal(&rs), s.effective_beta_mean_of_ratios(b));
    t
}

fn trace_stats(path: &Path, b: Option<Rational>, out: Option<PathBuf>, json: bool, econ: &EconFlags) -> Result<(), Failure> {
    let load = ingest_trace(path, TraceFormat::Csv).map_err(input)?;
    for w in &load.warnings {
        eprintln!("warning: {w}");
    }
    let stats = overestimation_stats(&load.rows).map_err(input)?;
    let b = b.unwrap_or_else(|| beta(&TimingModel::default()));
    let econ_report = attack_economics(&EconParams::from(econ)).map_err(input)?;
    let text = format!(
        "{}\n{}",
        stats_text(path, &stats, (load.malformed, load.over_limit), b),
        econ_text(&econ_report)
    );
    let doc = serde_json::json!({
        "stats": stats,
        "malformed": load.malformed,
        "over_limit": load.over_limit,
        "beta": b,
        "effective_beta_ratio_of_sums": stats.effective_beta_ratio_of_sums(b),
        "effective_beta_mean_of_ratios": stats.effective_beta_mean_of_ratios(b),
        "economics": { "params": EconParams::from(econ), "report": econ_report },
    });
    if json {
        println!("{}", to_json(&doc));
    } else {
        print!("{text}");
    }
    if let Some(dir) = out {
        std::fs::create_dir_all(&dir)
            .and_then(|_| std::fs::write(dir.join("trace-report.txt"), &text))
            .and_then(|_| std::fs::write(dir.join("trace-report.json"), to_json(&doc)))
            .map_err(|e| input(format!("{}: {e}", dir.display())))?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.cmd {
        Cmd::Sim(SimCmd::Run { source, seed, rounds, out, json }) => sim_run(&source, seed, rounds, out, json),
        Cmd::Sim(SimCmd::Sweep { source, seeds, first_seed, sequential, out }) => {
            sim_sweep(&source, seeds, first_seed, sequential, out)
        }
        Cmd::Sim(SimCmd::Presets) => {
            for n in PRESET_NAMES {
                println!("{n}");
            }
            Ok(())
        }
        Cmd::Sim(SimCmd::ShowPreset { name }) => {
            let text = preset_text(&name)
                .ok_or_else(|| input(gaslight_core::config::ConfigError::UnknownPreset(name.clone())))?;
            print!("{text}");
            Ok(())
        }
        Cmd::Trace(TraceCmd::Stats { path, beta, out, json, econ }) => trace_stats(&path, beta, out, json, &econ),
        Cmd::Trace(TraceCmd::Econ { econ, json }) => {
            let r = attack_economics(&EconParams::from(&econ)).map_err(input)?;
            if json {
                println!("{}", to_json(&r));
            } else {
                print!("{}", econ_text(&r));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
