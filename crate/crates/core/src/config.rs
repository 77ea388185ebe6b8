// Copyright (c) The Gaslight Contributors
// SPDX-License-Identifier: Apache-2.0

//! Scenario configuration files and the bundled presets.
//!
//! A scenario is a TOML document:
//!
//! ```toml
//! seed = 1              # required; there is no entropy default
//! rounds = 200
//! output_dir = "out"    # optional
//!
//! [mode]
//! kind = "coupled"      # coupled | decoupled | partial
//! lag = 2               # decoupled default 2, partial default: pipeline depth
//! builder = "knapsack"  # knapsack | greedy-est | partial
//! cost_model = "current"  # current | full-estimate
//! c_base = 0
//! exec_offset_ms = 200  # optional, defaults to delta_b
//! reorder_hot = false
//!
//! [timing]
//! delta_e = 200
//! delta_c = 600
//! delta_b = 200
//!
//! [validators]
//! count = 20
//! gas_cap = 10          # G, decimal with up to six fractional digits
//! rotation = "round-robin"  # or "uniform"
//! misdeclaring = []     # validator indices
//!
//! [workload]
//! rate = 12
//! initial = 40
//! gas = [{ value = 1.0, weight = 1 }]
//! est_factor = 1.639   # optional overestimate multiplier
//! price_min = 1
//! price_max = 1
//! balance = 1099511627776
//! conflict = "independent"  # or "hot-cell"
//! until_round = 150    # optional
//!
//! [adversary]
//! kind = "gaslight"     # none | gaslight | fund-drain | rational-validator
//! ```
//!
//! Gaslight and rational-validator adversaries take `lag_exploited`,
//! `junk_est`, `junk_count`, `price_premium`, `decoys` and `balance`
//! (rational also takes `validator`). Fund drain takes `balance`,
//! `drain_round`, `drain_offset`, `drain_est`, `drain_price`, `attack_est`,
//! `attack_price` and `attack_count`.

use std::path::PathBuf;

use serde::Deserialize;
use thiserror::Error;

use crate::adversary::{
    assemble, AdversaryError, AdversarySpec, AssemblyParams, ConflictMode, DrainSpec, EstPolicy,
    GaslightSpec, HonestSpec, Workload, WorkloadSpec, MAX_VALIDATORS,
};
use crate::builders::{BuilderKind, Caps, Mode};
use crate::exec::CostModel;
use crate::model::GasAmount;
use crate::protocol::{
    run, RunConfig, RunError, RunRecord, Rotation, TimingModel, ValidatorKind, ValidatorSet,
};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("unknown preset {0:?}; known presets: {known}", known = PRESET_NAMES.join(", "))]
    UnknownPreset(String),
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("workload: {0}")]
    Workload(#[from] AdversaryError),
    #[error("run: {0}")]
    Run(#[from] RunError),
}

/// Gas written as a TOML number or string, parsed exactly.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum GasText {
    Int(u64),
    Float(f64),
    Text(String),
}

impl GasText {
    fn parse(&self, what: &str) -> Result<GasAmount, ConfigError> {
        let text = match self {
            GasText::Int(i) => i.to_string(),
            GasText::Float(f) => format!("{f}"),
            GasText::Text(s) => s.clone(),
        };
        GasAmount::parse_decimal(&text)
            .ok_or_else(|| ConfigError::Invalid(format!("{what}: {text:?} is not a gas amount")))
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: u64,
    rounds: u64,
    output_dir: Option<PathBuf>,
    mode: RawMode,
    #[serde(default)]
    timing: RawTiming,
    validators: RawValidators,
    #[serde(default)]
    workload: RawWorkload,
    #[serde(default)]
    adversary: RawAdversary,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMode {
    kind: Mode,
    lag: Option<u64>,
    builder: Option<BuilderKind>,
    #[serde(default = "default_cost")]
    cost_model: String,
    #[serde(default)]
    c_base: u64,
    exec_offset_ms: Option<u64>,
    #[serde(default)]
    reorder_hot: bool,
}

fn default_cost() -> String {
    "current".into()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTiming {
    delta_e: u64,
    delta_c: u64,
    delta_b: u64,
}

impl Default for RawTiming {
    fn default() -> Self {
        let t = TimingModel::default();
        RawTiming {
            delta_e: t.delta_e,
            delta_c: t.delta_c,
            delta_b: t.delta_b,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawValidators {
    count: usize,
    gas_cap: GasText,
    #[serde(default = "default_rotation")]
    rotation: String,
    #[serde(default)]
    misdeclaring: Vec<usize>,
}

fn default_rotation() -> String {
    "round-robin".into()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGasWeight {
    value: GasText,
    weight: u32,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWorkload {
    #[serde(default)]
    rate: u32,
    #[serde(default)]
    initial: u32,
    gas: Option<Vec<RawGasWeight>>,
    est_factor: Option<f64>,
    price_min: Option<u64>,
    price_max: Option<u64>,
    balance: Option<i64>,
    conflict: Option<ConflictMode>,
    until_round: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAdversary {
    kind: Option<String>,
    validator: Option<usize>,
    lag_exploited: Option<u64>,
    junk_est: Option<GasText>,
    junk_count: Option<u32>,
    price_premium: Option<u64>,
    decoys: Option<bool>,
    balance: Option<i64>,
    drain_round: Option<u64>,
    drain_offset: Option<u64>,
    drain_est: Option<GasText>,
    drain_price: Option<u64>,
    attack_est: Option<GasText>,
    attack_price: Option<u64>,
    attack_count: Option<u32>,
}

/// Fully validated scenario.
#[derive(Clone, Debug)]
pub struct SimConfig {
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub run: RunConfig,
    pub workload: WorkloadSpec,
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

fn opt_gas(g: &Option<GasText>, what: &str) -> Result<Option<GasAmount>, ConfigError> {
    g.as_ref().map(|g| g.parse(what)).transpose()
}

impl RawAdversary {
    fn gaslight(&self) -> Result<GaslightSpec, ConfigError> {
        let d = GaslightSpec::default();
        let junk_est = opt_gas(&self.junk_est, "adversary.junk_est")?;
        if junk_est.is_some_and(|g| !g.is_normalized()) {
            return Err(invalid("adversary.junk_est must lie in [0, 1]"));
        }
        Ok(GaslightSpec {
            junk_est,
            junk_count: self.junk_count,
            price_premium: self.price_premium.unwrap_or(d.price_premium),
            decoys: self.decoys.unwrap_or(d.decoys),
            balance: self.balance.unwrap_or(d.balance),
            lag_exploited: self.lag_exploited.unwrap_or(d.lag_exploited),
        })
    }

    fn drain(&self) -> Result<DrainSpec, ConfigError> {
        let d = DrainSpec::default();
        Ok(DrainSpec {
            balance: self.balance.unwrap_or(d.balance),
            drain_round: self.drain_round.unwrap_or(d.drain_round),
            offset: self.drain_offset.unwrap_or(d.offset),
            drain_est: opt_gas(&self.drain_est, "adversary.drain_est")?.unwrap_or(d.drain_est),
            drain_price: self.drain_price.unwrap_or(d.drain_price),
            attack_est: opt_gas(&self.attack_est, "adversary.attack_est")?.unwrap_or(d.attack_est),
            attack_price: self.attack_price.unwrap_or(d.attack_price),
            attack_count: self.attack_count.unwrap_or(d.attack_count),
        })
    }

    fn spec(&self) -> Result<AdversarySpec, ConfigError> {
        match self.kind.as_deref().unwrap_or("none") {
            "none" => Ok(AdversarySpec::None),
            "gaslight" => Ok(AdversarySpec::Gaslight(self.gaslight()?)),
            "fund-drain" => Ok(AdversarySpec::FundDrain(self.drain()?)),
            "rational-validator" => Ok(AdversarySpec::RationalValidator {
                validator: self
                    .validator
                    .ok_or_else(|| invalid("adversary.validator is required for rational-validator"))?,
                junk: self.gaslight()?,
            }),
            other => Err(invalid(format!("unknown adversary kind {other:?}"))),
        }
    }
}

impl RawWorkload {
    fn spec(&self) -> Result<HonestSpec, ConfigError> {
        let d = HonestSpec::default();
        let gas = match &self.gas {
            None => d.gas.clone(),
            Some(list) => list
                .iter()
                .map(|gw| Ok((gw.value.parse("workload.gas")?, gw.weight)))
                .collect::<Result<Vec<_>, ConfigError>>()?,
        };
        if gas.iter().any(|(g, _)| !g.is_normalized()) {
            return Err(invalid("workload.gas values must lie in [0, 1]"));
        }
        if gas.iter().map(|(_, w)| *w as u64).sum::<u64>() == 0 {
            return Err(invalid("workload.gas needs a positive total weight"));
        }
        let est = match self.est_factor {
            None => EstPolicy::Exact,
            Some(f) if f.is_finite() && f >= 1.0 => EstPolicy::Overestimate {
                factor_ppm: (f * 1_000_000.0).round() as u64,
            },
            Some(f) => return Err(invalid(format!("workload.est_factor {f} must be ≥ 1"))),
        };
        let price_min = self.price_min.unwrap_or(d.price_min);
        let price_max = self.price_max.unwrap_or(d.price_max.max(price_min));
        if price_min > price_max {
            return Err(invalid("workload.price_min exceeds price_max"));
        }
        Ok(HonestSpec {
            rate: self.rate,
            initial: self.initial,
            gas,
            est,
            price_min,
            price_max,
            balance: self.balance.unwrap_or(d.balance),
            conflict: self.conflict.unwrap_or(ConflictMode::Independent),
            until_round: self.until_round,
        })
    }
}

impl SimConfig {
    pub fn from_toml(text: &str) -> Result<SimConfig, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        Self::from_raw(raw)
    }

    pub fn from_path(path: &std::path::Path) -> Result<SimConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn preset(name: &str) -> Result<SimConfig, ConfigError> {
        let text = preset_text(name).ok_or_else(|| ConfigError::UnknownPreset(name.to_string()))?;
        Self::from_toml(text)
    }

    fn from_raw(raw: RawConfig) -> Result<SimConfig, ConfigError> {
        let v = &raw.validators;
        if v.count == 0 || v.count > MAX_VALIDATORS {
            return Err(invalid(format!("validators.count must be in 1..={MAX_VALIDATORS}")));
        }
        let g = v.gas_cap.parse("validators.gas_cap")?;
        if g == GasAmount::ZERO {
            return Err(invalid("validators.gas_cap must be positive"));
        }
        let rotation = match v.rotation.as_str() {
            "round-robin" => Rotation::RoundRobin,
            "uniform" => Rotation::Uniform { seed: raw.seed },
            other => return Err(invalid(format!("unknown rotation {other:?}"))),
        };
        let mut kinds = vec![ValidatorKind::Honest; v.count];
        for &m in &v.misdeclaring {
            *kinds
                .get_mut(m)
                .ok_or_else(|| invalid(format!("misdeclaring validator {m} out of range")))? =
                ValidatorKind::Misdeclaring;
        }
        let mode = raw.mode.kind;
        let builder = raw.mode.builder.unwrap_or(match mode {
            Mode::Coupled => BuilderKind::Knapsack,
            Mode::Decoupled => BuilderKind::GreedyEst,
            Mode::Partial => BuilderKind::Partial,
        });
        if !builder.allowed_in(mode) {
            return Err(invalid(format!(
                "builder {} is not available in {} mode",
                builder.as_str(),
                mode.as_str()
            )));
        }
        let c_base = raw.mode.c_base;
        let cost_model = match raw.mode.cost_model.as_str() {
            "current" => CostModel::Current { c_base },
            "full-estimate" => CostModel::FullEstimate { c_base },
            other => return Err(invalid(format!("unknown cost model {other:?}"))),
        };
        let timing = TimingModel {
            delta_e: raw.timing.delta_e,
            delta_c: raw.timing.delta_c,
            delta_b: raw.timing.delta_b,
            exec_offset: raw.mode.exec_offset_ms,
        };
        if !timing.is_valid() {
            return Err(invalid("timing values must all be positive"));
        }
        let workload = WorkloadSpec {
            honest: raw.workload.spec()?,
            adversary: raw.adversary.spec()?,
        };
        if let AdversarySpec::RationalValidator { validator, .. } = workload.adversary {
            if validator >= v.count {
                return Err(invalid(format!("rational validator {validator} out of range")));
            }
        }
        Ok(SimConfig {
            seed: raw.seed,
            output_dir: raw.output_dir,
            run: RunConfig {
                mode,
                builder,
                caps: Caps { n: v.count, g },
                rounds: raw.rounds,
                lag: raw.mode.lag,
                cost_model,
                timing,
                validators: ValidatorSet::new(kinds, rotation),
                rotation,
                reorder_hot: raw.mode.reorder_hot,
            },
            workload,
        })
    }

    pub fn assembly_params(&self) -> AssemblyParams {
        AssemblyParams {
            rounds: self.run.rounds,
            n: self.run.caps.n,
            g: self.run.caps.g,
            mode: self.run.mode,
            builder: self.run.builder,
            lag: self.run.effective_lag(),
            seed: self.seed,
        }
    }

    pub fn workload(&self) -> Result<Workload, AdversaryError> {
        assemble(&self.workload, &self.assembly_params())
    }

    /// Assembles the workload and runs it.
    pub fn execute(&self) -> Result<RunRecord, ScenarioError> {
        let wl = self.workload()?;
        Ok(run(&self.run, &wl)?)
    }

    /// Same scenario under another mode and its default builder; the
    /// workload is replayed unchanged.
    pub fn with_mode(&self, mode: Mode, lag: Option<u64>) -> SimConfig {
        let mut c = self.clone();
        c.run.mode = mode;
        c.run.lag = lag;
        c.run.builder = match mode {
            Mode::Coupled => BuilderKind::Knapsack,
            Mode::Decoupled => BuilderKind::GreedyEst,
            Mode::Partial => BuilderKind::Partial,
        };
        c
    }
}

pub const PRESET_NAMES: [&str; 7] = [
    "coupled-baseline",
    "decoupled-gaslight",
    "decoupled-drain",
    "rational-fairness",
    "partial-secure",
    "partial-latency",
    "partial-throughput",
];

/// TOML source of a bundled preset.
pub fn preset_text(name: &str) -> Option<&'static str> {
    Some(match name {
        "coupled-baseline" => include_str!("../presets/coupled-baseline.toml"),
        "decoupled-gaslight" => include_str!("../presets/decoupled-gaslight.toml"),
        "decoupled-drain" => include_str!("../presets/decoupled-drain.toml"),
        "rational-fairness" => include_str!("../presets/rational-fairness.toml"),
        "partial-secure" => include_str!("../presets/partial-secure.toml"),
        "partial-latency" => include_str!("../presets/partial-latency.toml"),
        "partial-throughput" => include_str!("../presets/partial-throughput.toml"),
        _ => return None,
    })
}
