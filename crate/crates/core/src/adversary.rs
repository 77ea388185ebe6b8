// Copyright (c) The Gaslight Contributors
// SPDX-License-Identifier: Apache-2.0

//! Honest and adversarial workload generators.
//!
//! Every generator is a pure function of its spec, the round and a seed.
//! [`assemble`] materializes a whole run's arrivals up front so the same
//! workload can be replayed under any integration mode.
//!
//! Account layout: validator `v` collects rewards in account `v`; the
//! adversary uses [`ADVERSARY`] and [`ACCOMPLICE`]; a rational validator
//! submits from `RATIONAL_CLIENT_BASE + v`; every honest transaction has its
//! own sender so honest traffic never conflicts unless asked to.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::builders::{BuilderKind, Mode};
use crate::model::{
    AccountId, Address, Comparator, Effect, GasAmount, Guard, StateSnapshot, Step, Transaction,
    TxId, TxRef, TxTag, MICRO_PER_UNIT,
};

pub const MAX_VALIDATORS: usize = 1024;
pub const ADVERSARY: AccountId = AccountId(1024);
pub const ACCOMPLICE: AccountId = AccountId(1025);
pub const RATIONAL_CLIENT_BASE: u64 = 1100;
const HONEST_BASE: u64 = 1 << 20;
const ADVERSARY_SCRATCH_BASE: u64 = 1 << 36;

/// Cell whose value flips every junk transaction onto its free exit.
pub const TRIGGER: Address = Address::data(0);
/// Cell read and written by every transaction of a hot-cell workload.
pub const HOT: Address = Address::data(1);

const SRC_HONEST: u8 = 0;
const SRC_JUNK: u8 = 1;
const SRC_SETUP: u8 = 2;
const SRC_DECOY: u8 = 3;
const SRC_DRAIN: u8 = 4;
const SRC_RATIONAL: u8 = 5;

pub fn rational_client(validator: usize) -> AccountId {
    AccountId(RATIONAL_CLIENT_BASE + validator as u64)
}

fn honest_slot(round: u64, k: u32) -> u64 {
    HONEST_BASE + (round << 16) + k as u64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum EstPolicy {
    Exact,
    /// `est = min(1, gas · factor)`, with the factor in parts per million.
    Overestimate { factor_ppm: u64 },
}

impl EstPolicy {
    pub fn apply(self, gas: GasAmount) -> GasAmount {
        match self {
            EstPolicy::Exact => gas,
            EstPolicy::Overestimate { factor_ppm } => {
                let scaled = gas.micro() as u128 * factor_ppm as u128 / 1_000_000;
                GasAmount::from_micro(scaled.min(MICRO_PER_UNIT as u128) as u64)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConflictMode {
    /// Each transaction writes a private cell.
    Independent,
    /// Each transaction reads and writes [`HOT`].
    HotCell,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HonestSpec {
    /// Transactions submitted per round from round 1 on.
    pub rate: u32,
    /// Transactions present at genesis.
    pub initial: u32,
    /// Discrete gas distribution as `(gas, weight)` pairs.
    pub gas: Vec<(GasAmount, u32)>,
    pub est: EstPolicy,
    pub price_min: u64,
    pub price_max: u64,
    /// Genesis balance of every honest sender.
    pub balance: i64,
    pub conflict: ConflictMode,
    /// Last round with honest arrivals; `None` means every round.
    pub until_round: Option<u64>,
}

impl Default for HonestSpec {
    fn default() -> Self {
        HonestSpec {
            rate: 0,
            initial: 0,
            gas: vec![(GasAmount::ONE, 1)],
            est: EstPolicy::Exact,
            price_min: 1,
            price_max: 1,
            balance: 1 << 40,
            conflict: ConflictMode::Independent,
            until_round: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GaslightSpec {
    /// Estimate (and expensive-path gas) of each junk transaction; `None`
    /// means `G/N`.
    pub junk_est: Option<GasAmount>,
    /// Junk transactions per round; `None` means `N`.
    pub junk_count: Option<u32>,
    /// Amount by which junk outbids the best honest price.
    pub price_premium: u64,
    /// Submit the estimate-exact decoys the state-aware oracle would pick.
    pub decoys: bool,
    /// Genesis balance of the submitting account.
    pub balance: i64,
    /// Pipeline lag the attack is timed for.
    pub lag_exploited: u64,
}

impl Default for GaslightSpec {
    fn default() -> Self {
        GaslightSpec {
            junk_est: None,
            junk_count: None,
            price_premium: 100,
            decoys: true,
            balance: 0,
            lag_exploited: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DrainSpec {
    pub balance: i64,
    /// Round in which the draining transfer is submitted.
    pub drain_round: u64,
    /// Rounds between the drain and the attack submissions.
    pub offset: u64,
    pub drain_est: GasAmount,
    pub drain_price: u64,
    pub attack_est: GasAmount,
    pub attack_price: u64,
    pub attack_count: u32,
}

impl Default for DrainSpec {
    fn default() -> Self {
        DrainSpec {
            balance: 1000,
            drain_round: 1,
            offset: 2,
            drain_est: GasAmount::from_micro(100),
            drain_price: 2,
            attack_est: GasAmount::from_micro(500),
            attack_price: 1,
            attack_count: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub enum AdversarySpec {
    #[default]
    None,
    Gaslight(GaslightSpec),
    FundDrain(DrainSpec),
    /// Validator `validator` submits junk as a client and leaves it out of
    /// its own blocks.
    RationalValidator {
        validator: usize,
        junk: GaslightSpec,
    },
}

impl AdversarySpec {
    pub fn kind_str(&self) -> &'static str {
        match self {
            AdversarySpec::None => "none",
            AdversarySpec::Gaslight(_) => "gaslight",
            AdversarySpec::FundDrain(_) => "fund-drain",
            AdversarySpec::RationalValidator { .. } => "rational-validator",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct WorkloadSpec {
    pub honest: HonestSpec,
    pub adversary: AdversarySpec,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum AdversaryError {
    #[error("gaslighting needs the greedy-est builder to predict selection, got {0}")]
    UnpredictableBuilder(&'static str),
    #[error("gaslighting needs an execution lag of at least 2 rounds, got {0}")]
    LagTooShort(u64),
    #[error("rational validator {validator} is outside the validator set of {n}")]
    NoSuchValidator { validator: usize, n: usize },
    #[error("honest gas distribution is empty or has zero total weight")]
    EmptyGasDistribution,
    #[error("honest price range {0}..={1} is empty")]
    EmptyPriceRange(u64, u64),
    #[error("gas value {0} is outside [0, 1]")]
    GasOutOfRange(GasAmount),
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn draw_gas(rng: &mut ChaCha8Rng, dist: &[(GasAmount, u32)]) -> GasAmount {
    let total: u64 = dist.iter().map(|(_, w)| *w as u64).sum();
    let mut pick = rng.gen_range(0..total);
    for (g, w) in dist {
        if pick < *w as u64 {
            return *g;
        }
        pick -= *w as u64;
    }
    unreachable!("weights sum to total")
}

fn check_honest(spec: &HonestSpec) -> Result<(), AdversaryError> {
    if spec.gas.iter().map(|(_, w)| *w as u64).sum::<u64>() == 0 {
        return Err(AdversaryError::EmptyGasDistribution);
    }
    if let Some((g, _)) = spec.gas.iter().find(|(g, _)| !g.is_normalized()) {
        return Err(AdversaryError::GasOutOfRange(*g));
    }
    if spec.price_min > spec.price_max {
        return Err(AdversaryError::EmptyPriceRange(spec.price_min, spec.price_max));
    }
    Ok(())
}

/// Honest arrivals for `round`: `initial` transactions at round 0, `rate`
/// afterwards. Each is one step with gas from the distribution, its
/// estimate set by the policy, and declarations equal to its accesses.
pub fn gen_honest(spec: &HonestSpec, round: u64, seed: u64) -> Vec<Transaction> {
    let count = if round == 0 {
        spec.initial
    } else if spec.until_round.is_some_and(|u| round > u) {
        0
    } else {
        spec.rate
    };
    if count == 0 || check_honest(spec).is_err() {
        return Vec::new();
    }
    let mut rng = rng_for(seed, round);
    (0..count)
        .map(|k| {
            let gas = draw_gas(&mut rng, &spec.gas);
            let price = rng.gen_range(spec.price_min..=spec.price_max);
            let sender = AccountId(honest_slot(round, k));
            let bal = sender.balance_cell();
            let (step, reads, writes) = match spec.conflict {
                ConflictMode::Independent => {
                    let cell = Address::data(honest_slot(round, k));
                    (
                        Step::plain(gas, vec![Effect::WriteCell(cell, 1)]),
                        BTreeSet::from([bal]),
                        BTreeSet::from([bal, cell]),
                    )
                }
                ConflictMode::HotCell => (
                    Step::guarded(
                        Guard::new(HOT, Comparator::Ge, 0),
                        gas,
                        vec![Effect::WriteCell(HOT, round as i64)],
                    ),
                    BTreeSet::from([bal, HOT]),
                    BTreeSet::from([bal, HOT]),
                ),
            };
            Transaction {
                id: TxId::pack(round, SRC_HONEST, k),
                sender,
                price,
                est: spec.est.apply(gas),
                steps: vec![step],
                declared_reads: reads,
                declared_writes: writes,
                submit_round: round,
                tag: TxTag::Honest,
            }
        })
        .collect()
}

fn junk_tx(id: TxId, sender: AccountId, round: u64, est: GasAmount, price: u64) -> Transaction {
    let scratch = Address::data(ADVERSARY_SCRATCH_BASE + (id.0 & 0xFF_FFFF_FFFF));
    Transaction {
        id,
        sender,
        price,
        est,
        steps: vec![
            // free exit once the trigger is set
            Step::guarded(Guard::new(TRIGGER, Comparator::Lt, 1), GasAmount::ZERO, vec![]),
            Step::plain(est, vec![Effect::WriteCell(scratch, 1)]),
        ],
        declared_reads: BTreeSet::from([TRIGGER, sender.balance_cell()]),
        declared_writes: BTreeSet::from([sender.balance_cell(), scratch]),
        submit_round: round,
        tag: TxTag::Junk,
    }
}

fn setup_tx(id: TxId, sender: AccountId, est: GasAmount, price: u64) -> Transaction {
    Transaction {
        id,
        sender,
        price,
        est,
        steps: vec![Step::plain(GasAmount::ZERO, vec![Effect::WriteCell(TRIGGER, 1)])],
        declared_reads: BTreeSet::from([sender.balance_cell()]),
        declared_writes: BTreeSet::from([sender.balance_cell(), TRIGGER]),
        submit_round: 0,
        tag: TxTag::Setup,
    }
}

/// Shared knobs for junk generation, resolved against the block caps.
#[derive(Clone, Copy, Debug)]
pub struct JunkPlan {
    pub est: GasAmount,
    pub count: u32,
    pub price: u64,
}

impl JunkPlan {
    pub fn resolve(spec: &GaslightSpec, n: usize, g: GasAmount, honest_max_price: u64) -> JunkPlan {
        JunkPlan {
            est: spec
                .junk_est
                .unwrap_or_else(|| GasAmount::from_micro((g.micro() / n.max(1) as u64).min(MICRO_PER_UNIT))),
            count: spec.junk_count.unwrap_or(n as u32),
            price: honest_max_price + spec.price_premium,
        }
    }
}

/// Gaslighting arrivals for `round`.
///
/// Round 0 carries the setup transaction that flips [`TRIGGER`] (priced just
/// above the junk so it lands first), the decoys, and the first junk batch.
/// Every later round adds another junk batch. Junk has estimate `G/N`, outbids
/// every honest price, and runs for free once the trigger is set.
pub fn gen_gaslight(
    spec: &GaslightSpec,
    round: u64,
    target_builder: BuilderKind,
    lag: u64,
    n: usize,
    g: GasAmount,
    honest_max_price: u64,
) -> Result<Vec<Transaction>, AdversaryError> {
    if target_builder != BuilderKind::GreedyEst {
        return Err(AdversaryError::UnpredictableBuilder(target_builder.as_str()));
    }
    if lag < 2 {
        return Err(AdversaryError::LagTooShort(lag));
    }
    Ok(gaslight_batch(spec, round, n, g, honest_max_price, ADVERSARY, SRC_JUNK))
}

fn gaslight_batch(
    spec: &GaslightSpec,
    round: u64,
    n: usize,
    g: GasAmount,
    honest_max_price: u64,
    sender: AccountId,
    source: u8,
) -> Vec<Transaction> {
    let plan = JunkPlan::resolve(spec, n, g, honest_max_price);
    let mut out = Vec::new();
    if round == 0 {
        out.push(setup_tx(TxId::pack(0, SRC_SETUP, source as u32), sender, plan.est, plan.price + 1));
        if spec.decoys {
            let decoys = g.micro().div_ceil(MICRO_PER_UNIT);
            for k in 0..decoys as u32 {
                out.push(Transaction {
                    id: TxId::pack(0, SRC_DECOY, k),
                    sender,
                    price: 1,
                    est: GasAmount::ONE,
                    steps: vec![Step::plain(GasAmount::ONE, vec![])],
                    declared_reads: BTreeSet::from([sender.balance_cell()]),
                    declared_writes: BTreeSet::from([sender.balance_cell()]),
                    submit_round: 0,
                    tag: TxTag::Decoy,
                });
            }
        }
    }
    for k in 0..plan.count {
        out.push(junk_tx(TxId::pack(round, source, k), sender, round, plan.est, plan.price));
    }
    out
}

/// Fund-drain arrivals: at `drain_round` a top-priced transfer of the whole
/// balance to [`ACCOMPLICE`]; `offset` rounds later, chargeable
/// transactions from the emptied account.
pub fn gen_fund_drain(spec: &DrainSpec, round: u64) -> Vec<Transaction> {
    let sender = ADVERSARY;
    let bal = sender.balance_cell();
    if round == spec.drain_round {
        return vec![Transaction {
            id: TxId::pack(round, SRC_DRAIN, 0),
            sender,
            price: spec.drain_price,
            est: spec.drain_est,
            steps: vec![Step::plain(
                spec.drain_est,
                vec![Effect::Transfer {
                    to: ACCOMPLICE,
                    amount: spec.balance,
                }],
            )],
            declared_reads: BTreeSet::from([bal]),
            declared_writes: BTreeSet::from([bal, ACCOMPLICE.balance_cell()]),
            submit_round: round,
            tag: TxTag::Drain,
        }];
    }
    if round == spec.drain_round + spec.offset {
        return (0..spec.attack_count)
            .map(|k| {
                let scratch = Address::data(ADVERSARY_SCRATCH_BASE + (round << 16) + k as u64);
                Transaction {
                    id: TxId::pack(round, SRC_DRAIN, k + 1),
                    sender,
                    price: spec.attack_price,
                    est: spec.attack_est,
                    steps: vec![Step::plain(spec.attack_est, vec![Effect::WriteCell(scratch, 1)])],
                    declared_reads: BTreeSet::from([bal]),
                    declared_writes: BTreeSet::from([bal, scratch]),
                    submit_round: round,
                    tag: TxTag::DrainAttack,
                }
            })
            .collect();
    }
    Vec::new()
}

/// Client-side submissions of a rational validator: a gaslighting batch
/// every round from its own client account.
pub fn rational_submissions(
    spec: &GaslightSpec,
    validator: usize,
    round: u64,
    n: usize,
    g: GasAmount,
    honest_max_price: u64,
) -> Vec<Transaction> {
    gaslight_batch(spec, round, n, g, honest_max_price, rational_client(validator), SRC_RATIONAL)
}

/// Block filter a rational validator applies when it proposes: drop its
/// own client's transactions.
pub fn rational_filter(validator: usize, mempool: &[TxRef]) -> Vec<TxRef> {
    let me = rational_client(validator);
    mempool.iter().filter(|t| t.sender != me).cloned().collect()
}

/// Everything the assembler needs to know about the run.
#[derive(Clone, Copy, Debug)]
pub struct AssemblyParams {
    pub rounds: u64,
    pub n: usize,
    pub g: GasAmount,
    pub mode: Mode,
    pub builder: BuilderKind,
    pub lag: u64,
    pub seed: u64,
}

/// A run's complete input: genesis state and per-round arrivals.
/// `arrivals[r]` holds the transactions submitted in round `r`; they join
/// the mempool used to build block `r + 1`.
#[derive(Clone, Debug, Default)]
pub struct Workload {
    pub initial_state: StateSnapshot,
    pub arrivals: Vec<Vec<TxRef>>,
    pub rational: Option<usize>,
}

impl Workload {
    pub fn submitted(&self) -> impl Iterator<Item = &TxRef> + '_ {
        self.arrivals.iter().flatten()
    }
}

/// Materializes the workload for `params.rounds` rounds.
pub fn assemble(spec: &WorkloadSpec, params: &AssemblyParams) -> Result<Workload, AdversaryError> {
    check_honest(&spec.honest)?;
    let mut state = StateSnapshot::new();
    let mut arrivals: Vec<Vec<TxRef>> = Vec::with_capacity(params.rounds as usize);
    let honest_max = spec.honest.price_max;
    let mut rational = None;
    match &spec.adversary {
        AdversarySpec::Gaslight(gs) => {
            // validate once; the per-round calls below cannot fail afterwards
            gen_gaslight(gs, 0, params.builder, params.lag, params.n, params.g, honest_max)
                .map(|_| ())
                .or_else(|e| match params.mode {
                    // replaying an attack workload under another mode is allowed
                    Mode::Decoupled => Err(e),
                    _ => Ok(()),
                })?;
            state.set(ADVERSARY.balance_cell(), gs.balance);
        }
        AdversarySpec::FundDrain(ds) => state.set(ADVERSARY.balance_cell(), ds.balance),
        AdversarySpec::RationalValidator { validator, junk } => {
            if *validator >= params.n {
                return Err(AdversaryError::NoSuchValidator {
                    validator: *validator,
                    n: params.n,
                });
            }
            state.set(rational_client(*validator).balance_cell(), junk.balance);
            rational = Some(*validator);
        }
        AdversarySpec::None => {}
    }
    for round in 0..params.rounds {
        let mut batch: Vec<Transaction> = gen_honest(&spec.honest, round, params.seed);
        for tx in &batch {
            state.set(tx.sender.balance_cell(), spec.honest.balance);
        }
        match &spec.adversary {
            AdversarySpec::None => {}
            AdversarySpec::Gaslight(gs) => {
                batch.extend(gaslight_batch(gs, round, params.n, params.g, honest_max, ADVERSARY, SRC_JUNK))
            }
            AdversarySpec::FundDrain(ds) => batch.extend(gen_fund_drain(ds, round)),
            AdversarySpec::RationalValidator { validator, junk } => batch.extend(
                rational_submissions(junk, *validator, round, params.n, params.g, honest_max),
            ),
        }
        batch.sort_by_key(|t| t.id);
        arrivals.push(batch.into_iter().map(Arc::new).collect());
    }
    Ok(Workload {
        initial_state: state,
        arrivals,
        rational,
    })
}
