// Copyright (c) The Gaslight Contributors
// SPDX-License-Identifier: Apache-2.0

//! End-to-end runs of small hand-checkable scenarios.

use gaslight_core::adversary::{AdversarySpec, ConflictMode, ACCOMPLICE, ADVERSARY};
use gaslight_core::builders::Mode;
use gaslight_core::config::SimConfig;
use gaslight_core::exec::AbortReason;
use gaslight_core::metrics::{default_epsilon, fairness, throughput, tx_latency};
use gaslight_core::model::{StateView, TxTag};
use gaslight_core::protocol::{run, RunRecord, ValidatorKind, ValidatorSet};
use gaslight_core::Rational;

fn preset(name: &str) -> SimConfig {
    SimConfig::preset(name).unwrap()
}

fn clean(r: &RunRecord) {
    assert!(r.violations.is_empty(), "{:?}", r.violations);
}

#[test]
fn congested_coupled_run_fills_every_block() {
    let mut cfg = preset("coupled-baseline");
    cfg.run.rounds = 100;
    let r = cfg.execute().unwrap();
    clean(&r);
    assert_eq!(r.executed().count(), 100);
    assert!(r.executed().all(|(_, x)| x.cr_res == Rational::from_integer(1)));
    assert_eq!(r.clock.slot_ms(), 1000);
    // every block carries exactly G of unit-price gas, so rewards are equal
    let f = fairness(&r, default_epsilon());
    assert!(f.fair);
    assert!(r.rewards().windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn zero_round_run_is_empty() {
    let mut cfg = preset("decoupled-gaslight");
    cfg.run.rounds = 0;
    let r = cfg.execute().unwrap();
    assert!(r.entries.is_empty());
    assert!(r.submitted.is_empty());
    assert!(throughput(&r).is_err());
}

#[test]
fn zero_lag_decoupled_matches_coupled_on_honest_traffic() {
    let mut cfg = preset("coupled-baseline");
    cfg.run.rounds = 30;
    let coupled = cfg.execute().unwrap();
    let dec = cfg.with_mode(Mode::Decoupled, Some(0)).execute().unwrap();
    clean(&coupled);
    clean(&dec);
    assert_eq!(dec.lag, 0);
    for ((ec, xc), (ed, xd)) in coupled.executed().zip(dec.executed()) {
        assert_eq!(ec.round, ed.round);
        assert_eq!(xc.exec_round, xd.exec_round);
        assert_eq!(xc.gas_executed, xd.gas_executed);
        assert_eq!(xc.outcomes.len(), xd.outcomes.len());
        assert!(xd.outcomes.iter().all(|o| o.is_executed()));
    }
}

#[test]
fn gaslit_blocks_execute_no_gas() {
    let r = preset("decoupled-gaslight").execute().unwrap();
    assert_eq!(r.lag, 2);
    let mut n = 0;
    for (_, x) in r.attacked_blocks() {
        n += 1;
        assert_eq!(x.gas_executed.micro(), 0);
        // the opening block also carries the setup transaction
        assert!(x.outcomes.iter().all(|o| o.tag.is_adversarial() && o.charged == 0));
        assert!(x.outcomes.iter().filter(|o| o.tag == TxTag::Junk).count() >= 3);
    }
    assert!(n > 0);
}

#[test]
fn mistimed_trigger_leaves_blocks_full() {
    // without the setup transaction the trigger never flips, so junk pays
    // its way down the expensive branch
    let cfg = preset("decoupled-gaslight");
    let mut wl = cfg.workload().unwrap();
    for batch in &mut wl.arrivals {
        batch.retain(|t| t.tag != TxTag::Setup);
    }
    let r = run(&cfg.run, &wl).unwrap();
    clean(&r);
    assert_eq!(r.attacked_blocks().count(), 0);
    let mut junk_blocks = 0;
    for (_, x) in r.executed() {
        if x.outcomes.iter().any(|o| o.tag == TxTag::Junk) {
            junk_blocks += 1;
            assert_eq!(x.cr_res, Rational::from_integer(1));
        }
    }
    assert!(junk_blocks > 0);
    for (_, o) in r.outcomes().filter(|(_, o)| o.tag == TxTag::Junk) {
        let est = wl.submitted().find(|t| t.id == o.tx_id).unwrap().est;
        assert!(o.is_executed());
        assert_eq!(o.gas_consumed, est);
    }
}

#[test]
fn drain_pays_for_itself_then_leaves_debts() {
    let cfg = preset("decoupled-drain");
    let r = cfg.execute().unwrap();
    clean(&r);
    let drain: Vec<_> = r.outcomes().filter(|(_, o)| o.tag == TxTag::Drain).collect();
    assert_eq!(drain.len(), 1);
    let d = drain[0].1;
    // full-estimate charge 2 · 100 micro-gas, debited before the transfer
    assert_eq!((d.charged, d.uncollected), (200, 0));
    assert_eq!(r.final_state.balance(ACCOMPLICE), 800);
    assert_eq!(r.final_state.balance(ADVERSARY), 0);
    let attack: Vec<_> = r.outcomes().filter(|(_, o)| o.tag == TxTag::DrainAttack).collect();
    assert_eq!(attack.len(), 1);
    assert_eq!((attack[0].1.charged, attack[0].1.uncollected), (0, 500));

    let coupled = cfg.with_mode(Mode::Coupled, None).execute().unwrap();
    clean(&coupled);
    assert_eq!(coupled.total_uncollected(), 0);
    // the state-aware builder never proposes the unpayable transaction
    assert!(coupled.outcomes().all(|(_, o)| o.tag != TxTag::DrainAttack));
}

#[test]
fn misdeclaring_proposer_is_excluded() {
    let mut cfg = preset("partial-throughput");
    let kinds = vec![
        ValidatorKind::Honest,
        ValidatorKind::Misdeclaring,
        ValidatorKind::Honest,
        ValidatorKind::Honest,
    ];
    cfg.run.validators = ValidatorSet::new(kinds, cfg.run.rotation);
    let r = cfg.execute().unwrap();
    clean(&r);
    let at = r.validators[1].excluded_at.expect("validator 1 excluded");
    let mismatched: Vec<_> = r
        .outcomes()
        .filter(|(_, o)| o.abort_reason == Some(AbortReason::AccessMismatch))
        .collect();
    assert!(!mismatched.is_empty());
    assert!(mismatched.iter().all(|(e, o)| e.proposer == 1 && o.charged == 0));
    // only the proposal already in flight may still come from it
    assert!(r.entries.iter().filter(|e| e.proposer == 1).all(|e| e.round <= at));
    assert!(r.validators.iter().enumerate().all(|(v, s)| v == 1 || s.excluded_at.is_none()));
}

#[test]
fn rational_validator_gains_nothing_under_partial_coupling() {
    // uniform prices so that any reward gap comes from the rational proposer
    let mut cfg = preset("rational-fairness");
    cfg.workload.honest.price_min = 1;
    cfg.workload.honest.price_max = 1;
    let dec = cfg.execute().unwrap();
    assert!(!fairness(&dec, default_epsilon()).fair);

    let r = cfg.with_mode(Mode::Partial, None).execute().unwrap();
    clean(&r);
    assert_eq!(r.attacked_blocks().count(), 0);
    let f = fairness(&r, default_epsilon());
    assert!(f.fair, "rewards {:?}", f.rewards);
}

#[test]
fn symmetric_honest_run_is_fair() {
    let mut cfg = preset("rational-fairness");
    cfg.workload.adversary = AdversarySpec::None;
    cfg.workload.honest.price_min = 1;
    cfg.workload.honest.price_max = 1;
    cfg.workload.honest.rate = 8;
    let r = cfg.execute().unwrap();
    clean(&r);
    let f = fairness(&r, default_epsilon());
    assert!(f.fair);
    assert_eq!(f.max_deviation, Some(Rational::from_integer(0)));
}

#[test]
fn inclusion_latency_is_one_round_plus_lag() {
    let mut cfg = preset("partial-latency");
    cfg.workload.honest.conflict = ConflictMode::Independent;
    for (mode, lag, want) in [(Mode::Coupled, None, 1), (Mode::Decoupled, Some(2), 3)] {
        let r = cfg.with_mode(mode, lag).execute().unwrap();
        clean(&r);
        let mut n = 0;
        for &id in r.submitted.keys() {
            assert_eq!(tx_latency(&r, id).unwrap().rounds, want, "{mode:?}");
            n += 1;
        }
        assert!(n > 0);
    }
}

#[test]
fn conflicting_traffic_waits_at_most_one_extra_slot_under_partial() {
    let cfg = preset("partial-latency");
    let r = cfg.execute().unwrap();
    clean(&r);
    let slot = r.clock.slot_ms();
    for &id in r.submitted.keys() {
        let l = tx_latency(&r, id).unwrap();
        // natural lag 1 means two pipelined slots at best, three if the
        // transaction had to sit out a pending conflict
        assert!(l.rounds >= 2 && l.rounds <= 3, "{id}: {l:?}");
        assert!(l.ms <= 3 * slot + slot, "{id}: {l:?}");
    }
}

#[test]
fn invariant_checker_stays_quiet_on_every_preset() {
    for name in gaslight_core::config::PRESET_NAMES {
        let r = preset(name).execute().unwrap();
        clean(&r);
        assert_eq!(r.submitted.len(), r.final_mempool + r.entries.iter().map(|e| e.tx_ids.len()).sum::<usize>());
    }
}
