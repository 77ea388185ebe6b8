// Copyright (c) The Gaslight Contributors
// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;
use std::sync::Arc;

use gaslight_core::adversary::{AdversarySpec, HonestSpec, WorkloadSpec};
use gaslight_core::builders::{reorder_hot, Mode};
use gaslight_core::casestudy::{attack_economics, overestimation_stats, EconParams, TraceRow};
use gaslight_core::config::SimConfig;
use gaslight_core::exec::{execute_block, execute_tx, gas_actual, CostModel};
use gaslight_core::knapsack::max_weight;
use gaslight_core::model::{
    actual_access_sets, AccountId, Address, Block, Comparator, Effect, GasAmount, Guard,
    StateSnapshot, StateView, Step, Transaction, TxId, TxRef, TxTag,
};
use gaslight_core::protocol::run;
use gaslight_core::report::write_rounds_csv;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EIGHTH: u64 = 125_000;
const ACCOUNTS: u64 = 4;

/// Random program over data cells `base..base+span`, worst path gas ≤ 1.
fn random_tx(rng: &mut ChaCha8Rng, id: u64, base: u64, span: u64) -> Transaction {
    let cmps = [Comparator::Lt, Comparator::Le, Comparator::Eq, Comparator::Ge, Comparator::Gt];
    let n_steps = rng.gen_range(1..=4);
    let sender = AccountId(rng.gen_range(0..ACCOUNTS));
    let mut steps = Vec::new();
    let mut reads = BTreeSet::new();
    let mut writes = BTreeSet::from([sender.balance_cell()]);
    for _ in 0..n_steps {
        let guard = rng.gen_bool(0.5).then(|| {
            let a = Address::data(base + rng.gen_range(0..span));
            reads.insert(a);
            Guard::new(a, *cmps.choose(rng).unwrap(), rng.gen_range(-2..=2))
        });
        let mut effects = Vec::new();
        for _ in 0..rng.gen_range(0..=2) {
            if rng.gen_bool(0.8) {
                let a = Address::data(base + rng.gen_range(0..span));
                writes.insert(a);
                effects.push(Effect::WriteCell(a, rng.gen_range(-2..=2)));
            } else {
                let to = AccountId(rng.gen_range(0..ACCOUNTS));
                writes.insert(to.balance_cell());
                effects.push(Effect::Transfer {
                    to,
                    amount: rng.gen_range(0..50),
                });
            }
        }
        steps.push(Step {
            guard,
            effects,
            gas_cost: GasAmount::from_micro(EIGHTH * rng.gen_range(0..=2)),
        });
    }
    let worst: u64 = steps.iter().map(|s| s.gas_cost.micro()).sum();
    let est = EIGHTH * rng.gen_range(0..=worst / EIGHTH);
    // charging reads the balance too
    reads.insert(sender.balance_cell());
    let tx = Transaction {
        id: TxId(id),
        sender,
        price: rng.gen_range(0..=3),
        est: GasAmount::from_micro(est),
        steps,
        declared_reads: reads,
        declared_writes: writes,
        submit_round: 0,
        tag: TxTag::Honest,
    };
    tx.validate().expect("generator stays within bounds");
    tx
}

fn random_state(rng: &mut ChaCha8Rng, base: u64, span: u64) -> StateSnapshot {
    let mut st = StateSnapshot::new();
    for a in 0..ACCOUNTS {
        st.set(AccountId(a).balance_cell(), rng.gen_range(0..2_000_000));
    }
    for c in base..base + span {
        st.set(Address::data(c), rng.gen_range(-2..=2));
    }
    st
}

fn balance_total(st: &StateSnapshot) -> i64 {
    (0..ACCOUNTS).map(|a| st.balance(AccountId(a))).sum()
}

fn models() -> impl Strategy<Value = CostModel> {
    prop_oneof![
        (0u64..5).prop_map(|c_base| CostModel::Current { c_base }),
        (0u64..5).prop_map(|c_base| CostModel::FullEstimate { c_base }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn path_gas_never_exceeds_the_worst_path(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tx = random_tx(&mut rng, 1, 0, 4);
        let st = random_state(&mut rng, 0, 4);
        let g = gas_actual(&tx, &st);
        prop_assert!(g <= tx.worst_path_gas());
        prop_assert!(g <= GasAmount::ONE);
    }

    #[test]
    fn accesses_bound_the_effects(seed in any::<u64>(), model in models()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tx = random_tx(&mut rng, 1, 0, 6);
        let st = random_state(&mut rng, 0, 6);
        let acc = actual_access_sets(&tx, &st);
        let out = execute_tx(&tx, &st, model);
        for a in out.writes.keys() {
            prop_assert!(acc.writes.contains(a), "wrote {:?} outside the write set", a);
        }
        // perturbing a cell nobody reads leaves the outcome alone
        let untouched: Vec<u64> = (0..6).filter(|c| !acc.reads.contains(&Address::data(*c))).collect();
        if let Some(&c) = untouched.first() {
            let mut st2 = st.clone();
            st2.set(Address::data(c), 99);
            let out2 = execute_tx(&tx, &st2, model);
            prop_assert_eq!(out.gas_consumed, out2.gas_consumed);
            prop_assert_eq!(out.status, out2.status);
            let strip = |w: &std::collections::BTreeMap<Address, i64>| {
                w.iter().filter(|(a, _)| **a != Address::data(c)).map(|(a, v)| (*a, *v)).collect::<Vec<_>>()
            };
            prop_assert_eq!(strip(&out.writes), strip(&out2.writes));
        }
    }

    #[test]
    fn aborts_roll_back_everything_but_the_charge(seed in any::<u64>(), model in models()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tx = random_tx(&mut rng, 1, 0, 4);
        let st = random_state(&mut rng, 0, 4);
        let out = execute_tx(&tx, &st, model);
        if !out.is_executed() {
            prop_assert_eq!(out.gas_consumed, tx.est);
            prop_assert_eq!(out.assessed, model.burn_charge(&tx));
            for a in out.writes.keys() {
                prop_assert_eq!(*a, tx.sender.balance_cell());
            }
        }
    }

    #[test]
    fn disjoint_transactions_commute(seed in any::<u64>(), model in models()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // separate data ranges; keep transfers off so balances stay per-sender
        let mut a = random_tx(&mut rng, 1, 0, 3);
        let mut b = random_tx(&mut rng, 2, 10, 3);
        a.sender = AccountId(0);
        b.sender = AccountId(1);
        for t in [&mut a, &mut b] {
            for s in &mut t.steps {
                s.effects.retain(|e| matches!(e, Effect::WriteCell(..)));
            }
        }
        let mut st = random_state(&mut rng, 0, 3);
        for c in 10..13 {
            st.set(Address::data(c), rng.gen_range(-2..=2));
        }
        let (a, b): (TxRef, TxRef) = (Arc::new(a), Arc::new(b));
        let proposer = 3;
        let ab = execute_block(&Block::new(1, proposer, vec![a.clone(), b.clone()]), &st, model);
        let ba = execute_block(&Block::new(1, proposer, vec![b, a]), &st, model);
        prop_assert_eq!(ab.state, ba.state);
    }

    #[test]
    fn charges_balance_and_value_is_conserved(seed in any::<u64>(), model in models()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let st = random_state(&mut rng, 0, 4);
        let txs: Vec<TxRef> = (0..rng.gen_range(0..8)).map(|i| Arc::new(random_tx(&mut rng, i, 0, 4))).collect();
        let proposer = rng.gen_range(0..ACCOUNTS as usize);
        let ex = execute_block(&Block::new(1, proposer, txs), &st, model);
        for o in &ex.outcomes {
            prop_assert_eq!(o.assessed, o.charged + o.uncollected);
        }
        prop_assert_eq!(balance_total(&st), balance_total(&ex.state));
    }

    #[test]
    fn hot_reordering_keeps_the_result(seed in any::<u64>(), model in models()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let st = random_state(&mut rng, 0, 3);
        let txs: Vec<TxRef> = (0..rng.gen_range(0..8)).map(|i| Arc::new(random_tx(&mut rng, i, 0, 3))).collect();
        let mempool: Vec<TxRef> = (0..rng.gen_range(0..8)).map(|i| Arc::new(random_tx(&mut rng, 100 + i, 0, 3))).collect();
        let b = Block::new(1, 0, txs);
        let r = reorder_hot(&b, &mempool);
        let mut ids: Vec<_> = r.txs.iter().map(|t| t.id).collect();
        ids.sort();
        let mut want: Vec<_> = b.txs.iter().map(|t| t.id).collect();
        want.sort();
        prop_assert_eq!(ids, want);
        prop_assert_eq!(execute_block(&b, &st, model).state, execute_block(&r, &st, model).state);
    }

    #[test]
    fn trace_stats_ignore_row_order(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows: Vec<TraceRow> = (0..rng.gen_range(1..60))
            .map(|i| {
                let used = rng.gen_range(1..10_000u64);
                TraceRow { tx_id: i.to_string(), gas_limit: used + rng.gen_range(0..20_000), gas_used: used, price: None }
            })
            .collect();
        let a = overestimation_stats(&rows).unwrap();
        rows.shuffle(&mut rng);
        let b = overestimation_stats(&rows).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn economics_scale_linearly(k in 0.5f64..20.0, rewards in 1e6f64..1e9, fee in 1f64..200.0) {
        let base = EconParams { total_execution_rewards_usd: rewards, priority_fee_gwei: fee, ..EconParams::default() };
        let r = attack_economics(&base).unwrap();
        let scaled_rewards = attack_economics(&EconParams { total_execution_rewards_usd: rewards * k, ..base }).unwrap();
        let scaled_fee = attack_economics(&EconParams { priority_fee_gwei: fee * k, ..base }).unwrap();
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-9 * x.abs().max(y.abs()).max(1.0);
        prop_assert!(close(scaled_rewards.captured_rewards_usd, k * r.captured_rewards_usd));
        prop_assert!(close(scaled_rewards.attacker_cost_eth, r.attacker_cost_eth));
        prop_assert!(close(scaled_fee.attacker_cost_eth, k * r.attacker_cost_eth));
        prop_assert!(close(scaled_fee.captured_rewards_usd, r.captured_rewards_usd));
    }

    #[test]
    fn knapsack_finds_planted_exact_covers(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_cap = rng.gen_range(1..=8usize);
        let planted: Vec<u64> = (0..rng.gen_range(1..=n_cap)).map(|_| rng.gen_range(1..=1_000_000)).collect();
        let capacity: u64 = planted.iter().sum();
        let mut weights = planted.clone();
        weights.extend((0..rng.gen_range(0..12)).map(|_| rng.gen_range(1..=2_000_000u64)));
        weights.shuffle(&mut rng);
        let sel = max_weight(&weights, n_cap, capacity);
        prop_assert_eq!(sel.weight, capacity);
        prop_assert!(sel.count() <= n_cap);
        prop_assert_eq!(sel.chosen.iter().map(|&i| weights[i]).sum::<u64>(), capacity);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn decoupled_blocks_ignore_state(seed in 0u64..1000, cell in 0u64..64, value in -5i64..5) {
        let mut cfg = SimConfig::preset("decoupled-gaslight").unwrap();
        cfg.seed = seed;
        let wl = cfg.workload().unwrap();
        let mut perturbed = wl.clone();
        perturbed.initial_state.set(Address::data(cell), value);
        let a = run(&cfg.run, &wl).unwrap();
        let b = run(&cfg.run, &perturbed).unwrap();
        let ids = |r: &gaslight_core::protocol::RunRecord| r.entries.iter().map(|e| e.tx_ids.clone()).collect::<Vec<_>>();
        prop_assert_eq!(ids(&a), ids(&b));
    }

    #[test]
    fn partial_coupling_is_never_gaslit(seed in 0u64..1000, rate in 1u32..4, n in 2usize..6) {
        let mut cfg = SimConfig::preset("partial-secure").unwrap();
        cfg.seed = seed;
        cfg.run.caps.n = n;
        cfg.workload.honest.rate = rate;
        let r = cfg.execute().unwrap();
        prop_assert!(r.violations.is_empty(), "{:?}", r.violations);
        prop_assert_eq!(r.attacked_blocks().count(), 0);
        for (_, o) in r.outcomes() {
            prop_assert!(!(o.tag == TxTag::Junk && o.is_executed()));
        }
        // every proposer saw state that excluded only blocks still in flight
        for e in &r.entries {
            prop_assert!(e.build_settled_round.unwrap() + r.lag + 1 >= e.round);
        }
    }

    #[test]
    fn runs_are_deterministic(seed in 0u64..1000, preset in prop::sample::select(gaslight_core::config::PRESET_NAMES.to_vec())) {
        let mut cfg = SimConfig::preset(preset).unwrap();
        cfg.seed = seed;
        cfg.run.rounds = cfg.run.rounds.min(30);
        let csv = |c: &SimConfig| {
            let mut buf = Vec::new();
            write_rounds_csv(&c.execute().unwrap(), &mut buf).unwrap();
            buf
        };
        prop_assert_eq!(csv(&cfg), csv(&cfg));
    }
}

#[test]
fn honest_only_workload_never_flags_attacks() {
    let mut cfg = SimConfig::preset("decoupled-gaslight").unwrap();
    cfg.workload = WorkloadSpec {
        honest: HonestSpec {
            rate: 3,
            ..cfg.workload.honest.clone()
        },
        adversary: AdversarySpec::None,
    };
    for mode in [Mode::Coupled, Mode::Decoupled, Mode::Partial] {
        let r = cfg.with_mode(mode, None).execute().unwrap();
        assert!(r.violations.is_empty(), "{mode:?}: {:?}", r.violations);
        assert_eq!(r.attacked_blocks().count(), 0);
    }
}
