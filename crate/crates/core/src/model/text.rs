// Copyright (c) The Gaslight Contributors
// SPDX-License-Identifier: Apache-2.0

//! Line-oriented text format for transactions and states.
//!
//! One record per line, fields separated by tabs, `#` starts a comment line.
//!
//! ```text
//! tx  <id> <sender> <price> <est_micro> <submit_round> <tag> <reads> <writes> <steps>
//! cell <address> <value>
//! settled <round>
//! ```
//!
//! `reads`/`writes` are comma-separated addresses. `steps` is a `;`-separated
//! list of `guard|gas_micro|effects`, where `guard` is `addr<op>value` with
//! `op` one of `< <= = >= >`, and `effects` is a comma-separated list of
//! `w:addr=value` or `t:account=amount`. A lone `-` stands for an empty list
//! or an absent guard.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use super::gas::GasAmount;
use super::state::{AccountId, Address, StateSnapshot};
use super::tx::{Comparator, Effect, Guard, Step, Transaction, TxId, TxTag};

#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct TextError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> TextError {
    TextError {
        line,
        message: message.into(),
    }
}

fn join_addrs(set: &BTreeSet<Address>) -> String {
    if set.is_empty() {
        return "-".into();
    }
    set.iter().map(|a| a.0.to_string()).collect::<Vec<_>>().join(",")
}

fn render_step(step: &Step) -> String {
    let guard = match step.guard {
        Some(g) => format!("{}{}{}", g.addr.0, g.cmp.symbol(), g.value),
        None => "-".into(),
    };
    let effects = if step.effects.is_empty() {
        "-".to_string()
    } else {
        step.effects
            .iter()
            .map(|e| match e {
                Effect::WriteCell(a, v) => format!("w:{}={}", a.0, v),
                Effect::Transfer { to, amount } => format!("t:{}={}", to.0, amount),
            })
            .collect::<Vec<_>>()
            .join(",")
    };
    format!("{guard}|{}|{effects}", step.gas_cost.micro())
}

pub fn render_tx(tx: &Transaction) -> String {
    let steps = if tx.steps.is_empty() {
        "-".to_string()
    } else {
        tx.steps.iter().map(render_step).collect::<Vec<_>>().join(";")
    };
    format!(
        "tx\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
        tx.id.0,
        tx.sender.0,
        tx.price,
        tx.est.micro(),
        tx.submit_round,
        tx.tag.as_str(),
        join_addrs(&tx.declared_reads),
        join_addrs(&tx.declared_writes),
        steps
    )
}

pub fn render_state(state: &StateSnapshot) -> String {
    let mut out = format!("settled\t{}\n", state.settled_round);
    for (a, v) in state.cells() {
        let _ = writeln!(out, "cell\t{}\t{}", a.0, v);
    }
    out
}

fn num<T: std::str::FromStr>(line: usize, field: &str, what: &str) -> Result<T, TextError> {
    field
        .parse()
        .map_err(|_| err(line, format!("bad {what}: {field:?}")))
}

fn parse_addrs(line: usize, field: &str) -> Result<BTreeSet<Address>, TextError> {
    if field == "-" {
        return Ok(BTreeSet::new());
    }
    field
        .split(',')
        .map(|a| num(line, a, "address").map(Address))
        .collect()
}

fn parse_guard(line: usize, s: &str) -> Result<Option<Guard>, TextError> {
    if s == "-" {
        return Ok(None);
    }
    let pos = s
        .find(['<', '>', '='])
        .ok_or_else(|| err(line, format!("guard without comparator: {s:?}")))?;
    let (addr, rest) = s.split_at(pos);
    let (cmp, value) = if let Some(v) = rest.strip_prefix("<=") {
        (Comparator::Le, v)
    } else if let Some(v) = rest.strip_prefix(">=") {
        (Comparator::Ge, v)
    } else if let Some(v) = rest.strip_prefix('<') {
        (Comparator::Lt, v)
    } else if let Some(v) = rest.strip_prefix('>') {
        (Comparator::Gt, v)
    } else {
        (Comparator::Eq, &rest[1..])
    };
    Ok(Some(Guard {
        addr: Address(num(line, addr, "guard address")?),
        cmp,
        value: num(line, value, "guard constant")?,
    }))
}

fn parse_effect(line: usize, s: &str) -> Result<Effect, TextError> {
    let (kind, body) = s
        .split_once(':')
        .ok_or_else(|| err(line, format!("bad effect: {s:?}")))?;
    let (target, value) = body
        .split_once('=')
        .ok_or_else(|| err(line, format!("bad effect: {s:?}")))?;
    match kind {
        "w" => Ok(Effect::WriteCell(
            Address(num(line, target, "address")?),
            num(line, value, "value")?,
        )),
        "t" => Ok(Effect::Transfer {
            to: AccountId(num(line, target, "account")?),
            amount: num(line, value, "amount")?,
        }),
        _ => Err(err(line, format!("unknown effect kind {kind:?}"))),
    }
}

fn parse_step(line: usize, s: &str) -> Result<Step, TextError> {
    let mut parts = s.split('|');
    let (Some(g), Some(gas), Some(effects), None) =
        (parts.next(), parts.next(), parts.next(), parts.next())
    else {
        return Err(err(line, format!("step needs three parts: {s:?}")));
    };
    let effects = if effects == "-" {
        Vec::new()
    } else {
        effects
            .split(',')
            .map(|e| parse_effect(line, e))
            .collect::<Result<_, _>>()?
    };
    Ok(Step {
        guard: parse_guard(line, g)?,
        effects,
        gas_cost: GasAmount::from_micro(num(line, gas, "gas")?),
    })
}

pub fn parse_tx_line(line: usize, text: &str) -> Result<Transaction, TextError> {
    let f: Vec<&str> = text.split('\t').collect();
    if f.len() != 10 || f[0] != "tx" {
        return Err(err(line, "expected a tx record with 10 fields"));
    }
    let steps = if f[9] == "-" {
        Vec::new()
    } else {
        f[9].split(';')
            .map(|s| parse_step(line, s))
            .collect::<Result<_, _>>()?
    };
    Ok(Transaction {
        id: TxId(num(line, f[1], "id")?),
        sender: AccountId(num(line, f[2], "sender")?),
        price: num(line, f[3], "price")?,
        est: GasAmount::from_micro(num(line, f[4], "estimate")?),
        submit_round: num(line, f[5], "round")?,
        tag: TxTag::parse(f[6]).ok_or_else(|| err(line, format!("unknown tag {:?}", f[6])))?,
        declared_reads: parse_addrs(line, f[7])?,
        declared_writes: parse_addrs(line, f[8])?,
        steps,
    })
}

fn records(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

pub fn parse_txs(text: &str) -> Result<Vec<Transaction>, TextError> {
    records(text).map(|(n, l)| parse_tx_line(n, l)).collect()
}

pub fn parse_state(text: &str) -> Result<StateSnapshot, TextError> {
    let mut state = StateSnapshot::new();
    for (n, l) in records(text) {
        let f: Vec<&str> = l.split('\t').collect();
        match f.as_slice() {
            ["cell", a, v] => state.set(Address(num(n, a, "address")?), num(n, v, "value")?),
            ["settled", r] => state.settled_round = num(n, r, "round")?,
            _ => return Err(err(n, format!("unrecognized state record: {l:?}"))),
        }
    }
    Ok(state)
}
