// Copyright (c) The Gaslight Contributors
// SPDX-License-Identifier: Apache-2.0

//! Exact 0/1 knapsack with a cardinality cap, by sparse dynamic programming.
//!
//! Items sharing a weight form a class. Within a class, items are ranked by
//! value descending and then by input position, so taking `j` items from a
//! class always means taking its top `j`. The DP walks classes in order of
//! first appearance and keeps, for every reachable `(weight, count)` pair, the
//! best value seen. Only reachable pairs are stored, which keeps the table
//! small whenever weights come from a modest set of distinct values.
//!
//! The optimum maximizes value, then minimizes count, then minimizes weight.
//! Among equal optima the first one reached wins, which favors taking fewer
//! items from earlier classes and earlier positions inside a class.

use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Item {
    pub weight: u64,
    pub value: u128,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Selection {
    /// Indices into the input slice, ascending.
    pub chosen: Vec<usize>,
    pub weight: u64,
    pub value: u128,
}

impl Selection {
    pub fn count(&self) -> usize {
        self.chosen.len()
    }
}

struct Class {
    weight: u64,
    /// Member indices, best first.
    members: Vec<usize>,
}

fn classes(items: &[Item], capacity: u64) -> Vec<Class> {
    let mut by_weight: BTreeMap<u64, usize> = BTreeMap::new();
    let mut out: Vec<Class> = Vec::new();
    for (i, it) in items.iter().enumerate() {
        if it.weight > capacity {
            continue;
        }
        let slot = *by_weight.entry(it.weight).or_insert_with(|| {
            out.push(Class {
                weight: it.weight,
                members: Vec::new(),
            });
            out.len() - 1
        });
        out[slot].members.push(i);
    }
    for c in &mut out {
        c.members.sort_by(|&a, &b| items[b].value.cmp(&items[a].value).then(a.cmp(&b)));
    }
    out
}

/// Key of a DP state: total weight and item count.
type Key = (u64, usize);

/// Value reached plus how many items of the current class were taken and the
/// predecessor key.
#[derive(Clone, Copy)]
struct Cell {
    value: u128,
    taken: usize,
    prev: Key,
}

/// Maximizes total value over subsets with `count ≤ max_count` and
/// `weight ≤ capacity`.
pub fn solve(items: &[Item], max_count: usize, capacity: u64) -> Selection {
    let classes = classes(items, capacity);
    let mut layers: Vec<BTreeMap<Key, Cell>> = Vec::with_capacity(classes.len() + 1);
    let mut frontier: BTreeMap<Key, Cell> = BTreeMap::new();
    frontier.insert(
        (0, 0),
        Cell {
            value: 0,
            taken: 0,
            prev: (0, 0),
        },
    );
    for class in &classes {
        // prefix sums of member values
        let mut prefix = vec![0u128];
        for &m in &class.members {
            prefix.push(prefix.last().unwrap() + items[m].value);
        }
        let mut next: BTreeMap<Key, Cell> = BTreeMap::new();
        for (&(w, k), cell) in &frontier {
            let room = max_count - k;
            let mut j = 0;
            while j <= class.members.len() && j <= room {
                let nw = w + class.weight * j as u64;
                if nw > capacity {
                    break;
                }
                let candidate = Cell {
                    value: cell.value + prefix[j],
                    taken: j,
                    prev: (w, k),
                };
                next.entry((nw, k + j))
                    .and_modify(|c| {
                        if candidate.value > c.value {
                            *c = candidate;
                        }
                    })
                    .or_insert(candidate);
                j += 1;
            }
        }
        layers.push(std::mem::replace(&mut frontier, next));
    }

    // pick the best final state: max value, then min count, then min weight
    let mut best: Option<(Key, u128)> = None;
    for (&(w, k), cell) in &frontier {
        let better = match best {
            None => true,
            Some(((bw, bk), bv)) => {
                cell.value > bv || (cell.value == bv && (k < bk || (k == bk && w < bw)))
            }
        };
        if better {
            best = Some(((w, k), cell.value));
        }
    }
    let Some((mut key, value)) = best else {
        return Selection::default();
    };
    let weight = key.0;
    let mut chosen = Vec::new();
    let mut layer = frontier;
    for (ci, class) in classes.iter().enumerate().rev() {
        let cell = layer[&key];
        chosen.extend_from_slice(&class.members[..cell.taken]);
        key = cell.prev;
        layer = std::mem::take(&mut layers[ci]);
    }
    chosen.sort_unstable();
    Selection {
        chosen,
        weight,
        value,
    }
}

/// Gas-only variant: value equals weight, so the optimum is the heaviest
/// feasible subset using the fewest items.
pub fn max_weight(weights: &[u64], max_count: usize, capacity: u64) -> Selection {
    let items: Vec<Item> = weights
        .iter()
        .map(|&w| Item {
            weight: w,
            value: w as u128,
        })
        .collect();
    solve(&items, max_count, capacity)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exhaustive search returning the optimal (value, count, weight) triple.
    fn brute(items: &[Item], n: usize, cap: u64) -> (u128, usize, u64) {
        let mut best = (0u128, 0usize, 0u64);
        for mask in 0u32..(1 << items.len()) {
            let k = mask.count_ones() as usize;
            if k > n {
                continue;
            }
            let (mut w, mut v) = (0u64, 0u128);
            for (i, it) in items.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    w += it.weight;
                    v += it.value;
                }
            }
            if w > cap {
                continue;
            }
            let better =
                v > best.0 || (v == best.0 && (k < best.1 || (k == best.1 && w < best.2)));
            if better {
                best = (v, k, w);
            }
        }
        best
    }

    #[test]
    fn four_unit_items_fill_two() {
        let s = max_weight(&[1_000_000; 4], 20, 2_000_000);
        assert_eq!(s.chosen, vec![0, 1]);
        assert_eq!(s.weight, 2_000_000);
    }

    #[test]
    fn picks_six_and_four_tenths() {
        let s = max_weight(&[600_000, 600_000, 400_000], 10, 1_000_000);
        assert_eq!(s.chosen, vec![0, 2]);
        assert_eq!(s.weight, 1_000_000);
    }

    #[test]
    fn empty_input() {
        assert_eq!(max_weight(&[], 4, 1_000_000), Selection::default());
    }

    #[test]
    fn zero_weight_items_are_left_out() {
        let s = max_weight(&[0, 0, 500_000], 4, 1_000_000);
        assert_eq!(s.chosen, vec![2]);
    }

    #[test]
    fn count_cap_binds() {
        let s = max_weight(&[100_000; 10], 3, 1_000_000);
        assert_eq!(s.count(), 3);
        assert_eq!(s.weight, 300_000);
    }

    #[test]
    fn fewest_items_on_equal_weight() {
        // one 1.0 item beats four 0.25 items
        let s = max_weight(&[250_000, 250_000, 250_000, 250_000, 1_000_000], 4, 1_000_000);
        assert_eq!(s.chosen, vec![4]);
    }

    #[test]
    fn value_weighted_matches_brute_force() {
        let items = [
            Item { weight: 3, value: 30 },
            Item { weight: 4, value: 50 },
            Item { weight: 2, value: 15 },
            Item { weight: 3, value: 31 },
            Item { weight: 0, value: 7 },
        ];
        for n in 0..=5 {
            for cap in 0..=12 {
                let s = solve(&items, n, cap);
                assert_eq!((s.value, s.count(), s.weight), brute(&items, n, cap), "n={n} cap={cap}");
                let w: u64 = s.chosen.iter().map(|&i| items[i].weight).sum();
                assert_eq!(w, s.weight);
            }
        }
    }
}
