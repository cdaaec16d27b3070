//! EFX cuts of shared good sets and the fixed cut configurations built from them.
//!
//! A cut splits a set `S ⊆ E(cutter)` into two parts such that the cutter does
//! not strongly envy either part with respect to the other. Additive-based
//! valuations start from a descending-weight greedy split; tables start from
//! `(S, ∅)`. Both then run the same local search, which moves a good out of a
//! part `A` whenever `v(A \ g) > v(other)`.

use std::collections::BTreeMap;

use crate::bundle::Bundle;
use crate::error::{EfxError, Result};
use crate::model::{AgentId, Allocation, GoodId, Instance, ValuationClass};

/// A 2-partition together with the number of local-search moves that produced it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cut {
    pub first: Bundle,
    pub second: Bundle,
    pub moves: u64,
}

#[derive(Clone, Debug, Default)]
pub struct CutOptions {
    /// Upper bound on attainable values; the move cap is `|S| * (v_max + 1)`.
    /// Defaults to the cutter's value of `S`.
    pub v_max: Option<u64>,
    /// Explicit move cap, overriding the `v_max` derived one.
    pub move_cap: Option<u64>,
}

pub fn efx_cut(instance: &Instance, cutter: AgentId, s: &Bundle) -> Result<Cut> {
    efx_cut_with(instance, cutter, s, &CutOptions::default())
}

pub fn efx_cut_with(
    instance: &Instance,
    cutter: AgentId,
    s: &Bundle,
    opts: &CutOptions,
) -> Result<Cut> {
    if !s.is_subset(instance.incident_goods(cutter)) {
        return Err(EfxError::Precondition(format!(
            "cut set is not incident to cutter {cutter}"
        )));
    }
    let m = instance.good_count();
    let val = instance.valuation(cutter);
    let mut parts = match val.class() {
        ValuationClass::Additive | ValuationClass::TransformedAdditive => {
            let mut goods: Vec<(u64, GoodId)> = s
                .iter()
                .map(|g| (val.weight(instance.local_of(cutter, g)).unwrap_or(0), g))
                .collect();
            goods.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
            let mut parts = [Bundle::empty(m), Bundle::empty(m)];
            let mut sums = [0u64; 2];
            for (w, g) in goods {
                // lighter part by weight sum; the transform preserves the order
                let k = usize::from(sums[1] < sums[0]);
                parts[k].insert(g);
                sums[k] += w;
            }
            parts
        }
        ValuationClass::MonotoneTable => [s.clone(), Bundle::empty(m)],
    };

    let cap = opts.move_cap.unwrap_or_else(|| {
        let v_max = opts.v_max.unwrap_or_else(|| instance.value(cutter, s));
        (s.len() as u64)
            .saturating_mul(v_max.saturating_add(1))
            .max(1)
    });

    let value = |b: &Bundle| instance.value(cutter, b);
    let mut moves = 0u64;
    let mut key = leximin_key(&parts, value);
    while let Some((from, g)) = worst_violation(&parts, value) {
        if moves == cap {
            return Err(EfxError::internal(
                "cuts",
                format!("local search for cutter {cutter} exceeded {cap} moves"),
            ));
        }
        parts[from].remove(g);
        parts[1 - from].insert(g);
        moves += 1;
        let next = leximin_key(&parts, value);
        if next <= key {
            return Err(EfxError::internal(
                "cuts",
                format!("local search for cutter {cutter} failed to make progress; valuation not monotone?"),
            ));
        }
        key = next;
    }
    let [first, second] = parts;
    Ok(Cut {
        first,
        second,
        moves,
    })
}

/// `(value, size)` of the poorer part, then of the richer one. Every move
/// strictly increases this key for monotone valuations.
fn leximin_key(parts: &[Bundle; 2], value: impl Fn(&Bundle) -> u64) -> [(u64, usize); 2] {
    let mut k = [
        (value(&parts[0]), parts[0].len()),
        (value(&parts[1]), parts[1].len()),
    ];
    k.sort_unstable();
    k
}

/// Violating `(part, good)` with the richest part first, then the largest
/// remainder, then the smallest good id.
fn worst_violation(parts: &[Bundle; 2], value: impl Fn(&Bundle) -> u64) -> Option<(usize, GoodId)> {
    let vals = [value(&parts[0]), value(&parts[1])];
    let order = if vals[1] > vals[0] { [1, 0] } else { [0, 1] };
    for from in order {
        let other = vals[1 - from];
        let mut best: Option<(u64, GoodId)> = None;
        for g in parts[from].iter() {
            let rest = value(&parts[from].without(g));
            if rest > other && best.is_none_or(|(r, _)| rest > r) {
                best = Some((rest, g));
            }
        }
        if let Some((_, g)) = best {
            return Some((from, g));
        }
    }
    None
}

/// Both parts pass the EFX-feasibility definition for `cutter`.
pub fn is_efx_cut(instance: &Instance, cutter: AgentId, first: &Bundle, second: &Bundle) -> bool {
    let feasible = |own: &Bundle, other: &Bundle| {
        let v = instance.value(cutter, own);
        other
            .iter()
            .all(|g| instance.value(cutter, &other.without(g)) <= v)
    };
    feasible(first, second) && feasible(second, first)
}

/// The fixed cut of `E(i, j)` used for the pair, made by the σ-later agent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CutConfiguration {
    /// `(a, b)` with `a < b`.
    pub pair: (AgentId, AgentId),
    pub cutter: AgentId,
    /// `(C^(1), C^(2))`, the unit bundles of the pair.
    pub parts: [Bundle; 2],
}

impl CutConfiguration {
    pub fn other_endpoint(&self, a: AgentId) -> AgentId {
        if self.pair.0 == a {
            self.pair.1
        } else {
            self.pair.0
        }
    }

    pub fn goods(&self) -> Bundle {
        self.parts[0].union(&self.parts[1])
    }

    /// Index of the unit bundle equal to `held`, if `held` is a whole unit bundle.
    /// An empty `held` matches an empty part only.
    pub fn part_index(&self, held: &Bundle) -> Option<usize> {
        self.parts.iter().position(|p| p == held)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CutRecord {
    pub pair: (AgentId, AgentId),
    pub cutter: AgentId,
    pub class: ValuationClass,
    pub size: usize,
    pub moves: u64,
}

/// Memo of computed configurations keyed by `(pair, cutter)`.
#[derive(Clone, Debug, Default)]
pub struct CutMemo {
    configs: BTreeMap<((AgentId, AgentId), AgentId), CutConfiguration>,
    records: Vec<CutRecord>,
    options: CutOptions,
}

impl CutMemo {
    pub fn new(options: CutOptions) -> Self {
        CutMemo {
            options,
            ..Default::default()
        }
    }

    /// The `cutter`-cut configuration of the pair `{cutter, partner}`, computing it on first use.
    pub fn get_or_compute(
        &mut self,
        instance: &Instance,
        cutter: AgentId,
        partner: AgentId,
    ) -> Result<&CutConfiguration> {
        let pair = if cutter < partner {
            (cutter, partner)
        } else {
            (partner, cutter)
        };
        let key = (pair, cutter);
        if !self.configs.contains_key(&key) {
            let shared = instance.pair_goods(cutter, partner);
            let cut = efx_cut_with(instance, cutter, &shared, &self.options)?;
            self.records.push(CutRecord {
                pair,
                cutter,
                class: instance.valuation(cutter).class(),
                size: shared.len(),
                moves: cut.moves,
            });
            self.configs.insert(
                key,
                CutConfiguration {
                    pair,
                    cutter,
                    parts: [cut.first, cut.second],
                },
            );
        }
        Ok(&self.configs[&key])
    }

    pub fn get(&self, cutter: AgentId, partner: AgentId) -> Option<&CutConfiguration> {
        let pair = if cutter < partner {
            (cutter, partner)
        } else {
            (partner, cutter)
        };
        self.configs.get(&(pair, cutter))
    }

    pub fn configurations(&self) -> impl Iterator<Item = &CutConfiguration> {
        self.configs.values()
    }

    pub fn records(&self) -> &[CutRecord] {
        &self.records
    }
}

/// The available set `A_{i,j}(X, σ)` for agent `i` in the pair described by
/// `config`. Errors when the pair is in a state outside the four table rows.
pub fn available(
    instance: &Instance,
    config: &CutConfiguration,
    allocation: &Allocation,
    i: AgentId,
) -> Result<Bundle> {
    let j = config.other_endpoint(i);
    let shared = config.goods();
    let held_i = allocation.bundle(i).intersection(&shared);
    let held_j = allocation.bundle(j).intersection(&shared);
    let bad = |what: String| {
        Err(EfxError::internal(
            "available",
            format!("pair ({i}, {j}): {what}"),
        ))
    };
    if allocation.allocated().intersection(&shared) != held_i.union(&held_j) {
        return bad("goods held by a third agent".into());
    }
    for (who, held) in [(i, &held_i), (j, &held_j)] {
        if !held.is_empty() && config.part_index(held).is_none() {
            return bad(format!("agent {who} holds part of a unit bundle"));
        }
    }
    if !held_i.is_empty() {
        return Ok(instance.empty_bundle());
    }
    if !held_j.is_empty() {
        return Ok(shared.difference(&held_j));
    }
    let [c1, c2] = &config.parts;
    if instance.value(i, c2) > instance.value(i, c1) {
        Ok(c2.clone())
    } else {
        Ok(c1.clone())
    }
}
