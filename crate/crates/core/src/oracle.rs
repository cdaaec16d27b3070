//! Exhaustive ground truth for tiny instances. Nothing here calls the solver
//! or the `verify` module; envy is recomputed straight from the definition.

use crate::bundle::Bundle;
use crate::cuts;
use crate::error::{EfxError, Result};
use crate::model::{AgentId, Allocation, Instance};

/// Default cap on `n^m` for [`enumerate_efx_allocations`].
pub const DEFAULT_GUARD: u128 = 10_000_000;
/// Largest set [`verify_cut_exhaustive`] scans.
pub const MAX_CUT_SCAN: usize = 22;

fn strongly_envies(instance: &Instance, i: AgentId, own: &Bundle, other: &Bundle) -> bool {
    let base = instance.value(i, own);
    other
        .iter()
        .any(|g| instance.value(i, &other.without(g)) > base)
}

fn is_efx(instance: &Instance, bundles: &[Bundle]) -> bool {
    instance.agents().all(|i| {
        instance
            .agents()
            .filter(|&j| j != i)
            .all(|j| !strongly_envies(instance, i, &bundles[i.index()], &bundles[j.index()]))
    })
}

pub fn search_space(instance: &Instance) -> u128 {
    (instance.agent_count() as u128)
        .checked_pow(instance.good_count() as u32)
        .unwrap_or(u128::MAX)
}

/// All complete EFX allocations, in the order of a mixed-radix counter whose
/// most significant digit is the owner of good 0. Stops after `limit` hits.
pub fn enumerate_efx_allocations(
    instance: &Instance,
    limit: Option<usize>,
    guard: u128,
) -> Result<Vec<Allocation>> {
    let size = search_space(instance);
    if size > guard {
        return Err(EfxError::SearchSpaceTooLarge { size, guard });
    }
    let (n, m) = (instance.agent_count(), instance.good_count());
    let limit = limit.unwrap_or(usize::MAX);
    let mut owner = vec![0usize; m];
    let mut found = Vec::new();
    loop {
        if found.len() >= limit {
            break;
        }
        let mut bundles = vec![Bundle::empty(m); n];
        for (g, &a) in owner.iter().enumerate() {
            bundles[a].insert(crate::model::GoodId(g));
        }
        if is_efx(instance, &bundles) {
            found.push(Allocation::from_bundles(bundles).expect("disjoint by construction"));
        }
        // increment, least significant digit = last good
        let mut k = m;
        loop {
            if k == 0 {
                return Ok(found);
            }
            k -= 1;
            owner[k] += 1;
            if owner[k] < n {
                break;
            }
            owner[k] = 0;
        }
    }
    Ok(found)
}

/// Whether `allocation` equals one of the complete EFX allocations.
pub fn contains(found: &[Allocation], allocation: &Allocation) -> bool {
    found.iter().any(|a| a.bundles() == allocation.bundles())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CutCheck {
    /// The module's cut is a partition of `s` and both parts are EFX-feasible.
    pub module_cut_ok: bool,
    /// Number of EFX 2-partitions among all `2^|s|` ordered splits.
    pub efx_partitions: u64,
}

impl CutCheck {
    pub fn passed(&self) -> bool {
        self.module_cut_ok && self.efx_partitions > 0
    }
}

fn feasible(instance: &Instance, cutter: AgentId, part: &Bundle, other: &Bundle) -> bool {
    !strongly_envies(instance, cutter, part, other)
}

/// Checks the cuts module's output for `s` against the definition and scans
/// every 2-partition of `s` to confirm an EFX cut exists.
pub fn check_cut_exhaustive(instance: &Instance, cutter: AgentId, s: &Bundle) -> Result<CutCheck> {
    if s.len() > MAX_CUT_SCAN {
        return Err(EfxError::SearchSpaceTooLarge {
            size: 1u128 << s.len(),
            guard: 1u128 << MAX_CUT_SCAN,
        });
    }
    let cut = cuts::efx_cut(instance, cutter, s)?;
    let module_cut_ok = cut.first.is_disjoint(&cut.second)
        && cut.first.union(&cut.second) == *s
        && feasible(instance, cutter, &cut.first, &cut.second)
        && feasible(instance, cutter, &cut.second, &cut.first);

    let goods = s.to_vec();
    let m = instance.good_count();
    let mut efx_partitions = 0;
    for mask in 0u64..(1u64 << goods.len()) {
        let first = Bundle::from_goods(
            m,
            goods
                .iter()
                .enumerate()
                .filter(|(k, _)| mask >> k & 1 == 1)
                .map(|(_, &g)| g),
        );
        let second = s.difference(&first);
        if feasible(instance, cutter, &first, &second)
            && feasible(instance, cutter, &second, &first)
        {
            efx_partitions += 1;
        }
    }
    Ok(CutCheck {
        module_cut_ok,
        efx_partitions,
    })
}

pub fn verify_cut_exhaustive(instance: &Instance, cutter: AgentId, s: &Bundle) -> Result<bool> {
    check_cut_exhaustive(instance, cutter, s).map(|c| c.passed())
}
