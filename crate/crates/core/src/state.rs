//! Solver state shared by the three phases: the allocation, the partial
//! picking sequence `σ = σ_L ++ U ++ σ_R`, and the memoized cut configurations.

use std::cmp::Ordering;
use std::collections::{BTreeSet, VecDeque};

use serde::Serialize;

use crate::bundle::Bundle;
use crate::cuts::{self, CutConfiguration, CutMemo, CutOptions};
use crate::error::{EfxError, Result};
use crate::model::{AgentId, Allocation, GoodId, Instance};

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
enum Slot {
    Left(i64),
    Unplaced,
    Right(i64),
}

impl Slot {
    fn rank(self) -> Option<(u8, i64)> {
        match self {
            Slot::Left(k) => Some((0, k)),
            Slot::Unplaced => None,
            Slot::Right(k) => Some((2, k)),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolverState<'a> {
    instance: &'a Instance,
    pub(crate) allocation: Allocation,
    sigma_left: Vec<AgentId>,
    sigma_right: VecDeque<AgentId>,
    unplaced: BTreeSet<AgentId>,
    slots: Vec<Slot>,
    cuts: CutMemo,
}

impl<'a> SolverState<'a> {
    /// All agents unplaced, nothing allocated.
    pub fn new(instance: &'a Instance, cut_options: CutOptions) -> Self {
        SolverState {
            instance,
            allocation: Allocation::for_instance(instance),
            sigma_left: Vec::new(),
            sigma_right: VecDeque::new(),
            unplaced: instance.agents().collect(),
            slots: vec![Slot::Unplaced; instance.agent_count()],
            cuts: CutMemo::new(cut_options),
        }
    }

    /// State with a complete sequence and an arbitrary allocation, every
    /// adjacent pair's configuration computed. Used to re-check saved outputs.
    pub fn from_sequence(
        instance: &'a Instance,
        sigma: &[AgentId],
        allocation: Allocation,
        cut_options: CutOptions,
    ) -> Result<Self> {
        let n = instance.agent_count();
        let mut seen = vec![false; n];
        if sigma.len() != n
            || sigma
                .iter()
                .any(|a| a.index() >= n || std::mem::replace(&mut seen[a.index()], true))
        {
            return Err(EfxError::InvalidInstance(format!(
                "sequence is not a permutation of 0..{n}"
            )));
        }
        if allocation.agent_count() != n
            || allocation
                .bundles()
                .iter()
                .any(|b| b.capacity() != instance.good_count())
        {
            return Err(EfxError::InvalidInstance(
                "allocation shape does not match the instance".into(),
            ));
        }
        let mut state = SolverState::new(instance, cut_options);
        for &a in sigma {
            state.push_left(a);
        }
        state.allocation = allocation;
        state.ensure_all_configurations()?;
        Ok(state)
    }

    pub fn instance(&self) -> &'a Instance {
        self.instance
    }

    pub fn allocation(&self) -> &Allocation {
        &self.allocation
    }

    pub fn into_allocation(self) -> Allocation {
        self.allocation
    }

    pub fn sigma_left(&self) -> &[AgentId] {
        &self.sigma_left
    }

    pub fn sigma_right(&self) -> impl Iterator<Item = AgentId> + '_ {
        self.sigma_right.iter().copied()
    }

    pub fn unplaced(&self) -> &BTreeSet<AgentId> {
        &self.unplaced
    }

    pub fn is_unplaced(&self, a: AgentId) -> bool {
        self.slots[a.index()] == Slot::Unplaced
    }

    pub fn in_left(&self, a: AgentId) -> bool {
        matches!(self.slots[a.index()], Slot::Left(_))
    }

    pub fn in_right(&self, a: AgentId) -> bool {
        matches!(self.slots[a.index()], Slot::Right(_))
    }

    /// `σ_L ++ U (ascending) ++ σ_R`.
    pub fn sigma(&self) -> Vec<AgentId> {
        self.sigma_left
            .iter()
            .chain(self.unplaced.iter())
            .chain(self.sigma_right.iter())
            .copied()
            .collect()
    }

    pub(crate) fn push_left(&mut self, a: AgentId) {
        debug_assert!(self.is_unplaced(a));
        self.slots[a.index()] = Slot::Left(self.sigma_left.len() as i64);
        self.sigma_left.push(a);
        self.unplaced.remove(&a);
    }

    pub(crate) fn push_right_front(&mut self, a: AgentId) {
        debug_assert!(self.is_unplaced(a));
        self.slots[a.index()] = Slot::Right(-(self.sigma_right.len() as i64));
        self.sigma_right.push_front(a);
        self.unplaced.remove(&a);
    }

    /// σ-order of two distinct agents. `None` while both are unplaced.
    /// An unplaced agent sits after all of `σ_L` and before all of `σ_R`.
    pub fn order(&self, a: AgentId, b: AgentId) -> Option<Ordering> {
        let mid = (1u8, 0i64);
        match (self.slots[a.index()].rank(), self.slots[b.index()].rank()) {
            (None, None) => None,
            (ra, rb) => Some(ra.unwrap_or(mid).cmp(&rb.unwrap_or(mid))),
        }
    }

    pub fn precedes(&self, a: AgentId, b: AgentId) -> Option<bool> {
        self.order(a, b).map(|o| o == Ordering::Less)
    }

    /// The configuration cut by the σ-later agent of `{i, j}`; `None` for
    /// non-adjacent pairs.
    pub fn configuration_for_pair(
        &mut self,
        i: AgentId,
        j: AgentId,
    ) -> Result<Option<&CutConfiguration>> {
        if self.instance.pair_goods_ref(i, j).is_none() {
            return Ok(None);
        }
        let later = match self.order(i, j) {
            None => {
                return Err(EfxError::Precondition(format!(
                    "sequence order of {i} and {j} is not determined yet"
                )))
            }
            Some(Ordering::Less) => j,
            Some(_) => i,
        };
        let partner = if later == i { j } else { i };
        self.cuts
            .get_or_compute(self.instance, later, partner)
            .map(Some)
    }

    /// Read-only lookup of a configuration already fixed for the pair.
    pub fn configuration(&self, i: AgentId, j: AgentId) -> Option<&CutConfiguration> {
        let later = match self.order(i, j)? {
            Ordering::Less => j,
            _ => i,
        };
        let partner = if later == i { j } else { i };
        self.cuts.get(later, partner)
    }

    pub fn ensure_all_configurations(&mut self) -> Result<()> {
        let pairs: Vec<_> = self.instance.pairs().map(|(k, _)| k).collect();
        for (a, b) in pairs {
            if self.order(a, b).is_some() {
                self.configuration_for_pair(a, b)?;
            }
        }
        Ok(())
    }

    /// `A_{i,j}(X, σ)`; empty for non-adjacent pairs.
    pub fn available(&mut self, i: AgentId, j: AgentId) -> Result<Bundle> {
        let instance = self.instance;
        match self.configuration_for_pair(i, j)? {
            None => Ok(instance.empty_bundle()),
            Some(config) => {
                let config = config.clone();
                cuts::available(instance, &config, &self.allocation, i)
            }
        }
    }

    pub fn cut_memo(&self) -> &CutMemo {
        &self.cuts
    }

    pub(crate) fn assign(&mut self, a: AgentId, bundle: Bundle, stage: &'static str) -> Result<()> {
        self.allocation.set_bundle(a, bundle).map_err(|g| {
            EfxError::internal(stage, format!("good {g} would be held twice (agent {a})"))
        })
    }

    pub(crate) fn add(&mut self, a: AgentId, extra: &Bundle, stage: &'static str) -> Result<()> {
        self.allocation.add_to(a, extra).map_err(|g| {
            EfxError::internal(
                stage,
                format!("good {g} is already allocated (adding to {a})"),
            )
        })
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            sigma_left: self.sigma_left.iter().map(|a| a.index()).collect(),
            unplaced: self.unplaced.iter().map(|a| a.index()).collect(),
            sigma_right: self.sigma_right.iter().map(|a| a.index()).collect(),
            bundles: self
                .allocation
                .bundles()
                .iter()
                .map(|b| b.iter().map(GoodId::index).collect())
                .collect(),
        }
    }
}

/// Serializable view of a state, for traces.
#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct Snapshot {
    pub sigma_left: Vec<usize>,
    pub unplaced: Vec<usize>,
    pub sigma_right: Vec<usize>,
    pub bundles: Vec<Vec<usize>>,
}
