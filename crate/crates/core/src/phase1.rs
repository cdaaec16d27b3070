//! Phase one: build the picking sequence and an initial partial orientation by
//! repeated sequence augmentation. Each augmentation places at least one
//! unplaced agent and keeps invariants (i)-(vii) intact.

use serde::Serialize;

use crate::bundle::Bundle;
use crate::config::{record, CheckLevel, SolveConfig, TraceSink};
use crate::cuts;
use crate::error::{EfxError, Result};
use crate::model::{AgentId, Allocation};
use crate::state::SolverState;
use crate::verify::{self, EnvyGraph};

/// What one augmentation did.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct AugmentOutcome {
    pub placed_left: Vec<usize>,
    pub placed_right: Vec<usize>,
    /// Picks whose best partner was not adjacent (the agent took nothing).
    pub nonadjacent_picks: usize,
}

/// Best partner `j ≠ i` by `v_i(A_{i,j})`, lowest id on ties. Non-neighbours
/// offer the empty set. `None` only when `i` is the sole agent.
fn best_partner(state: &mut SolverState<'_>, i: AgentId) -> Result<Option<(AgentId, Bundle)>> {
    let instance = state.instance();
    let mut best: Option<(u64, AgentId, Bundle)> = None;
    let neighbors = instance.neighbors(i);
    let mut offers = Vec::with_capacity(neighbors.len());
    for &j in neighbors {
        let offer = state.available(i, j)?;
        offers.push((j, instance.value(i, &offer), offer));
    }
    let mut offers = offers.into_iter().peekable();
    for j in instance.agents().filter(|&j| j != i) {
        let (value, offer) = match offers.peek() {
            Some((nj, _, _)) if *nj == j => {
                let (_, v, o) = offers.next().expect("peeked");
                (v, o)
            }
            _ => (0, instance.empty_bundle()),
        };
        if best.as_ref().is_none_or(|(bv, _, _)| value > *bv) {
            best = Some((value, j, offer));
        }
    }
    Ok(best.map(|(_, j, offer)| (j, offer)))
}

fn give(state: &mut SolverState<'_>, a: AgentId, bundle: Bundle) -> Result<()> {
    if !state.allocation().bundle(a).is_empty() {
        return Err(EfxError::internal(
            "phase1",
            format!("agent {a} already holds a bundle"),
        ));
    }
    state.assign(a, bundle, "phase1")
}

/// One run of sequence augmentation. Requires `U ≠ ∅`.
pub fn augment(state: &mut SolverState<'_>) -> Result<AugmentOutcome> {
    let instance = state.instance();
    let Some(&first) = state.unplaced().iter().next() else {
        return Err(EfxError::Precondition("no unplaced agent left".into()));
    };
    let mut out = AugmentOutcome::default();
    let note_pick = |out: &mut AugmentOutcome, a: AgentId, b: Option<AgentId>| {
        if let Some(b) = b {
            if instance.pair_goods_ref(a, b).is_none() {
                out.nonadjacent_picks += 1;
            }
        }
    };

    let mut i = first;
    state.push_right_front(i);
    out.placed_right.push(i.index());
    let mut j = best_partner(state, i)?.map(|(j, _)| j);
    note_pick(&mut out, i, j);

    while let Some(jj) = j.filter(|&jj| state.is_unplaced(jj)) {
        state.push_left(jj);
        out.placed_left.push(jj.index());
        let k = best_partner(state, jj)?;
        note_pick(&mut out, jj, k.as_ref().map(|(k, _)| *k));
        match k {
            Some((k, offer)) if k == i => {
                give(state, jj, offer)?;
                j = best_partner(state, i)?.map(|(j, _)| j);
                note_pick(&mut out, i, j);
            }
            Some((k, offer)) if state.is_unplaced(k) => {
                give(state, jj, offer)?;
                let take = state.available(i, jj)?;
                give(state, i, take)?;
                i = k;
                state.push_right_front(i);
                out.placed_right.push(i.index());
                j = best_partner(state, i)?.map(|(j, _)| j);
                note_pick(&mut out, i, j);
            }
            other => {
                let offer = other.map_or_else(|| instance.empty_bundle(), |(_, o)| o);
                give(state, jj, offer)?;
                break;
            }
        }
    }
    let take = match j {
        Some(j) => state.available(i, j)?,
        None => instance.empty_bundle(),
    };
    give(state, i, take)?;
    Ok(out)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Phase1Report {
    pub augment_calls: usize,
    pub nonadjacent_picks: usize,
}

/// Augment until every agent is placed. With `CheckLevel::Every` the
/// invariants are checked after each call; at `Boundaries` and above the
/// properties (1)-(4) are checked on exit.
pub fn run_phase1(
    state: &mut SolverState<'_>,
    config: &SolveConfig,
    trace: &mut dyn TraceSink,
) -> Result<Phase1Report> {
    let n = state.instance().agent_count();
    let mut report = Phase1Report::default();
    while !state.unplaced().is_empty() {
        if report.augment_calls >= n {
            return Err(EfxError::internal(
                "phase1",
                format!("more than {n} augmentations"),
            ));
        }
        let before = state.unplaced().len();
        let out = augment(state)?;
        report.augment_calls += 1;
        report.nonadjacent_picks += out.nonadjacent_picks;
        if state.unplaced().len() >= before {
            return Err(EfxError::internal("phase1", "augmentation placed no agent"));
        }
        if config.at_least(CheckLevel::Every) {
            if let Some(v) = check_invariants(state).into_iter().next() {
                return Err(EfxError::internal(
                    "phase1",
                    format!("invariant ({}) broken: {}", roman(v.invariant), v.detail),
                ));
            }
        }
        trace.emit(record(
            1,
            "augment",
            serde_json::json!({ "outcome": out, "state": state.snapshot() }),
        ));
    }
    if config.at_least(CheckLevel::Boundaries) {
        let props = verify::check_properties(state, &[1, 2, 3, 4]);
        if let Some(p) = props.outcomes.iter().find(|o| !o.passed) {
            return Err(EfxError::internal(
                "phase1",
                format!("property ({}) fails: {}", p.property, p.witnesses[0].detail),
            ));
        }
    }
    Ok(report)
}

pub(crate) fn roman(k: u8) -> &'static str {
    ["?", "i", "ii", "iii", "iv", "v", "vi", "vii"][usize::from(k).min(7)]
}

/// Replays the final sequence as a plain picking order: each agent in turn
/// takes its best available unit bundle under the fixed configurations.
/// The result should coincide with the phase-one allocation.
pub fn greedy_replay(state: &SolverState<'_>) -> Result<Allocation> {
    let instance = state.instance();
    let mut x = Allocation::for_instance(instance);
    for i in state.sigma() {
        let mut best: Option<(u64, Bundle)> = None;
        for j in instance.agents().filter(|&j| j != i) {
            let offer = match state.configuration(i, j) {
                Some(cfg) => cuts::available(instance, cfg, &x, i)?,
                None if instance.pair_goods_ref(i, j).is_some() => {
                    return Err(EfxError::Precondition(format!(
                        "no configuration for ({i}, {j})"
                    )))
                }
                None => instance.empty_bundle(),
            };
            let v = instance.value(i, &offer);
            if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
                best = Some((v, offer));
            }
        }
        if let Some((_, offer)) = best {
            x.set_bundle(i, offer)
                .map_err(|g| EfxError::internal("replay", format!("good {g} taken twice")))?;
        }
    }
    Ok(x)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InvariantViolation {
    /// 1..=7 for (i)..(vii).
    pub invariant: u8,
    pub agents: Vec<usize>,
    pub detail: String,
}

/// Invariants (i)-(vii) of the augmentation loop; empty when all hold.
pub fn check_invariants(state: &SolverState<'_>) -> Vec<InvariantViolation> {
    let instance = state.instance();
    let x = state.allocation();
    let mut out = Vec::new();
    let violation = |inv: u8, agents: &[AgentId], detail: String| InvariantViolation {
        invariant: inv,
        agents: agents.iter().map(|a| a.index()).collect(),
        detail,
    };
    let placed: Vec<AgentId> = instance
        .agents()
        .filter(|&a| !state.is_unplaced(a))
        .collect();

    // (i) placed agents hold nothing incident to unplaced agents
    for &a in &placed {
        for &u in state.unplaced() {
            if x.bundle(a).intersects(instance.incident_goods(u)) {
                out.push(violation(
                    1,
                    &[a, u],
                    format!("agent {a} holds goods incident to unplaced {u}"),
                ));
            }
        }
    }
    // (ii)
    for &u in state.unplaced() {
        if !x.bundle(u).is_empty() {
            out.push(violation(
                2,
                &[u],
                format!("unplaced agent {u} holds goods"),
            ));
        }
    }
    // (iii)
    for (a, g) in verify::check_orientation(instance, x).offending {
        out.push(violation(
            3,
            &[AgentId(a)],
            format!("good {g} not incident to {a}"),
        ));
    }
    let graph = EnvyGraph::compute(instance, x);
    for e in &graph.edges {
        let (from, to) = (AgentId(e.from), AgentId(e.to));
        // (iv)
        if e.is_strong() && !state.is_unplaced(from) {
            out.push(violation(
                4,
                &[from, to],
                format!("{from} strongly envies {to}"),
            ));
        }
        // (v)
        if state.in_left(from) {
            out.push(violation(
                5,
                &[from, to],
                format!("left agent {from} envies {to}"),
            ));
        }
        // (vi)
        if state.in_right(from) && state.in_right(to) {
            out.push(violation(
                6,
                &[from, to],
                format!("right agents {from} and {to}: envy"),
            ));
        }
    }
    // (vii) property (2) on pairs with a placed endpoint, property (3) for placed agents
    let unallocated = x.unallocated();
    for ((a, b), shared) in instance.pairs() {
        if state.is_unplaced(a) && state.is_unplaced(b) {
            continue;
        }
        let Some(cfg) = state.configuration(a, b) else {
            out.push(violation(7, &[a, b], "configuration not fixed".into()));
            continue;
        };
        let held_a = x.bundle(a).intersection(shared);
        let held_b = x.bundle(b).intersection(shared);
        for (who, held) in [(a, &held_a), (b, &held_b)] {
            if !held.is_empty() && cfg.part_index(held).is_none() {
                out.push(violation(
                    7,
                    &[a, b],
                    format!("agent {who} holds part of a unit bundle"),
                ));
            }
        }
        if x.allocated().intersection(shared) != held_a.union(&held_b) {
            out.push(violation(
                7,
                &[a, b],
                "pair goods held by a third agent".into(),
            ));
        }
        for part in &cfg.parts {
            if part.is_empty() || !part.is_subset(&unallocated) {
                continue;
            }
            for who in [a, b] {
                if !state.is_unplaced(who)
                    && instance.value(who, x.bundle(who)) < instance.value(who, part)
                {
                    out.push(violation(
                        7,
                        &[who],
                        format!("agent {who} prefers a free unit bundle of ({a}, {b})"),
                    ));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cuts::CutOptions;
    use crate::model::{GoodId, Instance, ValuationSpec};

    fn add(ws: &[(usize, u64)]) -> ValuationSpec {
        ValuationSpec::Additive {
            weights: ws.iter().map(|&(g, w)| (GoodId(g), w)).collect(),
        }
    }

    #[test]
    fn initial_state_satisfies_invariants() {
        let inst = Instance::new(2, &[[0, 1]], vec![add(&[(0, 1)]), add(&[(0, 1)])]).unwrap();
        let st = SolverState::new(&inst, CutOptions::default());
        assert!(check_invariants(&st).is_empty());
    }

    #[test]
    fn single_edge_trace() {
        let inst = Instance::new(2, &[[0, 1]], vec![add(&[(0, 1)]), add(&[(0, 1)])]).unwrap();
        let mut st = SolverState::new(&inst, CutOptions::default());
        let out = augment(&mut st).unwrap();
        assert_eq!(out.placed_right, vec![0]);
        assert_eq!(out.placed_left, vec![1]);
        assert!(st.unplaced().is_empty());
        assert_eq!(st.allocation().bundle(AgentId(1)).to_vec(), vec![GoodId(0)]);
        assert!(st.allocation().bundle(AgentId(0)).is_empty());
        // 1 ∈ σ_L precedes 0 ∈ σ_R, so 0 cut the pair
        assert_eq!(
            st.configuration(AgentId(0), AgentId(1)).unwrap().cutter,
            AgentId(0)
        );
        assert!(check_invariants(&st).is_empty());
    }

    #[test]
    fn lone_agent() {
        let inst = Instance::new(1, &[], vec![add(&[])]).unwrap();
        let mut st = SolverState::new(&inst, CutOptions::default());
        let out = augment(&mut st).unwrap();
        assert_eq!(out.placed_right, vec![0]);
        assert!(out.placed_left.is_empty());
        assert!(augment(&mut st).is_err());
    }

    #[test]
    fn isolated_agents_take_nothing() {
        let inst = Instance::new(2, &[], vec![add(&[]), add(&[])]).unwrap();
        let mut st = SolverState::new(&inst, CutOptions::default());
        augment(&mut st).unwrap();
        assert!(check_invariants(&st).is_empty());
        if !st.unplaced().is_empty() {
            augment(&mut st).unwrap();
        }
        assert!(st.unplaced().is_empty());
        assert!(st.allocation().allocated().is_empty());
    }

    #[test]
    fn constructed_violations_are_reported() {
        let inst = Instance::new(
            3,
            &[[0, 1], [1, 2]],
            vec![add(&[(0, 1)]), add(&[(0, 1), (1, 1)]), add(&[(1, 1)])],
        )
        .unwrap();
        let mut st = SolverState::new(&inst, CutOptions::default());
        st.push_left(AgentId(0));
        // agent 0 (left) holds a good incident to unplaced 1: (i)
        st.assign(AgentId(0), Bundle::from_goods(2, [GoodId(0)]), "test")
            .unwrap();
        let v = check_invariants(&st);
        assert!(v.iter().any(|v| v.invariant == 1));

        // envy among right agents: (vi)
        let mut st = SolverState::new(&inst, CutOptions::default());
        st.push_right_front(AgentId(0));
        st.push_right_front(AgentId(1));
        st.push_right_front(AgentId(2));
        st.ensure_all_configurations().unwrap();
        st.assign(AgentId(1), Bundle::from_goods(2, [GoodId(0)]), "test")
            .unwrap();
        let v = check_invariants(&st);
        assert!(v.iter().any(|v| v.invariant == 6));
    }
}
