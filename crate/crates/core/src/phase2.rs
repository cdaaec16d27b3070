//! Phase two: repair the phase-one orientation until properties (5)-(7) hold,
//! keeping (1)-(4). Every step strictly decreases the lexicographic potential
//! `(#envied, #non-envied violating (6), #non-envied violating (5))`.

use serde::Serialize;

use crate::bundle::Bundle;
use crate::config::{record, CheckLevel, SolveConfig, TraceSink};
use crate::error::{EfxError, Result};
use crate::model::AgentId;
use crate::state::SolverState;
use crate::verify;

/// Which unit bundle of a pair a B-set refers to.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
enum Pick {
    Empty,
    Part(usize),
    /// `E(i,j) \ X_j`: the unit bundle the partner does not hold.
    Rest,
}

/// `B1[i][j]`, `B2[i][j]` per ordered adjacent pair and their unions per agent.
#[derive(Clone, Debug)]
pub struct BSets {
    b1: Vec<Bundle>,
    b2: Vec<Bundle>,
}

impl BSets {
    /// Recompute from the state's allocation and fixed configurations.
    pub fn compute(state: &SolverState<'_>) -> Result<BSets> {
        let instance = state.instance();
        let x = state.allocation();
        let n = instance.agent_count();
        let mut b1 = vec![instance.empty_bundle(); n];
        let mut b2 = vec![instance.empty_bundle(); n];
        for ((lo, hi), shared) in instance.pairs() {
            let cfg = state.configuration(lo, hi).ok_or_else(|| {
                EfxError::internal("phase2", format!("no configuration for ({lo}, {hi})"))
            })?;
            let held_lo = x.bundle(lo).intersects(shared);
            let held_hi = x.bundle(hi).intersects(shared);
            for (a, b, held_a, held_b) in [(lo, hi, held_lo, held_hi), (hi, lo, held_hi, held_lo)] {
                let picks = match (held_a, held_b) {
                    (true, _) => [Pick::Empty, Pick::Empty],
                    (false, true) => [Pick::Rest, Pick::Rest],
                    (false, false) if a == lo => [Pick::Part(0), Pick::Part(1)],
                    (false, false) => [Pick::Part(1), Pick::Part(0)],
                };
                for (target, pick) in [(&mut b1, picks[0]), (&mut b2, picks[1])] {
                    match pick {
                        Pick::Empty => {}
                        Pick::Part(k) => target[a.index()].union_with(&cfg.parts[k]),
                        Pick::Rest => target[a.index()].union_with(&shared.difference(x.bundle(b))),
                    }
                }
            }
        }
        Ok(BSets { b1, b2 })
    }

    pub fn b1(&self, a: AgentId) -> &Bundle {
        &self.b1[a.index()]
    }

    pub fn b2(&self, a: AgentId) -> &Bundle {
        &self.b2[a.index()]
    }

    /// `B^(u)` for `u ∈ {1, 2}`.
    pub fn get(&self, u: u8, a: AgentId) -> &Bundle {
        if u == 1 {
            self.b1(a)
        } else {
            self.b2(a)
        }
    }
}

/// Enviers of every agent under the current allocation. Phase two keeps an
/// orientation, so only neighbours can envy.
pub(crate) fn enviers(state: &SolverState<'_>) -> Vec<Vec<AgentId>> {
    let instance = state.instance();
    let x = state.allocation();
    let own: Vec<u64> = instance
        .agents()
        .map(|a| instance.value(a, x.bundle(a)))
        .collect();
    let mut out = vec![Vec::new(); instance.agent_count()];
    for i in instance.agents() {
        for &j in instance.neighbors(i) {
            if instance.value(j, x.bundle(i)) > own[j.index()] {
                out[i.index()].push(j);
            }
        }
    }
    out
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Potential {
    pub envied: usize,
    pub violating_6: usize,
    pub violating_5: usize,
}

impl Potential {
    pub fn as_array(self) -> [usize; 3] {
        [self.envied, self.violating_6, self.violating_5]
    }
}

/// `U_i(X)`: unallocated goods incident to `i`.
pub fn unallocated_incident(state: &SolverState<'_>, i: AgentId) -> Bundle {
    state
        .instance()
        .incident_goods(i)
        .difference(state.allocation().allocated())
}

struct View {
    enviers: Vec<Vec<AgentId>>,
    bsets: BSets,
    potential: Potential,
}

fn view(state: &SolverState<'_>) -> Result<View> {
    let instance = state.instance();
    let x = state.allocation();
    let enviers = enviers(state);
    let bsets = BSets::compute(state)?;
    let mut potential = Potential {
        envied: 0,
        violating_6: 0,
        violating_5: 0,
    };
    for a in instance.agents() {
        if !enviers[a.index()].is_empty() {
            potential.envied += 1;
            continue;
        }
        if instance.value(a, x.bundle(a)) < instance.value(a, &unallocated_incident(state, a)) {
            potential.violating_6 += 1;
        }
        if !bsets.b1(a).is_empty() {
            potential.violating_5 += 1;
        }
    }
    Ok(View {
        enviers,
        bsets,
        potential,
    })
}

pub fn potential(state: &SolverState<'_>) -> Result<Potential> {
    Ok(view(state)?.potential)
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Branch {
    /// A non-envied agent takes all of its `B1`.
    TakeFree,
    /// A non-envied agent trades held unit bundles for the free ones next to them.
    Exchange,
    /// An envied agent swaps unit bundles with its envier, then takes `B^(u)`.
    SwapWithEnvier,
}

impl Branch {
    pub fn label(self) -> &'static str {
        match self {
            Branch::TakeFree => "A",
            Branch::Exchange => "B",
            Branch::SwapWithEnvier => "C",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Step {
    pub branch: Branch,
    pub agent: usize,
    /// The envier, for the swap branch.
    pub partner: Option<usize>,
    pub before: Potential,
    pub after: Potential,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepOutcome {
    Applied(Step),
    Done,
}

/// Apply the first applicable repair branch, scanning agents by ascending id.
/// With `strict` set, also checks the branch-specific postconditions.
pub fn phase2_step(state: &mut SolverState<'_>, strict: bool) -> Result<StepOutcome> {
    let instance = state.instance();
    let before = view(state)?;
    let envied = |a: AgentId| !before.enviers[a.index()].is_empty();
    let envy_edges = |st: &SolverState<'_>| -> Vec<(AgentId, AgentId)> {
        enviers(st)
            .into_iter()
            .enumerate()
            .flat_map(|(i, es)| es.into_iter().map(move |j| (j, AgentId(i))))
            .collect()
    };
    let old_edges = if strict {
        envy_edges(state)
    } else {
        Vec::new()
    };

    let mut applied: Option<(Branch, AgentId, Option<AgentId>)> = None;

    if let Some(i) = instance
        .agents()
        .find(|&a| !envied(a) && !before.bsets.b1(a).is_empty())
    {
        state.add(i, before.bsets.b1(i), "phase2")?;
        applied = Some((Branch::TakeFree, i, None));
    }

    if applied.is_none() {
        let found = instance.agents().find(|&a| {
            !envied(a)
                && instance.value(a, state.allocation().bundle(a))
                    < instance.value(a, &unallocated_incident(state, a))
        });
        if let Some(i) = found {
            let free = unallocated_incident(state, i);
            let mut released = instance.empty_bundle();
            for &j in instance.neighbors(i) {
                let shared = instance.pair_goods_ref(i, j).expect("neighbour");
                if shared.intersects(&free) {
                    released.union_with(shared);
                }
            }
            let next = state
                .allocation()
                .bundle(i)
                .difference(&released)
                .union(&free);
            state.assign(i, next, "phase2")?;
            applied = Some((Branch::Exchange, i, None));
        }
    }

    if applied.is_none() {
        'scan: for i in instance.agents().filter(|&a| envied(a)) {
            let es = &before.enviers[i.index()];
            if es.len() != 1 {
                return Err(EfxError::internal(
                    "phase2",
                    format!("agent {i} has {} enviers", es.len()),
                ));
            }
            let j = es[0];
            let own = instance.value(i, state.allocation().bundle(i));
            for u in [1u8, 2] {
                let extra = before.bsets.get(u, i).clone();
                if own >= instance.value(i, &state.allocation().bundle(j).union(&extra)) {
                    continue;
                }
                let shared = instance.pair_goods(i, j);
                let held_i = state.allocation().bundle(i).intersection(&shared);
                let held_j = state.allocation().bundle(j).intersection(&shared);
                let xi = state
                    .allocation()
                    .bundle(i)
                    .difference(&held_i)
                    .union(&held_j);
                let xj = state
                    .allocation()
                    .bundle(j)
                    .difference(&held_j)
                    .union(&held_i);
                state.assign(
                    j,
                    state.allocation().bundle(j).difference(&held_j),
                    "phase2",
                )?;
                state.assign(i, xi, "phase2")?;
                state.assign(j, xj, "phase2")?;
                let after_swap = BSets::compute(state)?;
                if after_swap.get(u, i) != &extra {
                    return Err(EfxError::internal(
                        "phase2",
                        format!("B{u} of agent {i} changed across the swap with {j}"),
                    ));
                }
                state.add(i, &extra, "phase2")?;
                applied = Some((Branch::SwapWithEnvier, i, Some(j)));
                break 'scan;
            }
        }
    }

    let Some((branch, agent, partner)) = applied else {
        return Ok(StepOutcome::Done);
    };
    let after = view(state)?;
    if after.potential >= before.potential {
        return Err(EfxError::internal(
            "phase2",
            format!(
                "branch {} on agent {agent} did not decrease the potential: {:?} -> {:?}",
                branch.label(),
                before.potential.as_array(),
                after.potential.as_array()
            ),
        ));
    }
    if strict {
        match branch {
            Branch::TakeFree | Branch::Exchange => {
                let new_edges = envy_edges(state);
                if let Some(e) = new_edges.iter().find(|e| !old_edges.contains(e)) {
                    return Err(EfxError::internal(
                        "phase2",
                        format!("branch {} created envy {} -> {}", branch.label(), e.0, e.1),
                    ));
                }
            }
            Branch::SwapWithEnvier => {
                let j = partner.expect("swap partner");
                if !after.enviers[agent.index()].is_empty() || !after.enviers[j.index()].is_empty()
                {
                    return Err(EfxError::internal(
                        "phase2",
                        format!("after swapping, {agent} or {j} is still envied"),
                    ));
                }
            }
        }
    }
    Ok(StepOutcome::Applied(Step {
        branch,
        agent: agent.index(),
        partner: partner.map(AgentId::index),
        before: before.potential,
        after: after.potential,
    }))
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Phase2Report {
    pub iterations: usize,
    /// Steps taken by branches A, B and C.
    pub branches: [usize; 3],
    pub envied_after: usize,
}

/// Repair until properties (5)-(7) hold. Fails if more than `n³` steps are needed.
pub fn run_phase2(
    state: &mut SolverState<'_>,
    config: &SolveConfig,
    trace: &mut dyn TraceSink,
) -> Result<Phase2Report> {
    let n = state.instance().agent_count();
    let cap = n.saturating_pow(3);
    let strict = config.at_least(CheckLevel::Every);
    let mut report = Phase2Report::default();
    loop {
        match phase2_step(state, strict)? {
            StepOutcome::Done => break,
            StepOutcome::Applied(step) => {
                report.iterations += 1;
                report.branches[step.branch as usize] += 1;
                if report.iterations > cap {
                    return Err(EfxError::internal(
                        "phase2",
                        format!("more than n^3 = {cap} repair steps"),
                    ));
                }
                if strict {
                    if let Some(p) = first_failure(state, &[1, 2, 3, 4]) {
                        return Err(EfxError::internal(
                            "phase2",
                            format!("after branch {}: {p}", step.branch.label()),
                        ));
                    }
                }
                trace.emit(record(
                    2,
                    "step",
                    serde_json::json!({
                        "branch": step.branch.label(),
                        "agent": step.agent,
                        "partner": step.partner,
                        "phi": step.after.as_array(),
                    }),
                ));
            }
        }
    }
    report.envied_after = enviers(state).iter().filter(|e| !e.is_empty()).count();
    if config.at_least(CheckLevel::Boundaries) {
        if let Some(p) = first_failure(state, &[1, 2, 3, 4, 5, 6, 7]) {
            return Err(EfxError::internal("phase2", p));
        }
        let single = verify::check_single_envier(state.instance(), state.allocation());
        if !single.passed {
            return Err(EfxError::internal("phase2", "an agent has several enviers"));
        }
        structure_report(state)?;
    }
    Ok(report)
}

pub(crate) fn first_failure(state: &SolverState<'_>, which: &[u8]) -> Option<String> {
    let props = verify::check_properties(state, which);
    props.outcomes.iter().find(|o| !o.passed).map(|o| {
        let detail = o.witnesses.first().map_or("", |w| w.detail.as_str());
        format!("property ({}) fails: {detail}", o.property)
    })
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub enum PairClass {
    BothNonEnvied,
    EnviedWithEnvier,
    EnviedWithBystander,
    BothEnvied,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PairReport {
    pub pair: (usize, usize),
    pub class: PairClass,
}

/// Classify every adjacent pair by envy status and check the allocation
/// pattern each class forces once properties (1)-(5) hold.
pub fn structure_report(state: &SolverState<'_>) -> Result<Vec<PairReport>> {
    let instance = state.instance();
    let x = state.allocation();
    let enviers = enviers(state);
    let envied = |a: AgentId| !enviers[a.index()].is_empty();
    let mut out = Vec::new();
    for ((a, b), shared) in instance.pairs() {
        let cfg = state.configuration(a, b).ok_or_else(|| {
            EfxError::internal("structure", format!("no configuration for ({a}, {b})"))
        })?;
        let free = shared.difference(x.allocated());
        let fail = |what: &str| {
            Err(EfxError::internal(
                "structure",
                format!("pair ({a}, {b}): {what}"),
            ))
        };
        let class = match (envied(a), envied(b)) {
            (false, false) => {
                if !free.is_empty() {
                    return fail("two non-envied agents leave goods unallocated");
                }
                PairClass::BothNonEnvied
            }
            (true, true) => {
                if free != *shared {
                    return fail("two envied agents but some shared goods are allocated");
                }
                PairClass::BothEnvied
            }
            (ea, _) => {
                let (i, j) = if ea { (a, b) } else { (b, a) };
                if enviers[i.index()].contains(&j) {
                    if !free.is_empty() {
                        return fail("envied agent and its envier leave goods unallocated");
                    }
                    PairClass::EnviedWithEnvier
                } else {
                    let held_i = x.bundle(i).intersection(shared);
                    let held_j = x.bundle(j).intersection(shared);
                    if !held_i.is_empty() {
                        return fail("envied agent holds goods shared with a bystander");
                    }
                    let Some(k) = cfg.part_index(&held_j) else {
                        return fail("bystander does not hold a whole unit bundle");
                    };
                    if free != cfg.parts[1 - k] {
                        return fail("expected exactly one free unit bundle");
                    }
                    PairClass::EnviedWithBystander
                }
            }
        };
        out.push(PairReport {
            pair: (a.index(), b.index()),
            class,
        });
    }
    Ok(out)
}
