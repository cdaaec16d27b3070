//! Definition-level checkers for envy, EFX, orientations and the phase
//! properties (1)-(7). These share nothing with the solver beyond the
//! instance's valuation oracle and the fixed cut configurations, so agreement
//! between solver and checker is meaningful.

use serde::Serialize;

use crate::bundle::Bundle;
use crate::cuts::CutConfiguration;
use crate::model::{AgentId, Allocation, GoodId, Instance};
use crate::state::SolverState;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EnvyEdge {
    pub from: usize,
    pub to: usize,
    /// Smallest good whose removal keeps the envy, if any.
    pub strong_witness: Option<usize>,
}

impl EnvyEdge {
    pub fn is_strong(&self) -> bool {
        self.strong_witness.is_some()
    }
}

/// Directed envy relation of an allocation, edges in ascending `(from, to)` order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EnvyGraph {
    pub n: usize,
    pub edges: Vec<EnvyEdge>,
}

impl EnvyGraph {
    pub fn compute(instance: &Instance, allocation: &Allocation) -> Self {
        let mut edges = Vec::new();
        for i in instance.agents() {
            let own = instance.value(i, allocation.bundle(i));
            for j in instance.agents() {
                if i == j {
                    continue;
                }
                let other = allocation.bundle(j);
                if instance.value(i, other) <= own {
                    continue;
                }
                let strong_witness = other
                    .iter()
                    .find(|&g| instance.value(i, &other.without(g)) > own)
                    .map(GoodId::index);
                edges.push(EnvyEdge {
                    from: i.index(),
                    to: j.index(),
                    strong_witness,
                });
            }
        }
        EnvyGraph {
            n: instance.agent_count(),
            edges,
        }
    }

    pub fn enviers(&self, a: AgentId) -> Vec<AgentId> {
        self.edges
            .iter()
            .filter(|e| e.to == a.index())
            .map(|e| AgentId(e.from))
            .collect()
    }

    pub fn is_envied(&self, a: AgentId) -> bool {
        self.edges.iter().any(|e| e.to == a.index())
    }

    pub fn envies(&self, from: AgentId, to: AgentId) -> bool {
        self.edges
            .iter()
            .any(|e| e.from == from.index() && e.to == to.index())
    }

    pub fn edge_set(&self) -> Vec<(usize, usize)> {
        self.edges.iter().map(|e| (e.from, e.to)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StrongEnvy {
    pub envier: usize,
    pub envied: usize,
    pub good: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EfxReport {
    pub passed: bool,
    pub violations: Vec<StrongEnvy>,
}

/// No agent `i` has a good `g ∈ X_j` with `v_i(X_j \ g) > v_i(X_i)`.
pub fn check_efx(instance: &Instance, allocation: &Allocation) -> EfxReport {
    let violations: Vec<StrongEnvy> = EnvyGraph::compute(instance, allocation)
        .edges
        .into_iter()
        .filter_map(|e| {
            e.strong_witness.map(|g| StrongEnvy {
                envier: e.from,
                envied: e.to,
                good: g,
            })
        })
        .collect();
    EfxReport {
        passed: violations.is_empty(),
        violations,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OrientationReport {
    pub passed: bool,
    /// `(agent, good)` pairs where the good is not incident to its holder.
    pub offending: Vec<(usize, usize)>,
}

pub fn check_orientation(instance: &Instance, allocation: &Allocation) -> OrientationReport {
    let mut offending = Vec::new();
    for a in instance.agents() {
        for g in allocation.bundle(a).iter() {
            if !instance.good(g).touches(a) {
                offending.push((a.index(), g.index()));
            }
        }
    }
    OrientationReport {
        passed: offending.is_empty(),
        offending,
    }
}

/// 0, 1, or 2 where 2 stands for "some envy path has length at least two"
/// (this includes envy cycles).
pub fn max_envy_path_length(instance: &Instance, allocation: &Allocation) -> usize {
    let graph = EnvyGraph::compute(instance, allocation);
    if graph.edges.is_empty() {
        return 0;
    }
    let mut has_in = vec![false; graph.n];
    let mut has_out = vec![false; graph.n];
    for e in &graph.edges {
        has_out[e.from] = true;
        has_in[e.to] = true;
    }
    if (0..graph.n).any(|a| has_in[a] && has_out[a]) {
        2
    } else {
        1
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub agents: Vec<usize>,
    pub goods: Vec<usize>,
    pub detail: String,
}

impl Witness {
    fn new(agents: &[AgentId], goods: &[GoodId], detail: impl Into<String>) -> Self {
        Witness {
            agents: agents.iter().map(|a| a.index()).collect(),
            goods: goods.iter().map(|g| g.index()).collect(),
            detail: detail.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SingleEnvierReport {
    pub passed: bool,
    pub witnesses: Vec<Witness>,
}

/// Every envied agent has at most one envier `j`, and then `X_i ⊆ E(i, j)`.
pub fn check_single_envier(instance: &Instance, allocation: &Allocation) -> SingleEnvierReport {
    let graph = EnvyGraph::compute(instance, allocation);
    let mut witnesses = Vec::new();
    for i in instance.agents() {
        let enviers = graph.enviers(i);
        if enviers.len() > 1 {
            witnesses.push(Witness::new(
                &[&[i][..], &enviers].concat(),
                &[],
                format!("agent {i} has {} enviers", enviers.len()),
            ));
        }
        for &j in &enviers {
            let outside = allocation.bundle(i).difference(&instance.pair_goods(i, j));
            if !outside.is_empty() {
                witnesses.push(Witness::new(
                    &[i, j],
                    &outside.to_vec(),
                    format!("agent {i} is envied by {j} but holds goods outside E({i},{j})"),
                ));
            }
        }
    }
    SingleEnvierReport {
        passed: witnesses.is_empty(),
        witnesses,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PropertyOutcome {
    pub property: u8,
    pub passed: bool,
    pub witnesses: Vec<Witness>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PropertyReport {
    pub outcomes: Vec<PropertyOutcome>,
}

impl PropertyReport {
    pub fn all_passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    pub fn failed(&self) -> Vec<u8> {
        self.outcomes
            .iter()
            .filter(|o| !o.passed)
            .map(|o| o.property)
            .collect()
    }

    pub fn outcome(&self, property: u8) -> Option<&PropertyOutcome> {
        self.outcomes.iter().find(|o| o.property == property)
    }
}

/// Parse `"1..7"`, `"1-4"`, `"2,5,7"` or a single number into a sorted list within 1..=7.
pub fn parse_property_list(s: &str) -> Option<Vec<u8>> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let part = part.trim();
        let range = part.split_once("..").or_else(|| part.split_once('-'));
        match range {
            Some((a, b)) => {
                let a: u8 = a.trim().parse().ok()?;
                let b: u8 = b.trim().trim_start_matches('=').parse().ok()?;
                if a > b {
                    return None;
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().ok()?),
        }
    }
    if out.iter().any(|p| !(1..=7).contains(p)) {
        return None;
    }
    out.sort_unstable();
    out.dedup();
    Some(out)
}

/// How the two endpoints of a configured pair hold its unit bundles.
struct PairHolding {
    config: CutConfiguration,
    shared: Bundle,
    held_lo: Bundle,
    held_hi: Bundle,
}

impl PairHolding {
    fn held(&self, a: AgentId) -> &Bundle {
        if a == self.config.pair.0 {
            &self.held_lo
        } else {
            &self.held_hi
        }
    }
}

fn holding(allocation: &Allocation, config: &CutConfiguration) -> Result<PairHolding, String> {
    let (lo, hi) = config.pair;
    let shared = config.goods();
    let held_lo = allocation.bundle(lo).intersection(&shared);
    let held_hi = allocation.bundle(hi).intersection(&shared);
    if allocation.allocated().intersection(&shared) != held_lo.union(&held_hi) {
        return Err(format!("goods of E({lo},{hi}) are held by a third agent"));
    }
    for (a, held) in [(lo, &held_lo), (hi, &held_hi)] {
        if !held.is_empty() && config.part_index(held).is_none() {
            return Err(format!(
                "agent {a} holds {held:?} of E({lo},{hi}), which is not a whole unit bundle"
            ));
        }
    }
    Ok(PairHolding {
        config: config.clone(),
        shared,
        held_lo,
        held_hi,
    })
}

/// Evaluates the properties `which` (subset of 1..=7) on the state's
/// allocation and sequence.
pub fn check_properties(state: &SolverState<'_>, which: &[u8]) -> PropertyReport {
    let instance = state.instance();
    let x = state.allocation();
    let graph = EnvyGraph::compute(instance, x);
    let envied: Vec<bool> = instance.agents().map(|a| graph.is_envied(a)).collect();

    // Holdings per configured pair; configuration problems feed property 2.
    let mut holdings = Vec::new();
    let mut p2 = Vec::new();
    for ((a, b), _) in instance.pairs() {
        match state.configuration(a, b) {
            None => p2.push(Witness::new(
                &[a, b],
                &[],
                "no configuration fixed for the pair",
            )),
            Some(cfg) => match holding(x, cfg) {
                Ok(h) => holdings.push(h),
                Err(msg) => p2.push(Witness::new(&[a, b], &[], msg)),
            },
        }
    }

    let (b1, b2) = b_sets(instance, &holdings);
    let unallocated = x.unallocated();

    let mut outcomes = Vec::new();
    for &p in which {
        let witnesses = match p {
            1 => {
                let mut w: Vec<Witness> = check_orientation(instance, x)
                    .offending
                    .into_iter()
                    .map(|(a, g)| {
                        Witness::new(
                            &[AgentId(a)],
                            &[GoodId(g)],
                            "good not incident to its holder",
                        )
                    })
                    .collect();
                w.extend(check_efx(instance, x).violations.into_iter().map(|v| {
                    Witness::new(
                        &[AgentId(v.envier), AgentId(v.envied)],
                        &[GoodId(v.good)],
                        "strong envy",
                    )
                }));
                w
            }
            2 => p2.clone(),
            3 => {
                let mut w = Vec::new();
                for h in &holdings {
                    for part in &h.config.parts {
                        if part.is_empty() || !part.is_subset(&unallocated) {
                            continue;
                        }
                        for a in [h.config.pair.0, h.config.pair.1] {
                            if instance.value(a, x.bundle(a)) < instance.value(a, part) {
                                w.push(Witness::new(
                                    &[a],
                                    &part.to_vec(),
                                    format!("agent {a} prefers an unallocated unit bundle"),
                                ));
                            }
                        }
                    }
                }
                w
            }
            4 => {
                let mut w = Vec::new();
                for e in &graph.edges {
                    for f in graph.edges.iter().filter(|f| f.from == e.to) {
                        w.push(Witness::new(
                            &[AgentId(e.from), AgentId(e.to), AgentId(f.to)],
                            &[],
                            "envy path of length two",
                        ));
                    }
                }
                w
            }
            5 => instance
                .agents()
                .filter(|a| !envied[a.index()] && !b1[a.index()].is_empty())
                .map(|a| {
                    Witness::new(
                        &[a],
                        &b1[a.index()].to_vec(),
                        "non-envied agent with B1 nonempty",
                    )
                })
                .collect(),
            6 => instance
                .agents()
                .filter(|&a| !envied[a.index()])
                .filter_map(|a| {
                    let u = instance.incident_goods(a).intersection(&unallocated);
                    (instance.value(a, x.bundle(a)) < instance.value(a, &u)).then(|| {
                        Witness::new(
                            &[a],
                            &u.to_vec(),
                            "non-envied agent prefers its unallocated incident goods",
                        )
                    })
                })
                .collect(),
            7 => {
                let mut w = Vec::new();
                for i in instance.agents().filter(|a| envied[a.index()]) {
                    let own = instance.value(i, x.bundle(i));
                    for j in graph.enviers(i) {
                        for (u, b) in [(1, &b1[i.index()]), (2, &b2[i.index()])] {
                            if instance.value(i, &x.bundle(j).union(b)) > own {
                                w.push(Witness::new(
                                    &[i, j],
                                    &b.to_vec(),
                                    format!("envied agent {i} prefers X_{j} plus B{u}"),
                                ));
                            }
                        }
                    }
                }
                w
            }
            _ => vec![Witness::new(&[], &[], format!("unknown property {p}"))],
        };
        outcomes.push(PropertyOutcome {
            property: p,
            passed: witnesses.is_empty(),
            witnesses,
        });
    }
    PropertyReport { outcomes }
}

/// Aggregated `B1[i]`, `B2[i]` from per-pair holdings. When both unit bundles
/// are free the lower-id endpoint takes `(C1, C2)` and the other `(C2, C1)`.
fn b_sets(instance: &Instance, holdings: &[PairHolding]) -> (Vec<Bundle>, Vec<Bundle>) {
    let n = instance.agent_count();
    let mut b1 = vec![instance.empty_bundle(); n];
    let mut b2 = vec![instance.empty_bundle(); n];
    for h in holdings {
        let (lo, hi) = h.config.pair;
        let [c1, c2] = &h.config.parts;
        for a in [lo, hi] {
            let other = h.config.other_endpoint(a);
            let (first, second) = if !h.held(a).is_empty() {
                continue;
            } else if !h.held(other).is_empty() {
                let free = h.shared.difference(h.held(other));
                (free.clone(), free)
            } else if a == lo {
                (c1.clone(), c2.clone())
            } else {
                (c2.clone(), c1.clone())
            };
            b1[a.index()].union_with(&first);
            b2[a.index()].union_with(&second);
        }
    }
    (b1, b2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ValuationSpec;

    fn identical(weights: &[u64]) -> Instance {
        let ends: Vec<[usize; 2]> = weights.iter().map(|_| [0, 1]).collect();
        let spec = ValuationSpec::Additive {
            weights: weights
                .iter()
                .enumerate()
                .map(|(g, &w)| (GoodId(g), w))
                .collect(),
        };
        Instance::new(2, &ends, vec![spec.clone(), spec]).unwrap()
    }

    fn alloc(m: usize, bundles: &[&[usize]]) -> Allocation {
        Allocation::from_bundles(
            bundles
                .iter()
                .map(|b| Bundle::from_goods(m, b.iter().map(|&g| GoodId(g))))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn efx_examples() {
        let inst = identical(&[5, 3, 3]);
        assert!(check_efx(&inst, &Allocation::for_instance(&inst)).passed);
        assert!(check_efx(&inst, &alloc(3, &[&[0], &[1, 2]])).passed);
        let bad = check_efx(&inst, &alloc(3, &[&[1], &[0, 2]]));
        assert!(!bad.passed);
        assert_eq!(
            bad.violations,
            vec![StrongEnvy {
                envier: 0,
                envied: 1,
                good: 2
            }]
        );
    }

    #[test]
    fn orientation_examples() {
        let inst = Instance::new(
            3,
            &[[0, 1], [1, 2]],
            (0..3)
                .map(|_| ValuationSpec::Additive { weights: [].into() })
                .collect(),
        )
        .unwrap();
        assert!(check_orientation(&inst, &Allocation::for_instance(&inst)).passed);
        let r = check_orientation(&inst, &alloc(2, &[&[0, 1], &[], &[]]));
        assert_eq!(r.offending, vec![(0, 1)]);
    }

    #[test]
    fn envy_path_lengths() {
        // path 0 - 1 - 2 with one good per edge, all weights 1
        let specs = vec![
            ValuationSpec::Additive {
                weights: [(GoodId(0), 1)].into(),
            },
            ValuationSpec::Additive {
                weights: [(GoodId(0), 1), (GoodId(1), 1)].into(),
            },
            ValuationSpec::Additive {
                weights: [(GoodId(1), 1)].into(),
            },
        ];
        let inst = Instance::new(3, &[[0, 1], [1, 2]], specs).unwrap();
        assert_eq!(max_envy_path_length(&inst, &alloc(2, &[&[], &[], &[]])), 0);
        assert_eq!(max_envy_path_length(&inst, &alloc(2, &[&[], &[0], &[]])), 1);
        // 1 values g0 and g1 equally, so 0 -> 1 is the only edge
        assert_eq!(
            max_envy_path_length(&inst, &alloc(2, &[&[], &[0], &[1]])),
            1
        );
        let mutual = identical(&[1, 1]);
        // each holds nothing the other wants... giving both to one creates one edge
        assert_eq!(max_envy_path_length(&mutual, &alloc(2, &[&[0, 1], &[]])), 1);
    }

    #[test]
    fn envy_chain_is_detected() {
        // 0 envies 1 through g0, 1 envies 2 through g1 (1 values g1 more than g0)
        let specs = vec![
            ValuationSpec::Additive {
                weights: [(GoodId(0), 1)].into(),
            },
            ValuationSpec::Additive {
                weights: [(GoodId(0), 1), (GoodId(1), 5)].into(),
            },
            ValuationSpec::Additive {
                weights: [(GoodId(1), 1)].into(),
            },
        ];
        let inst = Instance::new(3, &[[0, 1], [1, 2]], specs).unwrap();
        assert_eq!(
            max_envy_path_length(&inst, &alloc(2, &[&[], &[0], &[1]])),
            2
        );
    }

    #[test]
    fn single_envier_examples() {
        let inst = identical(&[5, 3, 3]);
        assert!(check_single_envier(&inst, &Allocation::for_instance(&inst)).passed);
        assert!(check_single_envier(&inst, &alloc(3, &[&[0], &[]])).passed);
        // star: center 0 holds goods from two leaves, both of which envy it
        let specs = vec![
            ValuationSpec::Additive {
                weights: [(GoodId(0), 1), (GoodId(1), 1)].into(),
            },
            ValuationSpec::Additive {
                weights: [(GoodId(0), 1)].into(),
            },
            ValuationSpec::Additive {
                weights: [(GoodId(1), 1)].into(),
            },
        ];
        let star = Instance::new(3, &[[0, 1], [0, 2]], specs).unwrap();
        let r = check_single_envier(&star, &alloc(2, &[&[0, 1], &[], &[]]));
        assert!(!r.passed);
        assert!(r.witnesses.iter().any(|w| w.detail.contains("2 enviers")));
        assert!(r.witnesses.iter().any(|w| w.detail.contains("outside")));
    }

    #[test]
    fn property_list_parsing() {
        assert_eq!(
            parse_property_list("1..7").unwrap(),
            (1..=7).collect::<Vec<_>>()
        );
        assert_eq!(parse_property_list("1-4").unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(parse_property_list("7,2,2").unwrap(), vec![2, 7]);
        assert!(parse_property_list("0..3").is_none());
        assert!(parse_property_list("x").is_none());
    }
}
