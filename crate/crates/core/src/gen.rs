//! Seeded instance generators.
//!
//! All randomness comes from [`SplitMix64`], so a seed produces the same
//! instance on every platform. The generator is specified bit-exactly:
//!
//! ```text
//! state = state + 0x9E3779B97F4A7C15            (wrapping)
//! z = state
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9      (wrapping)
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB      (wrapping)
//! return z ^ (z >> 31)
//! ```
//!
//! Bounded draws `below(b)` reject raw outputs `r < (2^64 - b) mod b` and
//! return `r mod b`, which makes them exactly uniform.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{EfxError, Result};
use crate::model::{GoodId, Instance, ValuationClass, ValuationSpec, MAX_TABLE_DEGREE};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `0..bound`. `bound` must be positive.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "empty range");
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let r = self.next_u64();
            if r >= threshold {
                return r % bound;
            }
        }
    }

    /// Uniform in `lo..=hi`.
    pub fn between(&mut self, lo: u64, hi: u64) -> u64 {
        debug_assert!(lo <= hi);
        match (hi - lo).checked_add(1) {
            Some(span) => lo + self.below(span),
            None => self.next_u64(),
        }
    }

    pub fn index(&mut self, len: usize) -> usize {
        self.below(len as u64) as usize
    }

    /// Fisher-Yates, from the back.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for k in (1..items.len()).rev() {
            let j = self.index(k + 1);
            items.swap(k, j);
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Bipartite,
    C4Girth,
    Tree,
    Star,
    Path,
    CycleEven,
}

impl Topology {
    pub const ALL: [Topology; 6] = [
        Topology::Bipartite,
        Topology::C4Girth,
        Topology::Tree,
        Topology::Star,
        Topology::Path,
        Topology::CycleEven,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Topology::Bipartite => "bipartite",
            Topology::C4Girth => "c4_girth",
            Topology::Tree => "tree",
            Topology::Star => "star",
            Topology::Path => "path",
            Topology::CycleEven => "cycle_even",
        }
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Topology {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Topology::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| format!("unknown topology {s:?}"))
    }
}

pub fn parse_class(s: &str) -> Option<ValuationClass> {
    [
        ValuationClass::Additive,
        ValuationClass::TransformedAdditive,
        ValuationClass::MonotoneTable,
    ]
    .into_iter()
    .find(|c| c.name() == s)
}

/// Largest weight-sum a generated transform table may cover.
const MAX_TRANSFORM_LEN: u64 = 1 << 22;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenSpec {
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    pub topology: Topology,
    #[serde(with = "class_name")]
    pub valuation_class: ValuationClass,
    /// Weights (or table entries) are drawn from `0..=v_max`.
    pub v_max: u64,
    /// Maximum number of goods on one agent pair.
    pub max_parallel: usize,
    /// Optional cap on every agent's incident degree.
    #[serde(default)]
    pub max_degree: Option<usize>,
    /// Goods valued by a single agent. They hang off one extra agent who values
    /// nothing, so the instance gains an agent when this is positive.
    #[serde(default)]
    pub pendant_goods: usize,
}

impl GenSpec {
    pub fn additive(seed: u64, n: usize, m: usize, topology: Topology) -> Self {
        GenSpec {
            seed,
            n,
            m,
            topology,
            valuation_class: ValuationClass::Additive,
            v_max: 50,
            max_parallel: 4,
            max_degree: None,
            pendant_goods: 0,
        }
    }
}

mod class_name {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::model::ValuationClass;

    pub fn serialize<S: Serializer>(c: &ValuationClass, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(c.name())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<ValuationClass, D::Error> {
        let name = String::deserialize(d)?;
        super::parse_class(&name)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown valuation class {name:?}")))
    }
}

fn inconsistent(msg: impl Into<String>) -> EfxError {
    EfxError::InconsistentSpec(msg.into())
}

/// Common-neighbour test on an adjacency matrix.
fn closes_triangle(adj: &[Vec<bool>], a: usize, b: usize) -> bool {
    (0..adj.len()).any(|c| adj[a][c] && adj[b][c])
}

/// Skeleton edges for the topology, as `(a, b)` with `a < b`.
fn skeleton(spec: &GenSpec, rng: &mut SplitMix64) -> Result<Vec<(usize, usize)>> {
    let n = spec.n;
    let need = spec.m.div_ceil(spec.max_parallel.max(1));
    let sorted = |a: usize, b: usize| (a.min(b), a.max(b));
    let mut perm: Vec<usize> = (0..n).collect();
    let edges = match spec.topology {
        Topology::Tree => (1..n).map(|v| sorted(rng.index(v), v)).collect(),
        Topology::Star => {
            let c = rng.index(n);
            (0..n).filter(|&v| v != c).map(|v| sorted(c, v)).collect()
        }
        Topology::Path => {
            rng.shuffle(&mut perm);
            perm.windows(2).map(|w| sorted(w[0], w[1])).collect()
        }
        Topology::CycleEven => {
            if n < 4 || n % 2 == 1 {
                return Err(inconsistent(format!(
                    "cycle_even needs an even n >= 4, got {n}"
                )));
            }
            rng.shuffle(&mut perm);
            (0..n).map(|k| sorted(perm[k], perm[(k + 1) % n])).collect()
        }
        Topology::Bipartite => {
            rng.shuffle(&mut perm);
            let (left, right) = perm.split_at(n / 2);
            let mut cand: Vec<(usize, usize)> = left
                .iter()
                .flat_map(|&a| right.iter().map(move |&b| sorted(a, b)))
                .collect();
            cand.sort_unstable();
            if cand.len() < need {
                return Err(inconsistent(format!(
                    "bipartite n={n} has {} pairs, {need} needed for m={}",
                    cand.len(),
                    spec.m
                )));
            }
            rng.shuffle(&mut cand);
            let lo = need.max(usize::from(spec.m > 0));
            let hi = cand.len().min(spec.m).max(lo);
            let count = if hi == 0 {
                0
            } else {
                rng.between(lo as u64, hi as u64) as usize
            };
            cand.truncate(count.min(cand.len()));
            cand
        }
        Topology::C4Girth => {
            let mut cand: Vec<(usize, usize)> = (0..n)
                .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
                .collect();
            rng.shuffle(&mut cand);
            let lo = need.max(usize::from(spec.m > 0));
            let hi = (n * n / 4).min(spec.m).max(lo);
            let target = if hi == 0 {
                0
            } else {
                rng.between(lo as u64, hi as u64) as usize
            };
            let mut adj = vec![vec![false; n]; n];
            let mut edges = Vec::new();
            for (a, b) in cand {
                if edges.len() >= target {
                    break;
                }
                if !closes_triangle(&adj, a, b) {
                    adj[a][b] = true;
                    adj[b][a] = true;
                    edges.push((a, b));
                }
            }
            if edges.len() < need {
                return Err(inconsistent(format!(
                    "could not place {need} triangle-free pairs on {n} agents"
                )));
            }
            edges
        }
    };
    Ok(edges)
}

/// Distribute `m` goods over `edges`: one per edge first (while goods last),
/// then the rest uniformly among edges with spare multiplicity and degree.
fn place_goods(
    spec: &GenSpec,
    edges: &[(usize, usize)],
    rng: &mut SplitMix64,
) -> Result<Vec<[usize; 2]>> {
    let cap_deg = spec.max_degree.unwrap_or(usize::MAX);
    let mut mult = vec![0usize; edges.len()];
    let mut deg = vec![0usize; spec.n];
    let mut goods = Vec::with_capacity(spec.m);
    let mut order: Vec<usize> = (0..edges.len()).collect();
    rng.shuffle(&mut order);
    for &e in &order {
        if goods.len() == spec.m {
            break;
        }
        let (a, b) = edges[e];
        if deg[a] < cap_deg && deg[b] < cap_deg {
            mult[e] += 1;
            deg[a] += 1;
            deg[b] += 1;
            goods.push([a, b]);
        }
    }
    while goods.len() < spec.m {
        let open: Vec<usize> = (0..edges.len())
            .filter(|&e| {
                let (a, b) = edges[e];
                mult[e] < spec.max_parallel && deg[a] < cap_deg && deg[b] < cap_deg
            })
            .collect();
        if open.is_empty() {
            return Err(inconsistent(format!(
                "cannot place {} goods with max_parallel={} and max_degree={:?}",
                spec.m, spec.max_parallel, spec.max_degree
            )));
        }
        let e = open[rng.index(open.len())];
        let (a, b) = edges[e];
        mult[e] += 1;
        deg[a] += 1;
        deg[b] += 1;
        goods.push([a, b]);
    }
    Ok(goods)
}

fn valuation(
    class: ValuationClass,
    incident: &[usize],
    v_max: u64,
    rng: &mut SplitMix64,
) -> Result<ValuationSpec> {
    let weights = |rng: &mut SplitMix64| -> BTreeMap<GoodId, u64> {
        incident
            .iter()
            .map(|&g| (GoodId(g), rng.between(0, v_max)))
            .collect()
    };
    Ok(match class {
        ValuationClass::Additive => ValuationSpec::Additive {
            weights: weights(rng),
        },
        ValuationClass::TransformedAdditive => {
            let weights = weights(rng);
            let total: u64 = weights.values().sum();
            if total >= MAX_TRANSFORM_LEN {
                return Err(inconsistent(format!(
                    "transform table for weight sum {total} is too large"
                )));
            }
            // strictly increasing, mixing concave and convex stretches
            let mut transform = Vec::with_capacity(total as usize + 1);
            transform.push(0u64);
            for _ in 0..total {
                let last = *transform.last().expect("nonempty");
                transform.push(last + rng.between(1, 3));
            }
            ValuationSpec::TransformedAdditive { weights, transform }
        }
        ValuationClass::MonotoneTable => {
            let d = incident.len();
            if d > MAX_TABLE_DEGREE {
                return Err(inconsistent(format!(
                    "monotone table for degree {d} exceeds {MAX_TABLE_DEGREE}"
                )));
            }
            let mut table: Vec<u64> = (0..1usize << d).map(|_| rng.between(0, v_max)).collect();
            table[0] = 0;
            // closure: every set is worth at least each of its subsets
            for mask in 1..table.len() {
                for k in 0..d {
                    if mask >> k & 1 == 1 {
                        table[mask] = table[mask].max(table[mask ^ (1 << k)]);
                    }
                }
            }
            ValuationSpec::MonotoneTable { table }
        }
    })
}

fn build(
    n: usize,
    goods: &[[usize; 2]],
    class: ValuationClass,
    v_max: u64,
    rng: &mut SplitMix64,
    zero_agent: Option<usize>,
) -> Result<Instance> {
    let mut incident = vec![Vec::new(); n];
    for (g, e) in goods.iter().enumerate() {
        incident[e[0]].push(g);
        incident[e[1]].push(g);
    }
    let specs = (0..n)
        .map(|a| {
            if Some(a) == zero_agent {
                Ok(ValuationSpec::Additive {
                    weights: incident[a].iter().map(|&g| (GoodId(g), 0)).collect(),
                })
            } else {
                valuation(class, &incident[a], v_max, rng)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Instance::new(n, goods, specs)
}

/// Most goods a topology can carry on `n` agents, ignoring any degree cap.
/// `None` when the topology does not exist for `n`.
pub fn max_goods(topology: Topology, n: usize, max_parallel: usize) -> Option<usize> {
    let pairs = match topology {
        Topology::Tree | Topology::Star | Topology::Path => n.checked_sub(1)?,
        Topology::CycleEven => {
            if n < 4 || n % 2 == 1 {
                return None;
            }
            n
        }
        Topology::Bipartite => (n / 2) * n.div_ceil(2),
        // the greedy triangle-free fill reliably reaches a spanning bipartite-like density
        Topology::C4Girth => n.saturating_sub(1).max(n * n / 8),
    };
    Some(pairs * max_parallel)
}

/// Bounds for [`random_spec`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteBounds {
    pub n_max: usize,
    pub m_max: usize,
    pub v_max: u64,
    pub max_parallel: usize,
}

/// A consistent spec drawn from `bounds`: `n`, `max_parallel` and `m` are
/// chosen from the seed so that the topology can carry all goods.
pub fn random_spec(
    topology: Topology,
    seed: u64,
    bounds: &SuiteBounds,
    class: ValuationClass,
) -> GenSpec {
    let mut rng = SplitMix64::new(seed ^ 0x5EED_5EED_5EED_5EED);
    let n = match topology {
        Topology::CycleEven => {
            let pairs = (bounds.n_max / 2).saturating_sub(1).max(1);
            4 + 2 * rng.index(pairs)
        }
        _ => 1 + rng.index(bounds.n_max.max(1)),
    };
    let max_parallel = 1 + rng.index(bounds.max_parallel.max(1));
    let cap = max_goods(topology, n, max_parallel).unwrap_or(0);
    let m = rng.index(bounds.m_max.min(cap) + 1);
    GenSpec {
        seed,
        n,
        m,
        topology,
        valuation_class: class,
        v_max: bounds.v_max,
        max_parallel,
        max_degree: None,
        pendant_goods: 0,
    }
}

/// A random triangle-free instance. Deterministic per spec.
pub fn gen_instance(spec: &GenSpec) -> Result<Instance> {
    if spec.n == 0 {
        return Err(inconsistent("n must be at least 1"));
    }
    if spec.m > 0 && spec.max_parallel == 0 {
        return Err(inconsistent("max_parallel must be positive"));
    }
    let mut rng = SplitMix64::new(spec.seed);
    let edges = skeleton(spec, &mut rng)?;
    let mut goods = place_goods(spec, &edges, &mut rng)?;
    let mut n = spec.n;
    let mut zero_agent = None;
    if spec.pendant_goods > 0 {
        // attach to a greedy independent set so no triangle appears
        let mut adj = vec![vec![false; n]; n];
        for g in &goods {
            adj[g[0]][g[1]] = true;
            adj[g[1]][g[0]] = true;
        }
        let mut order: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut order);
        let mut hosts: Vec<usize> = Vec::new();
        for a in order {
            if hosts.iter().all(|&h| !adj[a][h]) {
                hosts.push(a);
            }
        }
        hosts.sort_unstable();
        let dummy = n;
        for _ in 0..spec.pendant_goods {
            goods.push([hosts[rng.index(hosts.len())], dummy]);
        }
        zero_agent = Some(dummy);
        n += 1;
    }
    let instance = build(
        n,
        &goods,
        spec.valuation_class,
        spec.v_max,
        &mut rng,
        zero_agent,
    )?;
    if let Some(t) = instance.find_triangle() {
        return Err(EfxError::internal(
            "gen",
            format!("generated a triangle ({}, {}, {})", t[0], t[1], t[2]),
        ));
    }
    Ok(instance)
}

/// A random instance whose skeleton contains at least one triangle, for
/// negative tests. Uses `n ≥ 3` agents and `m ≥ 3` goods.
pub fn gen_triangle_instance(seed: u64, n: usize, m: usize, v_max: u64) -> Result<Instance> {
    if n < 3 || m < 3 {
        return Err(inconsistent("a triangle needs n >= 3 and m >= 3"));
    }
    let mut rng = SplitMix64::new(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut perm);
    let (a, b, c) = (perm[0], perm[1], perm[2]);
    let mut goods = vec![[a, b], [b, c], [a, c]];
    while goods.len() < m {
        let x = rng.index(n);
        let mut y = rng.index(n - 1);
        if y >= x {
            y += 1;
        }
        goods.push([x, y]);
    }
    rng.shuffle(&mut goods);
    build(n, &goods, ValuationClass::Additive, v_max, &mut rng, None)
}

fn additive_instance(n: usize, goods: &[[usize; 2]], weights: &[[u64; 2]]) -> Instance {
    let mut specs: Vec<BTreeMap<GoodId, u64>> = vec![BTreeMap::new(); n];
    for (g, (e, w)) in goods.iter().zip(weights).enumerate() {
        specs[e[0]].insert(GoodId(g), w[0]);
        specs[e[1]].insert(GoodId(g), w[1]);
    }
    Instance::new(
        n,
        goods,
        specs
            .into_iter()
            .map(|weights| ValuationSpec::Additive { weights })
            .collect(),
    )
    .expect("handcrafted instance is valid")
}

/// A named handcrafted instance.
#[derive(Clone, Debug)]
pub struct Sample {
    pub name: &'static str,
    pub instance: Instance,
}

/// Handcrafted instances aimed at specific solver paths.
pub fn gen_adversarial_suite() -> Vec<Sample> {
    let mut out = Vec::new();

    // C4 with three parallel goods on each side.
    let mut goods = Vec::new();
    let mut weights = Vec::new();
    for (k, (a, b)) in [(0, 1), (1, 2), (2, 3), (3, 0)].into_iter().enumerate() {
        for r in 0..3u64 {
            goods.push([a, b]);
            weights.push([3 + r + k as u64, 7 - r]);
        }
    }
    out.push(Sample {
        name: "c4_triple",
        instance: additive_instance(4, &goods, &weights),
    });

    out.extend(frozen::samples());
    out
}

mod frozen;
