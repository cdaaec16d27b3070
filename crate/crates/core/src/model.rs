//! Instances on multi-graphs: agents are vertices, goods are (possibly parallel)
//! edges, and every agent values only the goods incident to it.

use std::collections::BTreeMap;
use std::fmt;

use crate::bundle::Bundle;
use crate::error::{EfxError, Result};

/// Largest incident degree for which an explicit subset table is accepted.
pub const MAX_TABLE_DEGREE: usize = 20;

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AgentId(pub usize);

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GoodId(pub usize);

impl AgentId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl GoodId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for GoodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Good {
    pub id: GoodId,
    pub endpoints: [AgentId; 2],
}

impl Good {
    pub fn other(&self, a: AgentId) -> AgentId {
        if self.endpoints[0] == a {
            self.endpoints[1]
        } else {
            self.endpoints[0]
        }
    }

    pub fn touches(&self, a: AgentId) -> bool {
        self.endpoints[0] == a || self.endpoints[1] == a
    }
}

/// Valuation payload as supplied by a caller, keyed by global good ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ValuationSpec {
    Additive {
        weights: BTreeMap<GoodId, u64>,
    },
    /// `transform[w]` is the value of a bundle whose incident weight sum is `w`.
    TransformedAdditive {
        weights: BTreeMap<GoodId, u64>,
        transform: Vec<u64>,
    },
    /// `table[mask]`, where bit `k` of `mask` stands for the agent's `k`-th
    /// incident good in ascending id order.
    MonotoneTable {
        table: Vec<u64>,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum ValuationClass {
    Additive,
    TransformedAdditive,
    MonotoneTable,
}

impl ValuationClass {
    pub fn is_additive(self) -> bool {
        self == ValuationClass::Additive
    }

    /// Additive and strictly-increasing transforms of additive are cancelable;
    /// a general table is only known to be monotone.
    pub fn is_cancelable(self) -> bool {
        matches!(
            self,
            ValuationClass::Additive | ValuationClass::TransformedAdditive
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            ValuationClass::Additive => "additive",
            ValuationClass::TransformedAdditive => "transformed_additive",
            ValuationClass::MonotoneTable => "monotone_table",
        }
    }
}

/// Weights and tables here are indexed by the owner's local incident index.
#[derive(Clone, Debug, PartialEq, Eq)]
enum Payload {
    Additive {
        weights: Vec<u64>,
    },
    TransformedAdditive {
        weights: Vec<u64>,
        transform: Vec<u64>,
    },
    MonotoneTable {
        table: Vec<u64>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Valuation {
    owner: AgentId,
    /// Incident goods, ascending.
    incident: Vec<GoodId>,
    payload: Payload,
}

impl Valuation {
    pub fn owner(&self) -> AgentId {
        self.owner
    }

    pub fn class(&self) -> ValuationClass {
        match self.payload {
            Payload::Additive { .. } => ValuationClass::Additive,
            Payload::TransformedAdditive { .. } => ValuationClass::TransformedAdditive,
            Payload::MonotoneTable { .. } => ValuationClass::MonotoneTable,
        }
    }

    pub fn incident(&self) -> &[GoodId] {
        &self.incident
    }

    /// Singleton weight of an incident good, for the additive-based classes.
    pub fn weight(&self, local: usize) -> Option<u64> {
        match &self.payload {
            Payload::Additive { weights } | Payload::TransformedAdditive { weights, .. } => {
                Some(weights[local])
            }
            Payload::MonotoneTable { .. } => None,
        }
    }

    /// Number of distinct values the valuation can take.
    pub fn distinct_values(&self) -> usize {
        match &self.payload {
            Payload::MonotoneTable { table } => {
                let mut v = table.clone();
                v.sort_unstable();
                v.dedup();
                v.len()
            }
            // Bounded by the attainable weight sums; not enumerated.
            Payload::Additive { weights } | Payload::TransformedAdditive { weights, .. } => {
                weights.iter().sum::<u64>().saturating_add(1) as usize
            }
        }
    }

    pub fn to_spec(&self) -> ValuationSpec {
        let keyed = |weights: &[u64]| -> BTreeMap<GoodId, u64> {
            self.incident
                .iter()
                .copied()
                .zip(weights.iter().copied())
                .collect()
        };
        match &self.payload {
            Payload::Additive { weights } => ValuationSpec::Additive {
                weights: keyed(weights),
            },
            Payload::TransformedAdditive { weights, transform } => {
                ValuationSpec::TransformedAdditive {
                    weights: keyed(weights),
                    transform: transform.clone(),
                }
            }
            Payload::MonotoneTable { table } => ValuationSpec::MonotoneTable {
                table: table.clone(),
            },
        }
    }

    fn value_local(&self, locals: impl Iterator<Item = usize>) -> u64 {
        match &self.payload {
            Payload::Additive { weights } => locals.map(|k| weights[k]).sum(),
            Payload::TransformedAdditive { weights, transform } => {
                let w: u64 = locals.map(|k| weights[k]).sum();
                transform[w as usize]
            }
            Payload::MonotoneTable { table } => {
                let mask = locals.fold(0usize, |m, k| m | (1 << k));
                table[mask]
            }
        }
    }
}

/// Simple graph over agents obtained by collapsing parallel goods.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Skeleton {
    neighbors: Vec<Vec<AgentId>>,
}

impl Skeleton {
    pub fn agent_count(&self) -> usize {
        self.neighbors.len()
    }

    pub fn neighbors(&self, a: AgentId) -> &[AgentId] {
        &self.neighbors[a.index()]
    }

    pub fn has_edge(&self, a: AgentId, b: AgentId) -> bool {
        self.neighbors[a.index()].binary_search(&b).is_ok()
    }

    /// Edges `(a, b)` with `a < b`, ascending.
    pub fn edges(&self) -> Vec<(AgentId, AgentId)> {
        let mut out = Vec::new();
        for (a, ns) in self.neighbors.iter().enumerate() {
            for &b in ns {
                if a < b.index() {
                    out.push((AgentId(a), b));
                }
            }
        }
        out
    }

    /// Lexicographically smallest triangle, if any.
    pub fn find_triangle(&self) -> Option<[AgentId; 3]> {
        for (a, b) in self.edges() {
            for &c in self.neighbors(b) {
                if c > b && self.has_edge(a, c) {
                    return Some([a, b, c]);
                }
            }
        }
        None
    }
}

#[derive(Clone, Debug)]
pub struct Instance {
    n: usize,
    goods: Vec<Good>,
    valuations: Vec<Valuation>,
    incident: Vec<Bundle>,
    // Position of each good in its endpoints' incident lists.
    local_index: Vec<[usize; 2]>,
    pair_goods: BTreeMap<(AgentId, AgentId), Bundle>,
    skeleton: Skeleton,
}

impl PartialEq for Instance {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.goods == other.goods && self.valuations == other.valuations
    }
}

impl Eq for Instance {}

fn ordered(a: AgentId, b: AgentId) -> (AgentId, AgentId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Instance {
    /// Build and validate an instance. `endpoints[g]` are the two agents of good `g`.
    pub fn new(n: usize, endpoints: &[[usize; 2]], specs: Vec<ValuationSpec>) -> Result<Self> {
        let invalid = |msg: String| Err(EfxError::InvalidInstance(msg));
        if n == 0 {
            return invalid("an instance needs at least one agent".into());
        }
        if specs.len() != n {
            return invalid(format!("{} valuations for {} agents", specs.len(), n));
        }
        let m = endpoints.len();
        let mut goods = Vec::with_capacity(m);
        let mut incident_lists: Vec<Vec<GoodId>> = vec![Vec::new(); n];
        let mut local_index = Vec::with_capacity(m);
        for (g, &[u, v]) in endpoints.iter().enumerate() {
            if u >= n || v >= n {
                return invalid(format!("good {g} has an endpoint outside 0..{n}"));
            }
            if u == v {
                return invalid(format!("good {g} is a self-loop on agent {u}"));
            }
            let id = GoodId(g);
            local_index.push([incident_lists[u].len(), incident_lists[v].len()]);
            incident_lists[u].push(id);
            incident_lists[v].push(id);
            goods.push(Good {
                id,
                endpoints: [AgentId(u), AgentId(v)],
            });
        }

        let mut valuations = Vec::with_capacity(n);
        for (a, spec) in specs.into_iter().enumerate() {
            let incident = &incident_lists[a];
            let local_weights = |weights: &BTreeMap<GoodId, u64>| -> Result<Vec<u64>> {
                let mut out = vec![0u64; incident.len()];
                for (&g, &w) in weights {
                    match incident.binary_search(&g) {
                        Ok(k) => out[k] = w,
                        Err(_) => {
                            return Err(EfxError::InvalidInstance(format!(
                                "agent {a} has a weight for non-incident good {g}"
                            )))
                        }
                    }
                }
                Ok(out)
            };
            let payload = match spec {
                ValuationSpec::Additive { weights } => Payload::Additive {
                    weights: local_weights(&weights)?,
                },
                ValuationSpec::TransformedAdditive { weights, transform } => {
                    let weights = local_weights(&weights)?;
                    let total: u64 = weights.iter().sum();
                    if (transform.len() as u64) <= total {
                        return invalid(format!(
                            "agent {a}: transform has {} entries but weight sums reach {total}",
                            transform.len()
                        ));
                    }
                    if transform[0] != 0 {
                        return invalid(format!("agent {a}: transform must map 0 to 0"));
                    }
                    if transform.windows(2).any(|w| w[0] >= w[1]) {
                        return invalid(format!("agent {a}: transform is not strictly increasing"));
                    }
                    Payload::TransformedAdditive { weights, transform }
                }
                ValuationSpec::MonotoneTable { table } => {
                    let d = incident.len();
                    if d > MAX_TABLE_DEGREE {
                        return invalid(format!(
                            "agent {a}: monotone table needs degree <= {MAX_TABLE_DEGREE}, got {d}"
                        ));
                    }
                    if table.len() != 1 << d {
                        return invalid(format!(
                            "agent {a}: table has {} entries, expected {}",
                            table.len(),
                            1usize << d
                        ));
                    }
                    if table[0] != 0 {
                        return invalid(format!("agent {a}: value of the empty set must be 0"));
                    }
                    for mask in 1..table.len() {
                        for k in 0..d {
                            let sub = mask & !(1 << k);
                            if sub != mask && table[sub] > table[mask] {
                                return invalid(format!(
                                    "agent {a}: table not monotone at mask {mask:#b} vs {sub:#b}"
                                ));
                            }
                        }
                    }
                    Payload::MonotoneTable { table }
                }
            };
            valuations.push(Valuation {
                owner: AgentId(a),
                incident: incident.clone(),
                payload,
            });
        }

        let incident = incident_lists
            .iter()
            .map(|gs| Bundle::from_goods(m, gs.iter().copied()))
            .collect();
        let mut pair_goods: BTreeMap<(AgentId, AgentId), Bundle> = BTreeMap::new();
        for good in &goods {
            let key = ordered(good.endpoints[0], good.endpoints[1]);
            pair_goods
                .entry(key)
                .or_insert_with(|| Bundle::empty(m))
                .insert(good.id);
        }
        let mut neighbors = vec![Vec::new(); n];
        for &(a, b) in pair_goods.keys() {
            neighbors[a.index()].push(b);
            neighbors[b.index()].push(a);
        }
        for ns in &mut neighbors {
            ns.sort_unstable();
        }
        Ok(Instance {
            n,
            goods,
            valuations,
            incident,
            local_index,
            pair_goods,
            skeleton: Skeleton { neighbors },
        })
    }

    pub fn agent_count(&self) -> usize {
        self.n
    }

    pub fn good_count(&self) -> usize {
        self.goods.len()
    }

    pub fn agents(&self) -> impl Iterator<Item = AgentId> + Clone {
        (0..self.n).map(AgentId)
    }

    pub fn goods(&self) -> &[Good] {
        &self.goods
    }

    pub fn good(&self, g: GoodId) -> &Good {
        &self.goods[g.index()]
    }

    pub fn valuation(&self, a: AgentId) -> &Valuation {
        &self.valuations[a.index()]
    }

    pub fn valuations(&self) -> &[Valuation] {
        &self.valuations
    }

    pub fn empty_bundle(&self) -> Bundle {
        Bundle::empty(self.goods.len())
    }

    pub fn all_goods(&self) -> Bundle {
        Bundle::full(self.goods.len())
    }

    /// `v_a(s ∩ E(a))`.
    pub fn value(&self, a: AgentId, s: &Bundle) -> u64 {
        let val = &self.valuations[a.index()];
        val.value_local(
            s.iter_intersection(&self.incident[a.index()])
                .map(|g| self.local_of(a, g)),
        )
    }

    /// Position of good `g` in `a`'s ascending incident list. `g` must touch `a`.
    pub fn local_of(&self, a: AgentId, g: GoodId) -> usize {
        let good = &self.goods[g.index()];
        if good.endpoints[0] == a {
            self.local_index[g.index()][0]
        } else {
            self.local_index[g.index()][1]
        }
    }

    /// `E(a)`.
    pub fn incident_goods(&self, a: AgentId) -> &Bundle {
        &self.incident[a.index()]
    }

    /// `E(a, b)`; symmetric, empty for non-adjacent pairs.
    pub fn pair_goods(&self, a: AgentId, b: AgentId) -> Bundle {
        self.pair_goods_ref(a, b)
            .cloned()
            .unwrap_or_else(|| self.empty_bundle())
    }

    pub fn pair_goods_ref(&self, a: AgentId, b: AgentId) -> Option<&Bundle> {
        self.pair_goods.get(&ordered(a, b))
    }

    /// Adjacent pairs `(a, b)` with `a < b` and their shared goods.
    pub fn pairs(&self) -> impl Iterator<Item = ((AgentId, AgentId), &Bundle)> {
        self.pair_goods.iter().map(|(k, v)| (*k, v))
    }

    pub fn skeleton(&self) -> &Skeleton {
        &self.skeleton
    }

    pub fn neighbors(&self, a: AgentId) -> &[AgentId] {
        self.skeleton.neighbors(a)
    }

    pub fn is_triangle_free(&self) -> bool {
        self.skeleton.find_triangle().is_none()
    }

    pub fn find_triangle(&self) -> Option<[AgentId; 3]> {
        self.skeleton.find_triangle()
    }

    pub fn degree(&self, a: AgentId) -> usize {
        self.valuations[a.index()].incident.len()
    }
}

/// One bundle per agent; bundles are pairwise disjoint at all times.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Allocation {
    bundles: Vec<Bundle>,
    allocated: Bundle,
}

impl Allocation {
    pub fn empty(n: usize, m: usize) -> Self {
        Allocation {
            bundles: vec![Bundle::empty(m); n],
            allocated: Bundle::empty(m),
        }
    }

    pub fn for_instance(instance: &Instance) -> Self {
        Self::empty(instance.agent_count(), instance.good_count())
    }

    /// Fails with the first good claimed by two agents.
    pub fn from_bundles(bundles: Vec<Bundle>) -> Result<Self, GoodId> {
        let m = bundles.first().map_or(0, Bundle::capacity);
        let mut allocated = Bundle::empty(m);
        for b in &bundles {
            if let Some(g) = b.iter_intersection(&allocated).next() {
                return Err(g);
            }
            allocated.union_with(b);
        }
        Ok(Allocation { bundles, allocated })
    }

    pub fn agent_count(&self) -> usize {
        self.bundles.len()
    }

    pub fn bundle(&self, a: AgentId) -> &Bundle {
        &self.bundles[a.index()]
    }

    pub fn bundles(&self) -> &[Bundle] {
        &self.bundles
    }

    pub fn allocated(&self) -> &Bundle {
        &self.allocated
    }

    pub fn unallocated(&self) -> Bundle {
        Bundle::full(self.allocated.capacity()).difference(&self.allocated)
    }

    pub fn is_complete(&self) -> bool {
        self.allocated.len() == self.allocated.capacity()
    }

    pub fn owner_of(&self, g: GoodId) -> Option<AgentId> {
        if !self.allocated.contains(g) {
            return None;
        }
        self.bundles.iter().position(|b| b.contains(g)).map(AgentId)
    }

    /// Replace `X_a`. Fails, leaving the allocation untouched, if a new good is
    /// held by someone else.
    pub fn set_bundle(&mut self, a: AgentId, bundle: Bundle) -> Result<(), GoodId> {
        let mut others = self.allocated.difference(&self.bundles[a.index()]);
        if let Some(g) = bundle.iter_intersection(&others).next() {
            return Err(g);
        }
        others.union_with(&bundle);
        self.allocated = others;
        self.bundles[a.index()] = bundle;
        Ok(())
    }

    /// `X_a ← X_a ∪ extra`; the extra goods must be unallocated.
    pub fn add_to(&mut self, a: AgentId, extra: &Bundle) -> Result<(), GoodId> {
        if let Some(g) = extra
            .difference(&self.bundles[a.index()])
            .iter_intersection(&self.allocated)
            .next()
        {
            return Err(g);
        }
        self.bundles[a.index()].union_with(extra);
        self.allocated.union_with(extra);
        Ok(())
    }

    pub fn is_orientation(&self, instance: &Instance) -> bool {
        instance
            .agents()
            .all(|a| self.bundle(a).is_subset(instance.incident_goods(a)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn additive(pairs: &[(usize, u64)]) -> ValuationSpec {
        ValuationSpec::Additive {
            weights: pairs.iter().map(|&(g, w)| (GoodId(g), w)).collect(),
        }
    }

    fn b(m: usize, gs: &[usize]) -> Bundle {
        Bundle::from_goods(m, gs.iter().map(|&g| GoodId(g)))
    }

    #[test]
    fn value_examples() {
        // agent 0 incident to e0, e1; e2 between 1 and 2
        let inst = Instance::new(
            3,
            &[[0, 1], [0, 1], [1, 2]],
            vec![
                additive(&[(0, 3), (1, 4)]),
                additive(&[(0, 5)]),
                additive(&[]),
            ],
        )
        .unwrap();
        assert_eq!(inst.value(AgentId(1), &b(3, &[0])), 5);
        assert_eq!(inst.value(AgentId(2), &b(3, &[])), 0);
        assert_eq!(inst.value(AgentId(0), &b(3, &[0, 1, 2])), 7);
    }

    #[test]
    fn skeleton_and_incidence() {
        let par = Instance::new(
            2,
            &[[0, 1], [1, 0], [0, 1]],
            vec![additive(&[]), additive(&[])],
        )
        .unwrap();
        assert_eq!(par.skeleton().edges(), vec![(AgentId(0), AgentId(1))]);
        assert_eq!(par.pair_goods(AgentId(0), AgentId(1)).len(), 3);
        assert_eq!(
            par.pair_goods(AgentId(1), AgentId(0)),
            par.pair_goods(AgentId(0), AgentId(1))
        );

        let c4 = Instance::new(
            4,
            &[[0, 1], [1, 2], [2, 3], [3, 0]],
            vec![additive(&[]), additive(&[]), additive(&[]), additive(&[])],
        )
        .unwrap();
        assert_eq!(c4.skeleton().edges().len(), 4);
        assert!(c4.is_triangle_free());
        assert!(c4.pair_goods(AgentId(0), AgentId(2)).is_empty());

        let none =
            Instance::new(3, &[], vec![additive(&[]), additive(&[]), additive(&[])]).unwrap();
        assert!(none.skeleton().edges().is_empty());
        assert!(none.is_triangle_free());

        let tri = Instance::new(
            3,
            &[[0, 1], [1, 2], [0, 2]],
            vec![additive(&[]), additive(&[]), additive(&[])],
        )
        .unwrap();
        assert!(!tri.is_triangle_free());
        assert_eq!(
            tri.find_triangle(),
            Some([AgentId(0), AgentId(1), AgentId(2)])
        );
    }

    #[test]
    fn star_center_is_incident_to_everything() {
        let ends: Vec<[usize; 2]> = (0..10).map(|g| [0, 1 + g % 5]).collect();
        let inst = Instance::new(6, &ends, (0..6).map(|_| additive(&[])).collect()).unwrap();
        assert!(inst.is_triangle_free());
        assert_eq!(inst.incident_goods(AgentId(0)), &inst.all_goods());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Instance::new(2, &[[1, 1]], vec![additive(&[]), additive(&[])]).is_err());
        assert!(Instance::new(2, &[[0, 2]], vec![additive(&[]), additive(&[])]).is_err());
        assert!(Instance::new(
            3,
            &[[0, 1]],
            vec![additive(&[]), additive(&[]), additive(&[(0, 1)])]
        )
        .is_err());
        let non_monotone = ValuationSpec::MonotoneTable {
            table: vec![0, 5, 3, 4],
        };
        assert!(Instance::new(2, &[[0, 1], [0, 1]], vec![non_monotone, additive(&[])]).is_err());
        let not_increasing = ValuationSpec::TransformedAdditive {
            weights: [(GoodId(0), 1)].into(),
            transform: vec![0, 0],
        };
        assert!(Instance::new(2, &[[0, 1]], vec![not_increasing, additive(&[])]).is_err());
    }

    #[test]
    fn table_and_transform_values() {
        let table = ValuationSpec::MonotoneTable {
            table: vec![0, 2, 3, 9],
        };
        let tf = ValuationSpec::TransformedAdditive {
            weights: [(GoodId(0), 1), (GoodId(1), 2)].into(),
            transform: vec![0, 10, 11, 30],
        };
        let inst = Instance::new(2, &[[0, 1], [0, 1]], vec![table, tf]).unwrap();
        assert_eq!(inst.value(AgentId(0), &b(2, &[1])), 3);
        assert_eq!(inst.value(AgentId(0), &b(2, &[0, 1])), 9);
        assert_eq!(inst.value(AgentId(1), &b(2, &[1])), 11);
        assert_eq!(inst.value(AgentId(1), &b(2, &[0, 1])), 30);
    }

    #[test]
    fn allocation_rejects_overlap() {
        let mut x = Allocation::empty(2, 3);
        x.set_bundle(AgentId(0), b(3, &[0, 1])).unwrap();
        assert_eq!(x.set_bundle(AgentId(1), b(3, &[1])), Err(GoodId(1)));
        assert_eq!(x.add_to(AgentId(1), &b(3, &[2])), Ok(()));
        assert!(x.is_complete());
        assert_eq!(x.owner_of(GoodId(2)), Some(AgentId(1)));
        assert!(Allocation::from_bundles(vec![b(3, &[0]), b(3, &[0])]).is_err());
    }
}
