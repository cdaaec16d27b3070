//! JSON formats for instances, allocations and cut configurations, plus DOT
//! export of envy graphs.
//!
//! Instance:
//!
//! ```json
//! {"n": 2,
//!  "goods": [{"id": 0, "u": 0, "v": 1}],
//!  "valuations": [
//!    {"agent": 0, "class": "additive", "weights": {"0": 5}},
//!    {"agent": 1, "class": "monotone_table", "table": {"0": 0, "1": 3}}]}
//! ```
//!
//! `weights` maps good ids to weights and may omit goods of weight 0.
//! `transform` (for `transformed_additive`) lists the value of each weight
//! sum starting at 0. `table` keys are decimal bitmasks over the agent's
//! incident goods in ascending id order, and every mask must be present.
//!
//! Allocation: `{"bundles": [[0, 2], [1]]}`, one ascending list per agent,
//! optionally with `"sigma": [...]`, the picking sequence that produced it.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::bundle::Bundle;
use crate::cuts::CutConfiguration;
use crate::error::{EfxError, Result};
use crate::model::{AgentId, Allocation, GoodId, Instance, ValuationClass, ValuationSpec};
use crate::verify::EnvyGraph;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoodJson {
    pub id: usize,
    pub u: usize,
    pub v: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValuationJson {
    pub agent: usize,
    pub class: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<BTreeMap<usize, u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<BTreeMap<u64, u64>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceJson {
    pub n: usize,
    pub goods: Vec<GoodJson>,
    pub valuations: Vec<ValuationJson>,
}

fn bad(msg: impl Into<String>) -> EfxError {
    EfxError::InvalidInstance(msg.into())
}

impl InstanceJson {
    pub fn from_instance(instance: &Instance) -> Self {
        let goods = instance
            .goods()
            .iter()
            .map(|g| GoodJson {
                id: g.id.index(),
                u: g.endpoints[0].index(),
                v: g.endpoints[1].index(),
            })
            .collect();
        let valuations = instance
            .valuations()
            .iter()
            .map(|val| {
                let keyed = |w: BTreeMap<GoodId, u64>| {
                    Some(w.into_iter().map(|(g, w)| (g.index(), w)).collect())
                };
                let (weights, transform, table) = match val.to_spec() {
                    ValuationSpec::Additive { weights } => (keyed(weights), None, None),
                    ValuationSpec::TransformedAdditive { weights, transform } => {
                        (keyed(weights), Some(transform), None)
                    }
                    ValuationSpec::MonotoneTable { table } => {
                        (None, None, Some((0u64..).zip(table).collect()))
                    }
                };
                ValuationJson {
                    agent: val.owner().index(),
                    class: val.class().name().to_string(),
                    weights,
                    transform,
                    table,
                }
            })
            .collect();
        InstanceJson {
            n: instance.agent_count(),
            goods,
            valuations,
        }
    }

    pub fn to_instance(&self) -> Result<Instance> {
        let mut goods = self.goods.clone();
        goods.sort_by_key(|g| g.id);
        if let Some((k, g)) = goods.iter().enumerate().find(|(k, g)| g.id != *k) {
            return Err(bad(format!(
                "good ids must be 0..{} without gaps; found {} at position {k}",
                goods.len(),
                g.id
            )));
        }
        let endpoints: Vec<[usize; 2]> = goods.iter().map(|g| [g.u, g.v]).collect();

        let mut by_agent: Vec<Option<&ValuationJson>> = vec![None; self.n];
        for v in &self.valuations {
            let slot = by_agent
                .get_mut(v.agent)
                .ok_or_else(|| bad(format!("valuation for unknown agent {}", v.agent)))?;
            if slot.replace(v).is_some() {
                return Err(bad(format!("agent {} has two valuations", v.agent)));
            }
        }
        let specs = by_agent
            .into_iter()
            .enumerate()
            .map(|(a, v)| {
                let v = v.ok_or_else(|| bad(format!("agent {a} has no valuation")))?;
                let weights = || -> BTreeMap<GoodId, u64> {
                    v.weights
                        .iter()
                        .flatten()
                        .map(|(&g, &w)| (GoodId(g), w))
                        .collect()
                };
                let class = crate::gen::parse_class(&v.class)
                    .ok_or_else(|| bad(format!("agent {a}: unknown class {:?}", v.class)))?;
                let stray = |field: &str, present: bool| {
                    if present {
                        Err(bad(format!(
                            "agent {a}: field {field:?} does not apply to {}",
                            v.class
                        )))
                    } else {
                        Ok(())
                    }
                };
                Ok(match class {
                    ValuationClass::Additive => {
                        stray("transform", v.transform.is_some())?;
                        stray("table", v.table.is_some())?;
                        ValuationSpec::Additive { weights: weights() }
                    }
                    ValuationClass::TransformedAdditive => {
                        stray("table", v.table.is_some())?;
                        let transform = v
                            .transform
                            .clone()
                            .ok_or_else(|| bad(format!("agent {a}: missing transform")))?;
                        ValuationSpec::TransformedAdditive {
                            weights: weights(),
                            transform,
                        }
                    }
                    ValuationClass::MonotoneTable => {
                        stray("weights", v.weights.is_some())?;
                        stray("transform", v.transform.is_some())?;
                        let entries = v
                            .table
                            .as_ref()
                            .ok_or_else(|| bad(format!("agent {a}: missing table")))?;
                        let table: Vec<u64> = entries
                            .iter()
                            .enumerate()
                            .map(|(k, (&mask, &val))| {
                                if mask == k as u64 {
                                    Ok(val)
                                } else {
                                    Err(bad(format!("agent {a}: table lacks mask {k}")))
                                }
                            })
                            .collect::<Result<_>>()?;
                        ValuationSpec::MonotoneTable { table }
                    }
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Instance::new(self.n, &endpoints, specs)
    }
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    let json: InstanceJson = serde_json::from_str(text)?;
    json.to_instance()
}

pub fn instance_to_json(instance: &Instance) -> String {
    serde_json::to_string_pretty(&InstanceJson::from_instance(instance)).expect("serializable")
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllocationJson {
    pub bundles: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<usize>>,
}

impl AllocationJson {
    pub fn new(allocation: &Allocation, sigma: Option<&[AgentId]>) -> Self {
        AllocationJson {
            bundles: allocation
                .bundles()
                .iter()
                .map(|b| b.iter().map(GoodId::index).collect())
                .collect(),
            sigma: sigma.map(|s| s.iter().map(|a| a.index()).collect()),
        }
    }

    /// Validate against `instance` and build the allocation and sequence.
    pub fn to_allocation(&self, instance: &Instance) -> Result<(Allocation, Option<Vec<AgentId>>)> {
        let bad = |msg: String| EfxError::InvalidAllocation(msg);
        let (n, m) = (instance.agent_count(), instance.good_count());
        if self.bundles.len() != n {
            return Err(bad(format!(
                "{} bundles for {n} agents",
                self.bundles.len()
            )));
        }
        let mut bundles = Vec::with_capacity(n);
        for (a, goods) in self.bundles.iter().enumerate() {
            if let Some(&g) = goods.iter().find(|&&g| g >= m) {
                return Err(bad(format!("agent {a} holds unknown good {g}")));
            }
            bundles.push(Bundle::from_goods(m, goods.iter().map(|&g| GoodId(g))));
        }
        let allocation = Allocation::from_bundles(bundles)
            .map_err(|g| bad(format!("good {g} appears in two bundles")))?;
        let sigma = self
            .sigma
            .as_ref()
            .map(|s| s.iter().map(|&a| AgentId(a)).collect());
        Ok((allocation, sigma))
    }
}

pub fn allocation_to_json(allocation: &Allocation, sigma: Option<&[AgentId]>) -> String {
    serde_json::to_string_pretty(&AllocationJson::new(allocation, sigma)).expect("serializable")
}

pub fn parse_allocation(
    text: &str,
    instance: &Instance,
) -> Result<(Allocation, Option<Vec<AgentId>>)> {
    let json: AllocationJson = serde_json::from_str(text)?;
    json.to_allocation(instance)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigurationJson {
    pub pair: [usize; 2],
    pub cutter: usize,
    pub parts: [Vec<usize>; 2],
}

impl From<&CutConfiguration> for ConfigurationJson {
    fn from(c: &CutConfiguration) -> Self {
        let goods = |b: &Bundle| b.iter().map(GoodId::index).collect();
        ConfigurationJson {
            pair: [c.pair.0.index(), c.pair.1.index()],
            cutter: c.cutter.index(),
            parts: [goods(&c.parts[0]), goods(&c.parts[1])],
        }
    }
}

/// Configurations sorted by pair.
pub fn configurations_to_json(configs: &[CutConfiguration]) -> String {
    let mut out: Vec<ConfigurationJson> = configs.iter().map(Into::into).collect();
    out.sort_by_key(|c| c.pair);
    serde_json::to_string_pretty(&out).expect("serializable")
}

/// DOT digraph with one node per agent and one edge per envy relation, in
/// ascending order. Strong envy is labelled `strong`.
pub fn envy_graph_dot(graph: &EnvyGraph) -> String {
    let mut out = String::from("digraph envy {\n");
    for a in 0..graph.n {
        let _ = writeln!(out, "  {a};");
    }
    for e in &graph.edges {
        let label = if e.is_strong() {
            " [label=\"strong\"]"
        } else {
            ""
        };
        let _ = writeln!(out, "  {} -> {}{label};", e.from, e.to);
    }
    out.push_str("}\n");
    out
}
