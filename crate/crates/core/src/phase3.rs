//! Phase three: hand the free goods around each envied agent to its unique
//! envier, completing the allocation. This is the only step that relies on the
//! skeleton being triangle-free.

use serde::Serialize;

use crate::config::{record, CheckLevel, SolveConfig, TraceSink};
use crate::error::{EfxError, Result};
use crate::model::AgentId;
use crate::phase2::{enviers, BSets};
use crate::state::SolverState;
use crate::verify;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Dump {
    pub envied: usize,
    pub receiver: usize,
    pub goods: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Phase3Report {
    pub envied: usize,
    pub dumps: Vec<Dump>,
}

/// Dump `B1` of every envied agent onto its envier. The B-sets are taken from
/// the allocation on entry.
pub fn run_phase3(
    state: &mut SolverState<'_>,
    config: &SolveConfig,
    trace: &mut dyn TraceSink,
) -> Result<Phase3Report> {
    let instance = state.instance();
    if let Some(t) = instance.find_triangle() {
        return Err(EfxError::NotTriangleFree(t));
    }
    let frozen = BSets::compute(state)?;
    let enviers = enviers(state);
    let envied: Vec<(AgentId, AgentId)> = instance
        .agents()
        .filter_map(|i| match enviers[i.index()].as_slice() {
            [] => None,
            [j] => Some(Ok((i, *j))),
            many => Some(Err(EfxError::internal(
                "phase3",
                format!("agent {i} has {} enviers", many.len()),
            ))),
        })
        .collect::<Result<_>>()?;

    if envied.len() >= instance.agent_count().max(1) {
        return Err(EfxError::internal("phase3", "every agent is envied"));
    }
    // Adjacent envied agents have distinct enviers, and their dumps never overlap.
    for (a, &(i, j)) in envied.iter().enumerate() {
        for &(k, l) in &envied[a + 1..] {
            if instance.pair_goods_ref(i, k).is_some() && j == l {
                return Err(EfxError::internal(
                    "phase3",
                    format!("adjacent envied agents {i} and {k} share the envier {j}"),
                ));
            }
            if frozen.b1(i).intersects(frozen.b1(k)) {
                return Err(EfxError::internal(
                    "phase3",
                    format!("B1 of envied agents {i} and {k} overlap"),
                ));
            }
        }
    }

    let mut report = Phase3Report {
        envied: envied.len(),
        dumps: Vec::with_capacity(envied.len()),
    };
    for &(i, j) in &envied {
        let extra = frozen.b1(i);
        state.add(j, extra, "phase3")?;
        let dump = Dump {
            envied: i.index(),
            receiver: j.index(),
            goods: extra.iter().map(|g| g.index()).collect(),
        };
        trace.emit(record(3, "dump", serde_json::to_value(&dump)?));
        report.dumps.push(dump);
    }

    let x = state.allocation();
    if let Some(g) = x.unallocated().min_good() {
        return Err(EfxError::internal(
            "phase3",
            format!("good {g} is still unallocated"),
        ));
    }
    if config.at_least(CheckLevel::Final) {
        let efx = verify::check_efx(instance, x);
        if let Some(v) = efx.violations.first() {
            return Err(EfxError::internal(
                "phase3",
                format!(
                    "agent {} strongly envies {} (witness good {})",
                    v.envier, v.envied, v.good
                ),
            ));
        }
    }
    Ok(report)
}
