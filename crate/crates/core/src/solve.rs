//! End-to-end pipeline: phase one, repair, dumping.

use std::time::Instant;

use serde::Serialize;

use crate::config::{NoTrace, SolveConfig, TraceSink};
use crate::cuts::{CutConfiguration, CutRecord};
use crate::error::{EfxError, Result};
use crate::model::{AgentId, Allocation, Instance};
use crate::phase1::{self, Phase1Report};
use crate::phase2::{self, Phase2Report};
use crate::phase3::{self, Phase3Report};
use crate::state::SolverState;

/// Last phase to run. Stopping early yields a partial orientation.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub enum StopAfter {
    Phase1,
    Phase2,
    #[default]
    Phase3,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CutMetrics {
    pub count: usize,
    pub moves_total: u64,
    pub moves_max: u64,
    /// Cuts of additive cutters that needed any local-search move.
    pub additive_with_moves: usize,
    /// Cuts of cancelable cutters whose move count exceeded `m²`.
    pub cancelable_over_m2: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Metrics {
    pub n: usize,
    pub m: usize,
    pub augment_calls: usize,
    pub nonadjacent_picks: usize,
    pub phase2_iterations: usize,
    pub branch_a: usize,
    pub branch_b: usize,
    pub branch_c: usize,
    pub envied_after_phase2: usize,
    pub phase3_dumps: usize,
    pub cuts: CutMetrics,
    pub phase1_ms: f64,
    pub phase2_ms: f64,
    pub phase3_ms: f64,
    pub total_ms: f64,
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub allocation: Allocation,
    pub sigma: Vec<AgentId>,
    pub metrics: Metrics,
    pub phase1: Phase1Report,
    pub phase2: Option<Phase2Report>,
    pub phase3: Option<Phase3Report>,
    pub configurations: Vec<CutConfiguration>,
    pub cut_records: Vec<CutRecord>,
}

pub fn solve(instance: &Instance, config: &SolveConfig) -> Result<SolveResult> {
    solve_with(instance, config, StopAfter::Phase3, &mut NoTrace)
}

pub fn solve_with(
    instance: &Instance,
    config: &SolveConfig,
    stop: StopAfter,
    trace: &mut dyn TraceSink,
) -> Result<SolveResult> {
    if let Some(t) = instance.find_triangle() {
        return Err(EfxError::NotTriangleFree(t));
    }
    let start = Instant::now();
    let ms = |t: Instant| t.elapsed().as_secs_f64() * 1e3;
    let mut state = SolverState::new(instance, config.cut_options());

    let t = Instant::now();
    let phase1 = phase1::run_phase1(&mut state, config, trace)?;
    let phase1_ms = ms(t);

    let (mut phase2, mut phase3) = (None, None);
    let (mut phase2_ms, mut phase3_ms) = (0.0, 0.0);
    if stop >= StopAfter::Phase2 {
        let t = Instant::now();
        phase2 = Some(phase2::run_phase2(&mut state, config, trace)?);
        phase2_ms = ms(t);
    }
    if stop >= StopAfter::Phase3 {
        let t = Instant::now();
        phase3 = Some(phase3::run_phase3(&mut state, config, trace)?);
        phase3_ms = ms(t);
    }

    let m = instance.good_count() as u64;
    let records = state.cut_memo().records().to_vec();
    let cuts = CutMetrics {
        count: records.len(),
        moves_total: records.iter().map(|r| r.moves).sum(),
        moves_max: records.iter().map(|r| r.moves).max().unwrap_or(0),
        additive_with_moves: records
            .iter()
            .filter(|r| r.class.is_additive() && r.moves > 0)
            .count(),
        cancelable_over_m2: records
            .iter()
            .filter(|r| r.class.is_cancelable() && r.moves > m * m)
            .count(),
    };
    let p2 = phase2.clone().unwrap_or_default();
    let metrics = Metrics {
        n: instance.agent_count(),
        m: instance.good_count(),
        augment_calls: phase1.augment_calls,
        nonadjacent_picks: phase1.nonadjacent_picks,
        phase2_iterations: p2.iterations,
        branch_a: p2.branches[0],
        branch_b: p2.branches[1],
        branch_c: p2.branches[2],
        envied_after_phase2: p2.envied_after,
        phase3_dumps: phase3.as_ref().map_or(0, |r| r.dumps.len()),
        cuts,
        phase1_ms,
        phase2_ms,
        phase3_ms,
        total_ms: ms(start),
    };
    Ok(SolveResult {
        sigma: state.sigma(),
        configurations: state.cut_memo().configurations().cloned().collect(),
        cut_records: records,
        allocation: state.into_allocation(),
        metrics,
        phase1,
        phase2,
        phase3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::CheckLevel;
    use crate::model::{GoodId, ValuationSpec};
    use crate::verify;

    fn additive(n: usize, ends: &[[usize; 2]], w: impl Fn(usize, usize) -> u64) -> Instance {
        let specs = (0..n)
            .map(|a| ValuationSpec::Additive {
                weights: ends
                    .iter()
                    .enumerate()
                    .filter(|(_, e)| e.contains(&a))
                    .map(|(g, _)| (GoodId(g), w(a, g)))
                    .collect(),
            })
            .collect();
        Instance::new(n, ends, specs).unwrap()
    }

    #[test]
    fn triangle_is_rejected() {
        let inst = additive(3, &[[0, 1], [1, 2], [0, 2]], |_, _| 1);
        match solve(&inst, &SolveConfig::default()) {
            Err(EfxError::NotTriangleFree(t)) => {
                assert_eq!(t, [AgentId(0), AgentId(1), AgentId(2)])
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn no_goods() {
        let inst = additive(3, &[], |_, _| 0);
        let r = solve(&inst, &SolveConfig::with_checks(CheckLevel::Every)).unwrap();
        assert!(r.allocation.is_complete());
        assert!(r.allocation.bundles().iter().all(|b| b.is_empty()));
        assert_eq!(r.sigma.len(), 3);
    }

    #[test]
    fn two_agents_five_three_three() {
        let inst = additive(2, &[[0, 1], [0, 1], [0, 1]], |_, g| [5, 3, 3][g]);
        let r = solve(&inst, &SolveConfig::with_checks(CheckLevel::Every)).unwrap();
        assert!(r.allocation.is_complete());
        assert!(verify::check_efx(&inst, &r.allocation).passed);
        let mut held: Vec<Vec<usize>> = r
            .allocation
            .bundles()
            .iter()
            .map(|b| b.iter().map(|g| g.index()).collect())
            .collect();
        held.sort();
        assert_eq!(held, vec![vec![0], vec![1, 2]]);
    }

    #[test]
    fn c4_with_parallel_goods() {
        let mut ends = Vec::new();
        for (a, b) in [(0, 1), (1, 2), (2, 3), (3, 0)] {
            for _ in 0..3 {
                ends.push([a, b]);
            }
        }
        let inst = additive(4, &ends, |a, g| ((a * 7 + g * 13) % 11) as u64);
        let r = solve(&inst, &SolveConfig::with_checks(CheckLevel::Every)).unwrap();
        assert!(r.allocation.is_complete());
        assert!(verify::check_efx(&inst, &r.allocation).passed);
    }
}
