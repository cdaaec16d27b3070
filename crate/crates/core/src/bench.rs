//! Benchmark harness: solve every instance of a suite and report one CSV row
//! per instance.
//!
//! A suite is a JSON object with an `instances` array. Each entry has an
//! integer `id` and either a generator spec (the fields of
//! [`GenSpec`](crate::gen::GenSpec)) or a `file` holding instance JSON.
//!
//! ```json
//! {"instances": [
//!   {"id": 0, "seed": 1, "n": 50, "m": 400, "topology": "bipartite",
//!    "valuation_class": "additive", "v_max": 1000, "max_parallel": 4},
//!   {"id": 1, "file": "c4.json"}]}
//! ```

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::SolveConfig;
use crate::error::Result;
use crate::gen::{self, GenSpec};
use crate::io;
use crate::model::Instance;
use crate::solve::solve;
use crate::verify;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SuiteSource {
    File { file: PathBuf },
    Generated(GenSpec),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteEntry {
    pub id: u64,
    #[serde(flatten)]
    pub source: SuiteSource,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Suite {
    #[serde(default)]
    pub instances: Vec<SuiteEntry>,
}

impl Suite {
    /// Parse a suite file; relative `file` entries resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Suite> {
        let mut suite: Suite = serde_json::from_str(text)?;
        for e in &mut suite.instances {
            if let SuiteSource::File { file } = &mut e.source {
                if file.is_relative() {
                    *file = base.join(&*file);
                }
            }
        }
        Ok(suite)
    }
}

pub const HEADER: [&str; 17] = [
    "id",
    "n",
    "m",
    "class",
    "augment_calls",
    "phase2_iterations",
    "branch_a",
    "branch_b",
    "branch_c",
    "phase3_dumps",
    "cuts",
    "pr_moves_total",
    "pr_moves_max",
    "complete",
    "efx",
    "wall_ms",
    "error",
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub id: u64,
    pub n: usize,
    pub m: usize,
    pub class: String,
    pub augment_calls: usize,
    pub phase2_iterations: usize,
    pub branch_a: usize,
    pub branch_b: usize,
    pub branch_c: usize,
    pub phase3_dumps: usize,
    pub cuts: usize,
    pub pr_moves_total: u64,
    pub pr_moves_max: u64,
    pub complete: bool,
    pub efx: bool,
    pub wall_ms: f64,
    pub error: String,
}

fn class_label(instance: &Instance) -> String {
    let mut names: Vec<&str> = instance
        .valuations()
        .iter()
        .map(|v| v.class().name())
        .collect();
    names.sort_unstable();
    names.dedup();
    names.join("+")
}

fn load(entry: &SuiteEntry) -> Result<Instance> {
    match &entry.source {
        SuiteSource::File { file } => io::parse_instance(&std::fs::read_to_string(file)?),
        SuiteSource::Generated(spec) => gen::gen_instance(spec),
    }
}

fn run_entry(entry: &SuiteEntry, config: &SolveConfig) -> BenchRow {
    let mut row = BenchRow {
        id: entry.id,
        n: 0,
        m: 0,
        class: String::new(),
        augment_calls: 0,
        phase2_iterations: 0,
        branch_a: 0,
        branch_b: 0,
        branch_c: 0,
        phase3_dumps: 0,
        cuts: 0,
        pr_moves_total: 0,
        pr_moves_max: 0,
        complete: false,
        efx: false,
        wall_ms: 0.0,
        error: String::new(),
    };
    let instance = match load(entry) {
        Ok(i) => i,
        Err(e) => {
            row.error = e.to_string();
            return row;
        }
    };
    row.n = instance.agent_count();
    row.m = instance.good_count();
    row.class = class_label(&instance);
    let start = Instant::now();
    let result = solve(&instance, config);
    row.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    match result {
        Ok(r) => {
            let mt = &r.metrics;
            row.augment_calls = mt.augment_calls;
            row.phase2_iterations = mt.phase2_iterations;
            row.branch_a = mt.branch_a;
            row.branch_b = mt.branch_b;
            row.branch_c = mt.branch_c;
            row.phase3_dumps = mt.phase3_dumps;
            row.cuts = mt.cuts.count;
            row.pr_moves_total = mt.cuts.moves_total;
            row.pr_moves_max = mt.cuts.moves_max;
            row.complete = r.allocation.is_complete();
            row.efx = verify::check_efx(&instance, &r.allocation).passed;
        }
        Err(e) => row.error = e.to_string(),
    }
    row
}

/// Rows sorted by id. Entries run in parallel.
pub fn run_suite(suite: &Suite, config: &SolveConfig) -> Vec<BenchRow> {
    let mut rows: Vec<BenchRow> = suite
        .instances
        .par_iter()
        .map(|e| run_entry(e, config))
        .collect();
    rows.sort_by_key(|r| r.id);
    rows
}

/// CSV with a header line, even for an empty suite.
pub fn write_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(HEADER).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> crate::error::EfxError {
    std::io::Error::other(e).into()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_suite_writes_header_only() {
        let suite = Suite::parse(r#"{"instances": []}"#, Path::new(".")).unwrap();
        let rows = run_suite(&suite, &SolveConfig::default());
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            format!("{}\n", HEADER.join(","))
        );
    }

    #[test]
    fn generated_entries_sorted_by_id() {
        let text = r#"{"instances": [
            {"id": 5, "seed": 1, "n": 6, "m": 12, "topology": "path",
             "valuation_class": "additive", "v_max": 9, "max_parallel": 3},
            {"id": 2, "seed": 2, "n": 4, "m": 6, "topology": "star",
             "valuation_class": "monotone_table", "v_max": 9, "max_parallel": 2}]}"#;
        let suite = Suite::parse(text, Path::new(".")).unwrap();
        let rows = run_suite(&suite, &SolveConfig::default());
        assert_eq!(rows.iter().map(|r| r.id).collect::<Vec<_>>(), vec![2, 5]);
        assert!(rows
            .iter()
            .all(|r| r.complete && r.efx && r.error.is_empty()));
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 3);
    }
}
