//! End-to-end runs of the `efx` binary.

mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::Reference;
use serde_json::Value;
use tempfile::TempDir;

fn efx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_efx"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Writes a generated instance into `dir` and returns its path.
fn gen_file(dir: &TempDir, name: &str, args: &[&str]) -> PathBuf {
    let path = dir.path().join(name);
    let mut full = vec!["gen"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["--output", path_str(&path)]);
    let out = efx(&full);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    path
}

fn solve_file(dir: &TempDir, instance: &Path) -> PathBuf {
    let alloc = dir.path().join("alloc.json");
    let out = efx(&["solve", path_str(instance), "--output", path_str(&alloc)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    alloc
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).unwrap()
}

#[test]
fn c4_solve_then_verify() {
    let dir = TempDir::new().unwrap();
    let inst = gen_file(&dir, "c4.json", &["--adversarial", "c4_triple"]);
    let alloc = solve_file(&dir, &inst);
    let out = efx(&[
        "verify",
        path_str(&inst),
        path_str(&alloc),
        "--require-complete",
    ]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let report = json(&stdout(&out));
    assert_eq!(report["passed"], true);
    assert_eq!(report["efx"]["passed"], true);
    assert_eq!(report["complete"], true);
}

#[test]
fn solve_writes_sigma_trace_metrics_and_config() {
    let dir = TempDir::new().unwrap();
    let inst = gen_file(
        &dir,
        "i.json",
        &["--seed", "4", "--n", "6", "--m", "14", "--topology", "tree"],
    );
    let trace = dir.path().join("trace.jsonl");
    let metrics = dir.path().join("metrics.json");
    let config = dir.path().join("config.json");
    let out = efx(&[
        "solve",
        path_str(&inst),
        "--trace",
        path_str(&trace),
        "--metrics-out",
        path_str(&metrics),
        "--dump-config",
        path_str(&config),
        "--checks",
        "every",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let alloc = json(&stdout(&out));
    assert_eq!(alloc["bundles"].as_array().unwrap().len(), 6);
    assert_eq!(alloc["sigma"].as_array().unwrap().len(), 6);
    let lines: Vec<Value> = std::fs::read_to_string(&trace)
        .unwrap()
        .lines()
        .map(json)
        .collect();
    assert!(lines
        .iter()
        .any(|l| l["phase"] == 1 && l["event"] == "augment"));
    let m = json(&std::fs::read_to_string(&metrics).unwrap());
    assert_eq!(m["n"], 6);
    assert!(m["augment_calls"].as_u64().unwrap() >= 1);
    let cfg = json(&std::fs::read_to_string(&config).unwrap());
    assert!(!cfg.as_array().unwrap().is_empty());
}

#[test]
fn phase_outputs_pass_property_checks() {
    let dir = TempDir::new().unwrap();
    let inst = gen_file(&dir, "i.json", &["--seed", "11", "--n", "8", "--m", "20"]);
    for (stop, props) in [("1", "1-4"), ("2", "1-7")] {
        let alloc = dir.path().join(format!("p{stop}.json"));
        let out = efx(&[
            "solve",
            path_str(&inst),
            "--stop-after",
            stop,
            "--output",
            path_str(&alloc),
        ]);
        assert_eq!(code(&out), 0);
        let out = efx(&[
            "verify",
            path_str(&inst),
            path_str(&alloc),
            "--properties",
            props,
        ]);
        assert_eq!(code(&out), 0, "{}", stdout(&out));
        let report = json(&stdout(&out));
        assert_eq!(
            report["properties"]["outcomes"].as_array().unwrap().len(),
            if stop == "1" { 4 } else { 7 }
        );
    }
}

#[test]
fn perturbed_allocation_fails_with_a_witness() {
    let dir = TempDir::new().unwrap();
    let inst_path = gen_file(&dir, "c4.json", &["--adversarial", "c4_triple"]);
    let alloc_path = solve_file(&dir, &inst_path);
    let inst = efx_core::io::parse_instance(&std::fs::read_to_string(&inst_path).unwrap()).unwrap();
    let r = Reference::new(&inst);
    let alloc: Value = json(&std::fs::read_to_string(&alloc_path).unwrap());
    let base: Vec<Vec<usize>> = serde_json::from_value(alloc["bundles"].clone()).unwrap();

    // move one good to another agent until the reference sees strong envy
    let mut found = None;
    'outer: for (from, bundle) in base.iter().enumerate() {
        for &g in bundle {
            for to in 0..r.n {
                if to == from {
                    continue;
                }
                let mut b = base.clone();
                b[from].retain(|&h| h != g);
                b[to].push(g);
                b[to].sort_unstable();
                if !r.is_efx(&b) {
                    found = Some(b);
                    break 'outer;
                }
            }
        }
    }
    let moved = found.expect("some single move breaks EFX");
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, serde_json::json!({ "bundles": moved }).to_string()).unwrap();
    let out = efx(&["verify", path_str(&inst_path), path_str(&bad)]);
    assert_eq!(code(&out), 3);
    let report = json(&stdout(&out));
    assert_eq!(report["passed"], false);
    let v = &report["efx"]["violations"][0];
    let (i, j, g) = (
        v["envier"].as_u64().unwrap() as usize,
        v["envied"].as_u64().unwrap() as usize,
        v["good"].as_u64().unwrap() as usize,
    );
    assert!(moved[j].contains(&g));
    let rest: Vec<usize> = moved[j].iter().copied().filter(|&h| h != g).collect();
    assert!(r.value(i, &rest) > r.value(i, &moved[i]));
}

#[test]
fn incomplete_allocation_only_fails_when_required() {
    let dir = TempDir::new().unwrap();
    let inst = gen_file(
        &dir,
        "i.json",
        &["--seed", "2", "--n", "4", "--m", "6", "--topology", "path"],
    );
    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, r#"{"bundles": [[], [], [], []]}"#).unwrap();
    assert_eq!(
        code(&efx(&["verify", path_str(&inst), path_str(&empty)])),
        0
    );
    let out = efx(&[
        "verify",
        path_str(&inst),
        path_str(&empty),
        "--require-complete",
    ]);
    assert_eq!(code(&out), 3);
    assert_eq!(json(&stdout(&out))["complete"], false);
}

#[test]
fn triangle_exits_two_with_the_agents() {
    let dir = TempDir::new().unwrap();
    let inst = gen_file(
        &dir,
        "t.json",
        &["--with-triangle", "--seed", "3", "--n", "5", "--m", "8"],
    );
    let out = efx(&["solve", path_str(&inst)]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("triangle"), "{}", stderr(&out));
    assert!(stdout(&out).is_empty());
}

#[test]
fn malformed_inputs_exit_one() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(code(&efx(&["solve", path_str(&bad)])), 1);
    assert_eq!(
        code(&efx(&["solve", path_str(&dir.path().join("missing.json"))])),
        1
    );
    std::fs::write(
        &bad,
        r#"{"n": 2, "goods": [{"id": 0, "u": 0, "v": 0}], "valuations": []}"#,
    )
    .unwrap();
    assert_eq!(code(&efx(&["solve", path_str(&bad)])), 1);
    assert_eq!(code(&efx(&["solve"])), 1);
    assert_eq!(code(&efx(&["gen", "--class", "nope"])), 1);
    assert_eq!(
        code(&efx(&["gen", "--topology", "cycle_even", "--n", "5"])),
        1
    );
    assert_eq!(code(&efx(&["--help"])), 0);
}

#[test]
fn envy_graph_dot() {
    let dir = TempDir::new().unwrap();
    let inst = gen_file(&dir, "i.json", &["--adversarial", "branch_c_swap"]);
    let alloc = dir.path().join("a.json");
    std::fs::write(&alloc, r#"{"bundles": [[], [0, 2], []]}"#).unwrap();
    let out = efx(&["envy-graph", path_str(&inst), path_str(&alloc)]);
    assert_eq!(code(&out), 0);
    let dot = stdout(&out);
    assert!(dot.starts_with("digraph envy {"));
    assert!(dot.contains("0 -> 1"), "{dot}");
    assert!(dot.trim_end().ends_with('}'));
}

#[test]
fn oracle_lists_and_checks_membership() {
    let dir = TempDir::new().unwrap();
    let inst = dir.path().join("one.json");
    std::fs::write(
        &inst,
        r#"{"n": 2, "goods": [{"id": 0, "u": 0, "v": 1}],
            "valuations": [{"agent": 0, "class": "additive", "weights": {"0": 1}},
                           {"agent": 1, "class": "additive", "weights": {"0": 1}}]}"#,
    )
    .unwrap();
    let out = efx(&["oracle", path_str(&inst)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(json(&stdout(&out))["count"], 2);

    let alloc = solve_file(&dir, &inst);
    let out = efx(&["oracle", path_str(&inst), "--check", path_str(&alloc)]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&stdout(&out))["member"], true);

    let none = dir.path().join("none.json");
    std::fs::write(&none, r#"{"bundles": [[], []]}"#).unwrap();
    assert_eq!(
        code(&efx(&[
            "oracle",
            path_str(&inst),
            "--check",
            path_str(&none)
        ])),
        3
    );

    let big = gen_file(&dir, "big.json", &["--n", "10", "--m", "30"]);
    assert_eq!(code(&efx(&["oracle", path_str(&big)])), 1);
}

#[test]
fn bench_empty_and_generated_suites() {
    let dir = TempDir::new().unwrap();
    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, r#"{"instances": []}"#).unwrap();
    let out = efx(&["bench", path_str(&empty)]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).lines().count(), 1);
    assert!(stdout(&out).starts_with("id,n,m,class,"));

    let inst = gen_file(&dir, "c4.json", &["--adversarial", "c4_triple"]);
    let suite = dir.path().join("suite.json");
    std::fs::write(
        &suite,
        format!(
            r#"{{"instances": [{{"id": 1, "file": "{}"}},
               {{"id": 0, "seed": 1, "n": 8, "m": 20, "topology": "tree",
                 "valuation_class": "additive", "v_max": 30, "max_parallel": 3}}]}}"#,
            inst.file_name().unwrap().to_str().unwrap()
        ),
    )
    .unwrap();
    let out = efx(&["bench", path_str(&suite)]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let text = stdout(&out);
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let ids: Vec<String> = reader
        .records()
        .map(|r| r.unwrap()[0].to_string())
        .collect();
    assert_eq!(ids, vec!["0", "1"]);
}

#[test]
fn adversarial_list_names_every_sample() {
    let out = efx(&["gen", "--adversarial", "list"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    for s in efx_core::gen::gen_adversarial_suite() {
        assert!(text.lines().any(|l| l == s.name));
    }
}
