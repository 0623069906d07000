// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::{Path, PathBuf};

use rtl_witness::cli::run;
use serde_json::Value;

const ALU: &str = include_str!("../suite/alu.mv");

struct Out {
    code: i32,
    stdout: String,
    stderr: String,
}

fn cli(args: &[&str]) -> Out {
    let mut stdout = Vec::new();
    let mut stderr = Vec::new();
    let mut argv = vec!["rtl-witness"];
    argv.extend_from_slice(args);
    let code = run(argv, &mut stdout, &mut stderr);
    Out {
        code,
        stdout: String::from_utf8(stdout).unwrap(),
        stderr: String::from_utf8(stderr).unwrap(),
    }
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

/// Golden ALU, the add/sub swapped copy, and a one-cycle failing test.
fn alu_triple(dir: &Path) -> (String, String, String) {
    let buggy = ALU
        .replace("4'b0000: y = a + b;", "4'b0000: y = a - b;")
        .replace("4'b0001: y = a - b;", "4'b0001: y = a + b;");
    let g = write(dir, "golden.mv", ALU);
    let b = write(dir, "buggy.mv", &buggy);
    let t = write(dir, "c_b.csv", "opcode,a,b\n0,1,1\n");
    let s = |p: PathBuf| p.display().to_string();
    (s(b), s(g), s(t))
}

#[test]
fn localize_alu_swap() {
    let dir = tempfile::tempdir().unwrap();
    let (b, g, t) = alu_triple(dir.path());
    let out = cli(&["localize", "--design", &b, "--golden", &g, "--testcase", &t, "--rng-seed", "1"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let v: Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(v["degraded"], false);
    let entries = v["report"]["entries"].as_array().unwrap();
    // arm 0000 and its assignment share the top score
    let top: Vec<u64> = entries
        .iter()
        .filter(|e| e["rank"] == entries[0]["rank"])
        .map(|e| e["statement_id"].as_u64().unwrap())
        .collect();
    assert_eq!(top, vec![0, 1]);
    assert_eq!(entries[0]["rank"], 1.5);
    let cfg = &v["manifest"]["config"];
    assert_eq!(cfg["rng_seed"], 1);
    assert_eq!(cfg["max_iterations"], 100);
    assert_eq!(cfg["top_n"], 10);
    assert_eq!(cfg["weights"]["beta"], 0.5);
}

#[test]
fn reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (b, g, t) = alu_triple(dir.path());
    let out = dir.path().join("r.json").display().to_string();
    let args = ["localize", "--design", &b, "--golden", &g, "--testcase", &t, "--rng-seed", "7", "--out", &out];
    assert_eq!(cli(&args).code, 0);
    let first = fs::read(&out).unwrap();
    assert_eq!(cli(&args).code, 0);
    assert_eq!(first, fs::read(&out).unwrap());
}

#[test]
fn passing_test_case_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let (b, g, _) = alu_triple(dir.path());
    let t = write(dir.path(), "pass.csv", "opcode,a,b\n2,3,5\n");
    let out = cli(&["localize", "--design", &b, "--golden", &g, "--testcase", t.to_str().unwrap()]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("test case does not trigger the bug"), "{}", out.stderr);
}

#[test]
fn parse_error_exits_1_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let (_, g, t) = alu_triple(dir.path());
    let bad = write(dir.path(), "bad.mv", "module m(input a, output y);\n  assign y = foo;\nendmodule\n");
    let out = cli(&["localize", "--design", bad.to_str().unwrap(), "--golden", &g, "--testcase", &t]);
    assert_eq!(out.code, 1);
    assert!(out.stderr.contains("bad.mv:2:14: undeclared signal foo"), "{}", out.stderr);
    let missing = cli(&["simulate", "--design", "/nonexistent.mv", "--testcase", &t]);
    assert_eq!(missing.code, 1);
}

#[test]
fn no_witness_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "g.mv", "module m(input a, output y);\n  assign y = a;\nendmodule\n");
    let b = write(dir.path(), "b.mv", "module m(input a, output y);\n  assign y = !a;\nendmodule\n");
    let t = write(dir.path(), "t.csv", "a\n0\n1\n");
    let out = cli(&[
        "localize",
        "--design",
        b.to_str().unwrap(),
        "--golden",
        g.to_str().unwrap(),
        "--testcase",
        t.to_str().unwrap(),
        "--format",
        "table",
    ]);
    assert_eq!(out.code, 3, "{}", out.stderr);
    assert!(out.stdout.contains("assign y = !a;"));
}

#[test]
fn no_state_mode_zeroes_beta() {
    let dir = tempfile::tempdir().unwrap();
    let (b, g, t) = alu_triple(dir.path());
    let out = cli(&["localize", "--design", &b, "--golden", &g, "--testcase", &t, "--mode", "no-state"]);
    let v: Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(v["manifest"]["config"]["weights"]["beta"], 0.0);
    assert_eq!(v["manifest"]["config"]["mode"], "no-state");
}

#[test]
fn simulate_and_rank() {
    let dir = tempfile::tempdir().unwrap();
    let (b, _, t) = alu_triple(dir.path());
    let sim = cli(&["simulate", "--design", &b, "--testcase", &t]);
    assert_eq!(sim.code, 0);
    let v: Value = serde_json::from_str(&sim.stdout).unwrap();
    assert_eq!(v["trace"]["outputs"][0], serde_json::json!([0, 1]));

    let w = write(dir.path(), "w.csv", "opcode,a,b\n2,3,5\n");
    let r = cli(&["rank", "--design", &b, "--testcase", &t, "--witnesses", w.to_str().unwrap(), "--format", "table"]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.lines().nth(2).unwrap().contains("4'b0000: y = a - b;"), "{}", r.stdout);
}

#[test]
fn witness_command_writes_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let (b, g, t) = alu_triple(dir.path());
    let csv_dir = dir.path().join("wit");
    let out = cli(&["witness", "--design", &b, "--golden", &g, "--testcase", &t, "--rng-seed", "1", "--csv-dir", csv_dir.to_str().unwrap()]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let v: Value = serde_json::from_str(&out.stdout).unwrap();
    let ws = v["witnesses"].as_array().unwrap();
    assert!(!ws.is_empty() && ws.len() <= 10);
    assert_eq!(fs::read_dir(&csv_dir).unwrap().count(), ws.len());
}

#[test]
fn bench_rejects_empty_seed_list() {
    let out = cli(&["bench", "--suite", "builtin", "--seeds", ""]);
    assert_eq!(out.code, 1);
    assert!(out.stderr.contains("at least one rng seed required"));
}

#[test]
fn single_bug_suite_mar_is_its_rank() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "alu.mv", ALU);
    write(dir.path(), "t.csv", "opcode,a,b\n0,1,1\n3,2,2\n");
    let manifest = write(
        dir.path(),
        "suite.json",
        r#"{"name": "one", "designs": [{"name": "alu", "category": "easy", "file": "alu.mv",
            "bugs": [{"name": "swap", "target_statement": 0,
                      "edit": {"kind": "swap-case-arms", "other_arm": 2}, "testcase": "t.csv"}]}]}"#,
    );
    let out = cli(&["bench", "--suite", manifest.to_str().unwrap(), "--modes", "full", "--seeds", "3"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let v: Value = serde_json::from_str(&out.stdout).unwrap();
    let r = &v["results"][0]["result"];
    assert_eq!(r["mar"], r["per_bug_rank"]["swap"]);
    assert_eq!(r["per_seed"][0]["mar"], r["mar"]);

    let broken = write(dir.path(), "broken.json", "{\"name\": 1}");
    assert_eq!(cli(&["bench", "--suite", broken.to_str().unwrap()]).code, 1);
}

#[test]
fn builtin_bench_rows_are_monotone() {
    let out = cli(&["bench", "--suite", "builtin", "--modes", "full,rand", "--seeds", "0,1", "--iters", "30"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let v: Value = serde_json::from_str(&out.stdout).unwrap();
    for row in v["results"].as_array().unwrap() {
        let r = &row["result"];
        let top = |n: &str| r["top_n_counts"][n].as_f64().unwrap();
        assert!(top("1") <= top("5") && top("5") <= top("10") && top("10") <= top("20"));
        assert!(top("20") <= r["bug_count"].as_f64().unwrap());
        assert!(r["mar"].as_f64().unwrap() >= 1.0);
    }
    assert_eq!(v["results"][0]["category"], "all");
}
