//! End-to-end tests of the `nullweak` binary: table reproduction, output
//! determinism, sweeps, solver printing, and exit codes.

use std::path::PathBuf;
use std::process::{Command, Output};

fn nullweak(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nullweak"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Parse a CSV body into (probe, wv_re, wv_im) triples.
fn parse_weak_values(csv: &str) -> Vec<(String, f64, f64)> {
    csv.lines()
        .skip(1)
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            (
                f[0].to_string(),
                f[2].parse().unwrap(),
                f[3].parse().unwrap(),
            )
        })
        .collect()
}

#[test]
fn nested_mzi_analytic_table() {
    let out = nullweak(&["run", "--builtin", "nested-mzi", "--analytic"]);
    assert!(out.status.success());
    let rows = parse_weak_values(&stdout(&out));
    let expect = [
        ("t1:C", 1.0),
        ("t1:E", 0.0),
        ("t2:A", 1.0),
        ("t2:B", -1.0),
        ("t3:C'", 1.0),
        ("t3:E'", 0.0),
    ];
    assert_eq!(rows.len(), 6);
    for (probe, want) in expect {
        let row = rows.iter().find(|r| r.0 == probe).unwrap();
        assert!((row.1 - want).abs() <= 1e-12, "{probe}: {}", row.1);
        assert!(row.2.abs() <= 1e-12);
    }
}

#[test]
fn three_path_analytic_table() {
    let out = nullweak(&["run", "--builtin", "three-path", "--analytic"]);
    assert!(out.status.success());
    let rows = parse_weak_values(&stdout(&out));
    let expect = [
        ("t1:E", 1.0),
        ("t1:F", -1.0),
        ("t2:D", 1.0),
        ("t2:O", 0.0),
        ("t3:E'", 1.0),
        ("t3:F'", -1.0),
        ("t4:O'", 0.0),
    ];
    assert_eq!(rows.len(), 7);
    for (probe, want) in expect {
        let row = rows.iter().find(|r| r.0 == probe).unwrap();
        assert!((row.1 - want).abs() <= 1e-9, "{probe}: {}", row.1);
    }
}

#[test]
fn strong_run_keeps_the_merged_region_pointer_still() {
    let out = nullweak(&[
        "run",
        "--builtin",
        "three-path",
        "--mode",
        "strong",
        "--g",
        "10",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let row = text
        .lines()
        .find(|l| l.starts_with("t2:O,"))
        .expect("merged-region row");
    let fields: Vec<&str> = row.split(',').collect();
    let shift: f64 = fields[4].parse().unwrap();
    assert!(shift.abs() <= 1e-12, "pointer at O moved: {shift}");
    assert_eq!(fields[6], "strong");
    // the structured output carries the fidelity note
    let json_out = nullweak(&[
        "run",
        "--builtin",
        "three-path",
        "--mode",
        "strong",
        "--g",
        "10",
        "--output",
        "json",
    ]);
    let body: serde_json::Value = serde_json::from_str(&stdout(&json_out)).unwrap();
    let rows = body["rows"].as_array().unwrap();
    let o_row = rows
        .iter()
        .find(|r| r["probe"] == "t2:O")
        .expect("t2:O row in json");
    let fidelity = o_row["initial_fidelity"].as_f64().unwrap();
    assert!((fidelity - 1.0).abs() <= 1e-12);
}

#[test]
fn csv_output_is_byte_deterministic() {
    let a = nullweak(&[
        "run",
        "--builtin",
        "nested-mzi",
        "--sweep",
        "0.01",
        "1",
        "9",
    ]);
    let b = nullweak(&[
        "run",
        "--builtin",
        "nested-mzi",
        "--sweep",
        "0.01",
        "1",
        "9",
    ]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(stdout(&a), stdout(&b));
    // 6 probes x 9 sweep points + header
    assert_eq!(stdout(&a).lines().count(), 6 * 9 + 1);
}

#[test]
fn emit_round_trips_through_a_file() {
    let dir = std::env::temp_dir().join("nullweak-cli-roundtrip");
    std::fs::create_dir_all(&dir).unwrap();
    let path: PathBuf = dir.join("three-path.json");
    let emit = nullweak(&[
        "emit",
        "--builtin",
        "three-path",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(emit.status.success());
    let direct = nullweak(&["run", "--builtin", "three-path", "--analytic"]);
    let reloaded = nullweak(&["run", path.to_str().unwrap(), "--analytic"]);
    assert!(reloaded.status.success());
    assert_eq!(stdout(&direct), stdout(&reloaded));
}

#[test]
fn solve_angles_prints_both_angles() {
    let out = nullweak(&["solve-angles", "--unit-weak-values"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    let alpha: f64 = lines
        .next()
        .unwrap()
        .strip_prefix("alpha = ")
        .unwrap()
        .parse()
        .unwrap();
    let phi: f64 = lines
        .next()
        .unwrap()
        .strip_prefix("phi = ")
        .unwrap()
        .parse()
        .unwrap();
    assert!((alpha.tan() - 2.0).abs() <= 1e-9);
    assert!((phi - alpha - std::f64::consts::FRAC_PI_2).abs() <= 1e-9);
    // defaults to the same solve without the flag
    let default_out = nullweak(&["solve-angles"]);
    assert_eq!(text, stdout(&default_out));
    // single-condition solve at a chosen splitting angle
    let single = nullweak(&["solve-angles", "--alpha", "0.785398163397448"]);
    assert!(single.status.success());
    let single_text = stdout(&single);
    let phi_line = single_text.lines().nth(1).unwrap();
    let phi_single: f64 = phi_line.strip_prefix("phi = ").unwrap().parse().unwrap();
    assert!((phi_single - 2.999_695_598_985_629).abs() <= 1e-9);
}

#[test]
fn parse_failures_exit_with_code_2() {
    let dir = std::env::temp_dir().join("nullweak-cli-parse");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("broken.json");
    std::fs::write(&path, "{ definitely not json").unwrap();
    let out = nullweak(&["run", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let missing = nullweak(&["run", "--builtin", "no-such-scenario"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn engine_failure_on_every_row_exits_with_code_3() {
    // weak mode at g far beyond the weak threshold fails on every probe
    let out = nullweak(&[
        "run",
        "--builtin",
        "nested-mzi",
        "--mode",
        "weak",
        "--g",
        "1.0",
    ]);
    assert_eq!(out.status.code(), Some(3));
    // header only
    assert_eq!(stdout(&out).lines().count(), 1);
}
