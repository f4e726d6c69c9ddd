use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const FANO_JSON: &str = include_str!("../../core/tests/fixtures/fano.json");
const FIXTURE: &str = include_str!("../../core/tests/fixtures/p72.csv");

fn madc(args: &[&str]) -> Output {
    madc_env(args, None)
}

fn madc_env(args: &[&str], seed: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_madc"));
    cmd.args(args).env_remove("MADC_SEED");
    if let Some(seed) = seed {
        cmd.env("MADC_SEED", seed);
    }
    cmd.output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn validate_accepts_fano_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "fano.json", FANO_JSON);
    let out = madc(&["design", "validate", &path]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["valid"], true);
}

#[test]
fn validate_names_the_broken_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(
        dir.path(),
        "bad.json",
        &FANO_JSON.replace("[3, 5, 6]", "[3, 5, 7]"),
    );
    let out = madc(&["design", "validate", &path]);
    assert_eq!(out.status.code(), Some(1));
    let report = json(&out);
    let uncovered: Vec<&Value> = report["violations"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|v| v["kind"] == "coverage")
        .collect();
    assert!(uncovered
        .iter()
        .any(|v| v["subset"] == serde_json::json!([5, 6]) && v["count"] == 0));
    assert!(uncovered
        .iter()
        .any(|v| v["subset"] == serde_json::json!([5, 7]) && v["count"] == 2));
}

#[test]
fn validate_missing_file_is_an_io_error() {
    let out = madc(&["design", "validate", "/definitely/not/here.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("reading"));
}

#[test]
fn block_size_mismatch_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{"num_points":7,"t":2,"alpha":3,"m":1,
        "blocks":[[1,2],[1,4,5],[1,6,7],[2,4,6],[2,5,7],[3,4,7],[3,5,6]]}"#;
    let path = write(dir.path(), "short.json", text);
    let out = madc(&["design", "validate", &path, "--format", "text"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("block size mismatch"));
    let out = madc(&["mra", "build", "--design", &path]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn catalog_lists_five_designs() {
    let out = madc(&["design", "catalog"]);
    assert!(out.status.success());
    let names: Vec<String> = json(&out)
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["name"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(names, ["fano", "sts9", "sts15", "s_3_4_8", "s_2_4_13"]);
}

#[test]
fn mra_build_to_file_prints_stats() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("p72.csv");
    let out = madc(&[
        "mra",
        "build",
        "--design",
        "fano",
        "--out",
        out_path.to_str().unwrap(),
        "--format",
        "text",
    ]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout), "F=7 K=21 S=28 g=3\n");
    assert_eq!(fs::read_to_string(&out_path).unwrap(), FIXTURE);

    let out = madc(&[
        "mra",
        "build",
        "--design",
        "fano",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    let stats = json(&out);
    assert_eq!(
        (
            stats["F"].as_u64(),
            stats["K"].as_u64(),
            stats["S"].as_u64()
        ),
        (Some(7), Some(21), Some(28))
    );
    assert_eq!(
        stats["missing_ranks"],
        serde_json::json!([1, 10, 15, 21, 24, 28, 29])
    );
}

#[test]
fn mra_build_from_design_file_matches_catalog() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "fano.json", FANO_JSON);
    let out = madc(&["mra", "build", "--design", &path]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout), FIXTURE);
    assert_eq!(stderr(&out).trim(), "F=7 K=21 S=28 g=3");
}

#[test]
fn sts9_array_has_36_columns() {
    let out = madc(&["mra", "build", "--design", "sts9"]);
    assert!(out.status.success());
    assert!(stderr(&out).contains("K=36"));
    let first = String::from_utf8_lossy(&out.stdout)
        .lines()
        .next()
        .unwrap()
        .to_string();
    assert_eq!(first.split(',').count(), 37);
}

#[test]
fn non_steiner_design_is_rejected_by_builder() {
    // every 3-subset of [4]: each pair lies in two blocks
    let dir = tempfile::tempdir().unwrap();
    let text =
        r#"{"num_points":4,"t":2,"alpha":3,"m":2,"blocks":[[1,2,3],[1,2,4],[1,3,4],[2,3,4]]}"#;
    let path = write(dir.path(), "k4.json", text);
    assert_eq!(madc(&["design", "validate", &path]).status.code(), Some(0));
    let out = madc(&["mra", "build", "--design", &path]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("m = 2"));
}

#[test]
fn unknown_design_is_a_usage_error() {
    let out = madc(&["simulate", "--design", "nonesuch"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("fano"));
}

#[test]
fn simulate_sts15_with_two_files_per_batch() {
    let out = madc(&["simulate", "--design", "sts15", "--eta1", "2"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v = json(&out);
    assert_eq!(v["verdict"], "ok");
    let l = &v["loads"]["measured_comm_load"];
    assert_eq!((l["num"].as_u64(), l["den"].as_u64()), (Some(2), Some(5)));
    assert_eq!(l["decimal"], "0.40");
    assert_eq!(v["loads"]["gain_factor"]["num"], 2);
}

#[test]
fn strict_beta_rejects_invalid_sizes() {
    let out = madc(&[
        "simulate",
        "--design",
        "fano",
        "--beta",
        "7",
        "--strict-beta",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("β = 7"));
    let out = madc(&["simulate", "--design", "fano", "--beta", "7"]);
    assert!(out.status.success());
    assert_eq!(json(&out)["loads"]["parameters"]["beta"], 48);
}

#[test]
fn zero_eta_is_a_usage_error() {
    let out = madc(&["simulate", "--design", "fano", "--eta2", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn dumps_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let transcript = dir.path().join("t.json");
    let topology = dir.path().join("topo.json");
    let out = madc(&[
        "simulate",
        "--design",
        "fano",
        "--dump-transcript",
        transcript.to_str().unwrap(),
        "--dump-topology",
        topology.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let t: Value = serde_json::from_str(&fs::read_to_string(&transcript).unwrap()).unwrap();
    assert_eq!(t["num_symbols"], 84);
    assert_eq!(t["total_bits"], 84 * 8);
    assert_eq!(t["symbols"][0]["sender"], "{123}");
    assert_eq!(t["symbols"][0]["s"], 2);
    let topo: Value = serde_json::from_str(&fs::read_to_string(&topology).unwrap()).unwrap();
    assert_eq!(topo["reducers"][6]["block"], "{356}");
    assert_eq!(topo["reducers"][6]["functions"], serde_json::json!([7]));
    assert_eq!(topo["reducers"][0]["mappers"], serde_json::json!([1, 2, 3]));
}

#[test]
fn runs_are_deterministic_and_seeded() {
    let run = |seed: Option<&str>, extra: &[&str]| {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.json");
        let mut args = vec![
            "simulate",
            "--design",
            "sts9",
            "--dump-transcript",
            path.to_str().unwrap(),
        ];
        args.extend_from_slice(extra);
        let out = madc_env(&args, seed);
        assert!(out.status.success());
        (out.stdout, fs::read(&path).unwrap())
    };
    let a = run(Some("17"), &[]);
    assert_eq!(a, run(Some("17"), &["--sequential"]));
    assert_eq!(a, run(None, &["--seed", "17"]));
    let b = run(Some("18"), &[]);
    assert_ne!(a.1, b.1);
}

#[test]
fn compare_views_agree() {
    let text = madc(&[
        "compare", "--lambda", "9", "--alpha", "3", "--t", "2", "--format", "text",
    ]);
    let json_out = madc(&["compare", "--lambda", "9", "--alpha", "3", "--t", "2"]);
    assert!(text.status.success() && json_out.status.success());
    let v = json(&json_out);
    assert_eq!(v["k_tdesign"], 12);
    assert_eq!(v["k_ct"], 84);
    assert!(v["load_ct_reference"].is_null());
    let text = String::from_utf8_lossy(&text.stdout).into_owned();
    for row in v["rows"].as_array().unwrap() {
        let line = text
            .lines()
            .find(|l| l.starts_with(&format!("| {}", row["parameter"].as_str().unwrap())))
            .unwrap();
        let cells: Vec<&str> = line.split('|').map(str::trim).collect();
        assert_eq!(cells[2], row["t_design"].as_str().unwrap());
        assert_eq!(cells[3], row["ct"].as_str().unwrap());
    }
    assert!(text.contains("| n/a"));
}

#[test]
fn compare_without_a_design_fails() {
    // C(8,2)/C(3,2) is not an integer
    let out = madc(&["compare", "--lambda", "8", "--alpha", "3", "--t", "2"]);
    assert_eq!(out.status.code(), Some(2));
}
