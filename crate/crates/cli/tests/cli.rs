use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const GOOD: &str = "let A: bit<32>[8 bank 2];\nfor (let i = 0..8) unroll 2 {\n  A[i] := i;\n}\n";
const CONFLICT: &str = "let A: float[8];\nlet x = A[0];\nA[1] := 1.0;\n";
const ORDERED: &str = "let A: float[8];\nlet x = A[0]\n---\nA[1] := x + 1.0;\n";

fn fuse(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fuse"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn setup(files: &[(&str, &str)]) -> (TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    for (name, text) in files {
        fs::write(dir.path().join(name), text).unwrap();
    }
    let p = dir.path().to_path_buf();
    (dir, p)
}

#[test]
fn check_exit_codes() {
    let (_d, p) = setup(&[("good.fuse", GOOD), ("conflict.fuse", CONFLICT), ("bad.fuse", "let A float")]);
    assert_eq!(code(&fuse(&p, &["check", "good.fuse"])), 0);
    let o = fuse(&p, &["check", "conflict.fuse"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("consumed"), "{}", stderr(&o));
    assert!(stderr(&o).contains("E-CONSUMED"));
    assert_eq!(code(&fuse(&p, &["check", "bad.fuse"])), 2);
    assert_eq!(code(&fuse(&p, &["check", "missing.fuse"])), 4);
}

#[test]
fn usage_errors_and_version() {
    let (_d, p) = setup(&[("good.fuse", GOOD)]);
    assert_eq!(code(&fuse(&p, &[])), 4);
    assert_eq!(code(&fuse(&p, &["frobnicate"])), 4);
    assert_eq!(code(&fuse(&p, &["check", "good.fuse", "--bogus"])), 4);
    let o = fuse(&p, &["--version"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("fuse "));
}

#[test]
fn check_report_is_json() {
    let (_d, p) = setup(&[("good.fuse", GOOD)]);
    let o = fuse(&p, &["check", "good.fuse", "--report", "json"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["memories"][0]["name"], "A");
    assert!(v["loops"].is_array());
    assert!(v["bank_usage"].is_array());
}

#[test]
fn interp_forced_conflict_is_stuck() {
    let (_d, p) = setup(&[("conflict.fuse", CONFLICT)]);
    assert_eq!(code(&fuse(&p, &["interp", "conflict.fuse"])), 1);
    let o = fuse(&p, &["interp", "conflict.fuse", "--force"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("stuck"));
}

#[test]
fn interp_with_init() {
    let (_d, p) = setup(&[
        ("ordered.fuse", ORDERED),
        ("init.json", r#"{"A": [2, 0, 0, 0, 0, 0, 0, 0]}"#),
        ("short.json", r#"{"A": [1]}"#),
    ]);
    let o = fuse(&p, &["interp", "ordered.fuse", "--init", "init.json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["memories"]["A"][1], 3.0);
    assert_eq!(v["rho"], serde_json::json!(["A"]));
    assert_eq!(code(&fuse(&p, &["interp", "ordered.fuse", "--init", "short.json"])), 4);
}

#[test]
fn interp_out_of_fuel() {
    let src = "let A: bit<32>[1];\nfor (let i = 0..1000) {\n  A[0] := i;\n}\n";
    let (_d, p) = setup(&[("long.fuse", src)]);
    assert_eq!(code(&fuse(&p, &["interp", "long.fuse", "--fuel", "50"])), 5);
    assert_eq!(code(&fuse(&p, &["interp", "long.fuse"])), 0);
}

#[test]
fn desugar_prints_core() {
    let (_d, p) = setup(&[("good.fuse", GOOD), ("ordered.fuse", ORDERED)]);
    let o = fuse(&p, &["desugar", "good.fuse"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("mem A_0: bit<32>[4];"));
    assert!(text.contains("while"));
    let o = fuse(&p, &["desugar", "ordered.fuse"]);
    assert!(stdout(&o).contains("---"));
}

#[test]
fn emit_writes_cpp_and_plan() {
    let (_d, p) = setup(&[("good.fuse", GOOD), ("conflict.fuse", CONFLICT)]);
    let o = fuse(&p, &["emit", "good.fuse"]);
    assert_eq!(code(&o), 0);
    let cpp = fs::read_to_string(p.join("good.cpp")).unwrap();
    assert!(cpp.contains("#pragma HLS ARRAY_PARTITION variable=A cyclic factor=2 dim=1"));
    assert!(cpp.contains("#pragma HLS UNROLL factor=2 skip_exit_check"));
    assert!(cpp.contains("#pragma HLS resource variable=A core=RAM_1P_BRAM"));
    let o = fuse(&p, &["emit", "good.fuse", "--plan", "json"]);
    let plan: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(plan["memories"][0]["partitions"][0]["factor"], 2);
    assert_eq!(code(&fuse(&p, &["emit", "conflict.fuse"])), 1);
    assert!(!p.join("conflict.cpp").exists());
}

#[test]
fn fuzz_reports() {
    let (_d, p) = setup(&[]);
    let o = fuse(
        &p,
        &["fuzz", "--count", "40", "--seed", "7", "--surface", "5", "--jobs", "2", "--report", "r.json"],
    );
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(p.join("r.json")).unwrap()).unwrap();
    assert_eq!(v["core"]["programs"], 40);
    assert_eq!(v["core"]["stuck"], 0);
    assert_eq!(v["surface"]["programs"], 5);
}

#[test]
fn dse_writes_csv() {
    let tpl = "let A: float[@{N} bank @{B}];\nfor (let i = 0..@{N}) unroll @{B} {\n  A[i] := 1.0;\n}\n";
    let (_d, p) = setup(&[("t.fuse.tpl", tpl), ("d.json", r#"{"N": [8, 6], "B": [1, 2, 4]}"#)]);
    let o = fuse(
        &p,
        &["dse", "--template", "t.fuse.tpl", "--domains", "d.json", "--out", "r.csv", "--jobs", "2"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(p.join("r.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "B,N,verdict,error_code,micros");
    assert_eq!(lines.len(), 7);
    let summary: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    // 6 is not divisible by 4
    assert_eq!(summary["accepted"], 5);
    assert!(lines.iter().any(|l| l.starts_with("4,6,rejected,E-DIVIDES,")));
}
