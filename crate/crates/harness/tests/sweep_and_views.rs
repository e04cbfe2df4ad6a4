use std::collections::BTreeMap;

use fuse_core::calculus::Value;
use fuse_harness::dse::{
    gemm_near_misses, recount_csv, summarize, sweep, verdict_of, write_csv, ParamDomain,
    PointVerdict, Template, GEMM_TEMPLATE,
};
use fuse_harness::preservation::{compare_with_reference, SurfaceVerdict};
use fuse_harness::reference::run_reference;
use fuse_harness::views::{check_case, enumerate_cases};

const SMALL: &str = r#"{"BANK11":[2,4],"BANK12":[2],"BANK21":[4],"BANK22":[2],"UNROLL1":[1,4,3],"UNROLL2":[2],"UNROLL3":[2]}"#;

#[test]
fn template_holes_and_instantiation() {
    let t = Template::parse("let A: float[@{N} bank @{B}]; let C: float[@{N}];").unwrap();
    assert_eq!(t.holes, ["N", "B"]);
    let pt = BTreeMap::from([("N".to_string(), 8), ("B".to_string(), 2)]);
    assert_eq!(t.instantiate(&pt).unwrap(), "let A: float[8 bank 2]; let C: float[8];");
    assert!(Template::parse("@{open").is_err());
    assert!(t.instantiate(&BTreeMap::new()).is_err());
}

#[test]
fn parallel_sweep_matches_sequential_and_csv_recount() {
    let t = Template::parse(GEMM_TEMPLATE).unwrap();
    let d = ParamDomain::from_json(SMALL).unwrap();
    assert_eq!(d.size(), 6);
    let seq = sweep(&t, &d, 1).unwrap();
    let par = sweep(&t, &d, 4).unwrap();
    let strip = |rows: &[fuse_harness::dse::SweepRow]| {
        rows.iter()
            .map(|r| (r.point.clone(), r.verdict.clone(), r.code))
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(&seq), strip(&par));
    let mut buf = Vec::new();
    write_csv(&seq, &d.names(), &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("BANK11,BANK12,BANK21,BANK22,UNROLL1,UNROLL2,UNROLL3,verdict,error_code,micros"));
    assert_eq!(text.lines().count(), 7);
    let mut from_csv = recount_csv(&text).unwrap();
    let mut direct = summarize(&seq);
    from_csv.ratio = 0.0;
    direct.ratio = 0.0;
    assert_eq!(from_csv, direct);
    // UNROLL1 = 3 does not divide 128
    assert!(seq
        .iter()
        .filter(|r| r.point["UNROLL1"] == 3)
        .all(|r| r.verdict == PointVerdict::Rejected));
    assert_eq!(gemm_near_misses(&seq).get("UNROLL1 divides BANK11"), Some(&1));
}

#[test]
fn single_point_domain() {
    let t = Template::parse("let A: float[@{N} bank 2];").unwrap();
    let d = ParamDomain::from_json(r#"{"N":[3]}"#).unwrap();
    let rows = sweep(&t, &d, 0).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].verdict, PointVerdict::Rejected);
    assert!(ParamDomain::from_json(r#"{"N":[]}"#).is_err());
    assert_eq!(verdict_of("let").0, PointVerdict::ParseError);
}

#[test]
fn view_oracle_detects_a_wrong_model() {
    let cases = enumerate_cases();
    let c = cases
        .iter()
        .find(|c| c.decl.contains("shift") && c.points.len() > 1)
        .expect("a shift case");
    assert!(check_case(c).is_ok());
    let mut wrong = c.clone();
    let first = wrong.points[0].1.clone();
    wrong.points[0].1 = wrong.points[1].1.clone();
    wrong.points[1].1 = first;
    assert!(check_case(&wrong).is_err());
}

#[test]
fn reference_and_elaboration_agree_on_a_reduction() {
    let src = "let A: bit<32>[8 bank 2]; let O: bit<32>[1];
               let s = 0;
               for (let i = 0..8) unroll 2 { let v = A[i] } combine { s += v }
               ---
               O[0] := s;";
    let inputs = BTreeMap::from([(
        "A".to_string(),
        (1..=8).map(Value::b32).collect::<Vec<_>>(),
    )]);
    let p = fuse_core::parse_program(src).unwrap();
    let r = run_reference(&p, &inputs, 10_000).unwrap();
    assert_eq!(r.mems["O"], vec![Value::b32(36)]);
    assert_eq!(compare_with_reference(src, &inputs, 10_000), SurfaceVerdict::Equal);
}
