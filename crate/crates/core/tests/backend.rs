use fuse_core::backend::{emit_cxx, emit_plan, plan_from_cxx, Partition};
use fuse_core::parse_program;

fn emit(src: &str) -> String {
    let p = parse_program(src).unwrap();
    let text = emit_cxx(&p).unwrap_or_else(|d| panic!("{d:?}"));
    assert_eq!(emit_plan(&p).unwrap(), plan_from_cxx(&text), "{text}");
    text
}

fn lines(text: &str) -> Vec<&str> {
    text.lines().map(str::trim).collect()
}

#[test]
fn banked_memory_gets_partition() {
    let t = emit("let A: float[8 bank 4];");
    let ls = lines(&t);
    assert!(ls.contains(&"void kernel(float A[8]) {"));
    assert!(ls.contains(&"#pragma HLS ARRAY_PARTITION variable=A cyclic factor=4 dim=1"));
    assert!(ls.contains(&"#pragma HLS resource variable=A core=RAM_1P_BRAM"));
}

#[test]
fn two_dimensional_partitions() {
    let t = emit("let M: bit<32>[4 bank 2][6 bank 3];");
    assert!(t.contains("ap_int<32> M[4][6]"));
    assert!(t.contains("#pragma HLS ARRAY_PARTITION variable=M cyclic factor=2 dim=1\n"));
    assert!(t.contains("#pragma HLS ARRAY_PARTITION variable=M cyclic factor=3 dim=2\n"));
}

#[test]
fn factor_one_emits_no_pragmas() {
    let t = emit("let A: float[8];\nfor (let i = 0..8) unroll 1 {\n  A[i] := 1.0;\n}\n");
    assert!(!t.contains("#pragma"), "{t}");
    assert!(t.contains("for (int i = 0; i < 8; i++) {"));
    let plan = emit_plan(&parse_program("let A: float[8];").unwrap()).unwrap();
    assert!(plan.memories[0].partitions.is_empty());
    assert_eq!(plan.memories[0].resource, None);
}

#[test]
fn two_ports_use_dual_port_ram() {
    let t = emit("let A: float{2}[4];\nlet x = A[0];\nA[1] := x;\n");
    assert!(t.contains("#pragma HLS resource variable=A core=RAM_2P_BRAM"));
}

#[test]
fn unrolled_loop_pragma() {
    let t = emit("let A: bit<32>[8 bank 2];\nfor (let i = 0..8) unroll 2 {\n  A[i] := i;\n}\n");
    let ls = lines(&t);
    let at = ls.iter().position(|l| l.starts_with("for (int i")).unwrap();
    assert_eq!(ls[at + 1], "#pragma HLS UNROLL factor=2 skip_exit_check");
    let plan = emit_plan(&parse_program("let A: bit<32>[8 bank 2];\nfor (let i = 0..8) unroll 2 {\n  A[i] := i;\n}\n").unwrap()).unwrap();
    assert_eq!(plan.loops[0].unroll, 2);
    assert_eq!(plan.memories[0].partitions, vec![Partition { factor: 2, dim: 1 }]);
}

#[test]
fn views_lower_to_index_arithmetic() {
    let t = emit("let A: float[8 bank 2];\nfor (let i = 0..4) {\n  view s = suffix A[by 2 * i];\n  let x = s[1];\n}\n");
    assert!(t.contains("A[2 * i + 1]"), "{t}");
    let t = emit("let A: float[12 bank 4];\nfor (let i = 0..3) {\n  view r = shift A[by i * i];\n  for (let j = 0..4) unroll 4 {\n    let x = r[j];\n  }\n}\n");
    assert!(t.contains("A[i * i + j]"), "{t}");
    let t = emit("let A: float[12 bank 4];\nview sp = split A[by 2];\nfor (let i = 0..6) unroll 2 {\n  for (let j = 0..2) unroll 2 {\n    let x = sp[j][i];\n  }\n}\n");
    assert!(t.contains("A[2 * i + j]"), "{t}");
    let t = emit("let A: float[8 bank 4];\nview sh = shrink A[by 2];\nfor (let i = 0..8) unroll 2 {\n  let x = sh[i];\n}\n");
    assert!(t.contains("float x = A[i];"), "{t}");
}

#[test]
fn physical_access_and_combine() {
    let t = emit("let A: float[8 bank 2]; let B: float[8 bank 2];\nlet dot = 0.0;\nfor (let i = 0..8) unroll 2 {\n  let v = A[i] * B[i];\n} combine {\n  dot -= v;\n}\n---\nA{1}[0] := dot;\n");
    let ls = lines(&t);
    let v = ls.iter().position(|l| *l == "float v = A[i] * B[i];").unwrap();
    assert_eq!(ls[v + 1], "dot -= v;");
    assert!(ls.contains(&"A[1] = dot;"));
}

#[test]
fn emission_is_deterministic_and_rejects_ill_typed() {
    let src = "let A: float[8 bank 2];\nfor (let i = 0..8) unroll 2 {\n  A[i] := 1.0;\n}\n";
    assert_eq!(emit(src), emit(src));
    let bad = parse_program("let A: float[8];\nlet x = A[0];\nA[1] := 1.0;\n").unwrap();
    assert!(emit_cxx(&bad).is_err());
}
