use fuse_core::typecheck::check_program;
use fuse_core::{parse_program, Code};

fn verdict(src: &str) -> Result<(), Code> {
    let p = parse_program(src).expect("parses");
    check_program(&p).map(|_| ()).map_err(|ds| ds[0].code)
}

fn accepts(src: &str) {
    if let Err(c) = verdict(src) {
        let p = parse_program(src).unwrap();
        panic!("expected accept, got {c}: {:?}\n{src}", check_program(&p).err());
    }
}

fn rejects(src: &str, code: Code) {
    assert_eq!(verdict(src), Err(code), "{src}");
}

#[test]
fn read_then_write_same_step_conflicts() {
    rejects("let A: float[10]; let x = A[0]; A[1] := 1;", Code::Consumed);
}

#[test]
fn repeated_read_reuses_capability() {
    accepts("let A: float[10]; let x = A[0]; let y = A[0]");
}

#[test]
fn ordered_composition_restores_banks() {
    accepts("let A: float[10]; let x = A[0] --- A[1] := 1");
}

#[test]
fn nested_block_does_not_leak_restoration() {
    rejects(
        "let A: float[10]; let B: float[10]; { let x = A[0] + 1 --- B[1] := A[1] + x }; let y = B[0];",
        Code::Consumed,
    );
}

#[test]
fn distinct_banks_in_one_step() {
    accepts("let A: float[10 bank 2]; A{0}[0] := 1; A{1}[0] := 2");
}

#[test]
fn two_ports_allow_read_and_write() {
    accepts("let A: float{2}[10]; let x = A[0]; A[1] := x + 1");
}

#[test]
fn unroll_needs_banks() {
    rejects("let A: float[10]; for (let i = 0..10) unroll 2 { A[i] := 1 }", Code::Banks);
}

#[test]
fn unrolled_read_then_constant_bank() {
    accepts(
        "let A: float[10 bank 2];
         for (let i = 0..10) unroll 2 { let x = A[i] --- let y = x + A[0] }",
    );
}

#[test]
fn nested_unroll_write_capability() {
    rejects(
        "let A: bit<32>[8 bank 4][10 bank 5];
         for (let i = 0..8) {
           for (let j = 0..10) unroll 5 {
             let x = A[i][0] --- A[i][0] := j
           }
         }",
        Code::WriteCap,
    );
}

#[test]
fn dot_product_with_combine() {
    accepts(
        "let A: float[10 bank 2]; let B: float[10 bank 2];
         let dot = 0.0;
         for (let i = 0..10) unroll 2 {
           let v = A[i] * B[i];
         } combine {
           dot += v;
         }",
    );
}

#[test]
fn shrink_view_under_unroll() {
    accepts(
        "let A: float[8 bank 4];
         view sh = shrink A[by 2];
         for (let i = 0..8) unroll 2 { sh[i]; }",
    );
}

#[test]
fn suffix_view_in_plain_loop() {
    accepts(
        "let A: float[8 bank 2];
         for (let i = 0..4) {
           view s = suffix A[by 2 * i];
           let x = s[1];
         }",
    );
}

#[test]
fn shift_view_claims_every_bank() {
    accepts(
        "let A: float[12 bank 4];
         for (let i = 0..3) {
           view r = shift A[by i * i];
           for (let j = 0..4) unroll 4 { let x = r[j] }
         }",
    );
}

#[test]
fn arbitrary_index_arithmetic_rejected() {
    rejects(
        "let A: float[10 bank 2]; for (let i = 0..5) unroll 5 { A[2 * i] := 1 }",
        Code::Index,
    );
    rejects(
        "let A: float[10 bank 2]; for (let i = 0..10) unroll 2 { A[2 * i] := 1 }",
        Code::Index,
    );
}

#[test]
fn divisibility() {
    rejects("let A: float[10 bank 3];", Code::Divides);
    rejects("let A: float[10]; for (let i = 0..10) unroll 3 { A[0] := 1 }", Code::Divides);
}

#[test]
fn combine_registers_only_feed_reducers() {
    rejects(
        "let A: float[4]; let s = 0.0;
         for (let i = 0..4) { let v = A[i]; } combine { let w = v + 1; }",
        Code::Type,
    );
    accepts(
        "let A: float[4]; let s = 0.0;
         for (let i = 0..4) { let v = A[i]; } combine { s += v; }",
    );
}

#[test]
fn views_of_views_and_split() {
    accepts(
        "let A: float[12 bank 4];
         view p = split A[by 2];
         for (let i = 0..6) unroll 2 {
           for (let j = 0..2) unroll 2 { p[j][i] := 1 }
         }",
    );
    rejects("let A: float[8 bank 4]; view v = shrink A[by 3];", Code::View);
}

#[test]
fn ordinary_type_errors() {
    rejects("let x = 1; let y = x + true;", Code::Type);
    rejects("let x = 1; let x = 2;", Code::Type);
    rejects("let A: float[4]; if (A[0] > 1.0) { let y = 1 }", Code::Type);
    rejects("let y = z;", Code::Type);
}
