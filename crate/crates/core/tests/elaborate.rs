use fuse_core::calculus::{big_step, core_check, print_program, run_to_completion, Env, Outcome, Rho, Value};
use fuse_core::elaborate::{elaborate, Elaborated};
use fuse_core::parse_program;

fn lower(src: &str) -> Elaborated {
    let p = parse_program(src).expect("parses");
    let e = elaborate(&p).unwrap_or_else(|d| panic!("{d:?}"));
    if let Err(err) = core_check(&e.core.delta_star(), &e.core.body) {
        panic!("core check failed: {err:?}\n{}", print_program(&e.core));
    }
    e
}

/// Runs with the given memory contents under both semantics and returns the
/// final environment.
fn run(e: &Elaborated, init: &[(&str, Vec<Value>)]) -> Env {
    let mut env = Env::new(&e.core);
    for (m, data) in init {
        e.memmap.scatter(&mut env, m, data);
    }
    let mut big = env.clone();
    big_step(&mut big, Rho::new(), &e.core.body, &mut 1_000_000)
        .unwrap_or_else(|f| panic!("{f}\n{}", print_program(&e.core)));
    match run_to_completion(env, Rho::new(), e.core.body.clone(), 10_000_000) {
        Outcome::Completed { env, .. } => {
            assert_eq!(env, big);
            env
        }
        o => panic!("{o:?}\n{}", print_program(&e.core)),
    }
}

fn floats(xs: impl IntoIterator<Item = i64>) -> Vec<Value> {
    xs.into_iter().map(|x| Value::Float(x as f64)).collect()
}

#[test]
fn banked_memory_splits() {
    let e = lower("let A: float[8 bank 4]; A[0] := 1;");
    let names: Vec<_> = e.core.mems.iter().map(|m| m.name.as_str()).collect();
    assert_eq!(names, ["A_0", "A_1", "A_2", "A_3"]);
    assert!(e.core.mems.iter().all(|m| m.size == 2));
}

#[test]
fn dot_product() {
    let e = lower(
        "let A: float[10 bank 2]; let B: float[10 bank 2];
         let dot = 0.0;
         for (let i = 0..10) unroll 2 {
           let v = A[i] * B[i];
         } combine {
           dot += v;
         }",
    );
    let env = run(&e, &[("A", floats(1..=10)), ("B", floats(vec![2; 10]))]);
    assert_eq!(env.vars["dot"], Value::Float(110.0));
}

#[test]
fn unrolled_copy_goes_to_its_bank() {
    let e = lower(
        "let A: float[8 bank 4]; let B: float[8 bank 4];
         for (let i = 0..8) unroll 4 { B[i] := A[i] + 1 }",
    );
    let env = run(&e, &[("A", floats(0..8))]);
    assert_eq!(e.memmap.gather(&env, "B"), floats(1..9));
    let text = print_program(&e.core);
    assert!(!text.contains("_bk"), "{text}");
}

#[test]
fn shift_view_dispatches_on_dynamic_offset() {
    let e = lower(
        "let A: float[12 bank 4]; let S: float[12];
         for (let i = 0..3) {
           view r = shift A[by i * i];
           let t = 0.0;
           for (let j = 0..4) unroll 4 { let x = r[j] } combine { t += x }
           ---
           S[i] := t;
         }",
    );
    let env = run(&e, &[("A", floats(0..12))]);
    let s = e.memmap.gather(&env, "S");
    // sum of A[i*i .. i*i+4]
    assert_eq!(&s[..3], &floats([6, 10, 22])[..]);
}

#[test]
fn two_dimensional_banking_and_suffix() {
    let e = lower(
        "let A: bit<32>[4 bank 2][6 bank 3];
         for (let i = 0..4) unroll 2 {
           for (let j = 0..6) unroll 3 { A[i][j] := i * 10 + j }
         }
         ---
         let s = 0;
         for (let k = 0..2) {
           view w = suffix A[by 2 * k][by 0];
           let x = w[1][2];
         } combine {
           s += x;
         }",
    );
    let env = run(&e, &[]);
    let a = e.memmap.gather(&env, "A");
    assert_eq!(a[2 * 6 + 5], Value::b32(25));
    // w[1][2] is A[2k+1][2]
    assert_eq!(env.vars["s"], Value::b32(12 + 32));
}

#[test]
fn multi_port_read_and_write() {
    let e = lower("let A: float{2}[4]; let x = A[0]; A[1] := x + 1;");
    let names: Vec<_> = e.core.mems.iter().map(|m| m.name.as_str()).collect();
    assert_eq!(names, ["A__p0", "A__p1"]);
    let env = run(&e, &[("A", floats([5, 0, 0, 0]))]);
    assert_eq!(e.memmap.gather(&env, "A"), floats([5, 6, 0, 0]));
}

#[test]
fn while_and_if() {
    let e = lower(
        "let A: bit<32>[8]; let n = 0;
         while (n < 8) {
           if (n % 2 == 0) { A[n] := n } else { A[n] := 0 - n }
           ---
           n := n + 1;
         }",
    );
    let env = run(&e, &[]);
    let a: Vec<i64> = e.memmap.gather(&env, "A").iter().map(|v| v.as_i64().unwrap()).collect();
    assert_eq!(a, [0, -1, 2, -3, 4, -5, 6, -7]);
}

#[test]
fn memory_reducer_is_one_access() {
    let e = lower(
        "let A: float[4 bank 2]; let P: float[4 bank 2];
         for (let i = 0..4) unroll 2 {
           for (let k = 0..4) { let v = A[k] } combine { P[i] += v }
         }",
    );
    let env = run(&e, &[("A", floats([1, 2, 3, 4])), ("P", floats([1, 0, 0, 0]))]);
    assert_eq!(e.memmap.gather(&env, "P"), floats([11, 10, 10, 10]));
}

#[test]
fn forced_compound_index_is_bound_before_dispatch() {
    let p = parse_program(
        "let A: float[10 bank 2];\nfor (let i = 0..5) unroll 5 {\n  A[2 * i] := 1;\n}\n",
    )
    .unwrap();
    let (e, soft) = fuse_core::elaborate::elaborate_forced(&p).unwrap();
    assert!(!soft.is_empty());
    let out = run_to_completion(Env::new(&e.core), Rho::new(), e.core.body.clone(), 10_000);
    assert!(matches!(out, Outcome::Stuck { .. }), "{}", out.label());
}
