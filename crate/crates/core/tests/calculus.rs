use fuse_core::ast::{BinOp, ScalarType};
use fuse_core::calculus::*;

fn mem(name: &str, backing: &str) -> CoreMem {
    CoreMem {
        name: name.into(),
        elem: ScalarType::Float,
        size: 4,
        backing: backing.into(),
    }
}

fn prog(mems: Vec<CoreMem>, body: CCmd) -> CoreProgram {
    CoreProgram { mems, body }
}

fn rd(a: &str, i: i64) -> CExpr {
    CExpr::read(a, CExpr::b32(i))
}

fn wr(a: &str, i: i64, v: f64) -> CCmd {
    CCmd::store(a, CExpr::b32(i), CExpr::Val(Value::Float(v)))
}

fn rho(xs: &[&str]) -> Rho {
    xs.iter().map(|x| x.to_string()).collect()
}

#[test]
fn check_examples() {
    let p = prog(vec![mem("A", "A")], CCmd::Skip);
    let d = p.delta_star();
    let unordered = CCmd::seq(vec![CCmd::let_("x", rd("A", 0)), wr("A", 1, 1.0)]);
    assert!(core_check(&d, &unordered).is_err());
    let ordered = CCmd::ordered2(CCmd::let_("x", rd("A", 0)), wr("A", 1, 1.0));
    let (g, delta) = core_check(&d, &ordered).unwrap();
    assert!(!delta.contains("A"));
    assert!(g.contains_key("x"));
    let (g, delta) = core_check(&d, &CCmd::Skip).unwrap();
    assert!(g.is_empty());
    assert_eq!(delta, d.keys().cloned().collect());
}

#[test]
fn check_rejects_unbound_and_mismatched() {
    let d = prog(vec![mem("A", "A")], CCmd::Skip).delta_star();
    assert!(core_check(&d, &CCmd::let_("y", CExpr::var("nope"))).is_err());
    let bad = CCmd::let_(
        "y",
        CExpr::bop(BinOp::Add, CExpr::b32(1), CExpr::Val(Value::Float(1.0))),
    );
    assert!(core_check(&d, &bad).is_err());
    assert!(core_check(&d, &CCmd::let_("y", rd("B", 0))).is_err());
}

#[test]
fn big_step_examples() {
    let mems = vec![mem("A", "A")];
    let conflict = prog(
        mems.clone(),
        CCmd::seq(vec![CCmd::let_("x", rd("A", 0)), wr("A", 1, 1.0)]),
    );
    let mut env = Env::new(&conflict);
    env.mems.get_mut("A").unwrap()[0] = Value::Float(7.0);
    assert!(matches!(
        big_step(&mut env, Rho::new(), &conflict.body, &mut 100),
        Err(Fault::Stuck(_))
    ));
    let ordered = prog(mems, CCmd::ordered2(CCmd::let_("x", rd("A", 0)), wr("A", 1, 1.0)));
    let mut env = Env::new(&ordered);
    let r = big_step(&mut env, Rho::new(), &ordered.body, &mut 100).unwrap();
    assert_eq!(env.mems["A"][1], Value::Float(1.0));
    assert_eq!(r, rho(&["A"]));
    let before = env.clone();
    assert_eq!(big_step(&mut env, rho(&["A"]), &CCmd::Skip, &mut 100).unwrap(), rho(&["A"]));
    assert_eq!(env, before);
}

#[test]
fn small_step_annotates_and_merges() {
    let p = prog(vec![mem("A", "A"), mem("B", "B")], CCmd::Skip);
    let mut env = Env::new(&p);
    let entry = rho(&["B"]);
    let mut outer = entry.clone();
    let c = CCmd::ordered2(CCmd::let_("x", rd("A", 0)), wr("A", 1, 2.0));
    let next = small_step(&mut env, &mut outer, c).unwrap().unwrap();
    let CCmd::Inter(_, ann, _) = &next else {
        panic!("{next:?}")
    };
    assert_eq!(*ann, entry);
    // run to the end by hand
    let mut c = next;
    while let Some(n) = small_step(&mut env, &mut outer, c.clone()).unwrap() {
        c = n;
    }
    assert!(c.is_skip());
    assert_eq!(outer, rho(&["A", "B"]));
    assert_eq!(env.mems["A"][1], Value::Float(2.0));

    let mut s = rho(&["S"]);
    let merged = small_step(
        &mut env,
        &mut s,
        CCmd::Inter(Box::new(CCmd::Skip), rho(&["R"]), Box::new(CCmd::Skip)),
    )
    .unwrap();
    assert_eq!(merged, Some(CCmd::Skip));
    assert_eq!(s, rho(&["R", "S"]));
}

#[test]
fn port_aliases_share_a_store() {
    let p = prog(
        vec![mem("A__p0", "A"), mem("A__p1", "A")],
        CCmd::seq(vec![CCmd::let_("x", rd("A__p0", 0)), wr("A__p1", 0, 5.0)]),
    );
    assert!(core_check(&p.delta_star(), &p.body).is_ok());
    match run_to_completion(Env::new(&p), Rho::new(), p.body.clone(), 100) {
        Outcome::Completed { env, rho: r, .. } => {
            assert_eq!(env.mems["A"][0], Value::Float(5.0));
            assert_eq!(env.vars["x"], Value::Float(0.0));
            assert_eq!(r, rho(&["A__p0", "A__p1"]));
        }
        o => panic!("{o:?}"),
    }
}

#[test]
fn runtime_errors_are_not_stuck() {
    let p = prog(
        vec![],
        CCmd::let_("x", CExpr::bop(BinOp::Div, CExpr::b32(1), CExpr::b32(0))),
    );
    assert!(core_check(&p.delta_star(), &p.body).is_ok());
    let o = run_to_completion(Env::new(&p), Rho::new(), p.body.clone(), 100);
    assert_eq!(o.label(), "runtime_error");
    let p = prog(vec![mem("A", "A")], CCmd::let_("x", rd("A", 9)));
    assert_eq!(
        run_to_completion(Env::new(&p), Rho::new(), p.body.clone(), 100).label(),
        "runtime_error"
    );
}

#[test]
fn while_loop_runs_and_agrees() {
    let body = CCmd::seq(vec![
        CCmd::let_("i", CExpr::b32(0)),
        CCmd::let_("go", CExpr::bop(BinOp::Lt, CExpr::var("i"), CExpr::b32(4))),
        CCmd::while_(
            "go",
            CCmd::ordered2(
                CCmd::store("A", CExpr::var("i"), CExpr::Val(Value::Float(3.0))),
                CCmd::seq(vec![
                    CCmd::assign("i", CExpr::bop(BinOp::Add, CExpr::var("i"), CExpr::b32(1))),
                    CCmd::assign("go", CExpr::bop(BinOp::Lt, CExpr::var("i"), CExpr::b32(4))),
                ]),
            ),
        ),
    ]);
    let p = prog(vec![mem("A", "A")], body);
    assert!(core_check(&p.delta_star(), &p.body).is_ok());
    let mut big = Env::new(&p);
    let r = big_step(&mut big, Rho::new(), &p.body, &mut 1000).unwrap();
    match run_to_completion(Env::new(&p), Rho::new(), p.body.clone(), 1000) {
        Outcome::Completed { env, rho: r2, .. } => {
            assert_eq!(env, big);
            assert_eq!(r2, r);
            assert!(env.mems["A"].iter().all(|v| *v == Value::Float(3.0)));
        }
        o => panic!("{o:?}"),
    }
}
