//! The core calculus: unbanked memories, logical time via `---`, and
//! interpreters that get stuck on same-step memory conflicts.

pub mod ast;
pub mod big;
pub mod check;
pub mod env;
pub mod print;
pub mod small;
pub mod value;

pub use ast::{CCmd, CExpr, CoreMem, CoreProgram};
pub use big::big_step;
pub use check::{core_check, CoreChecker, CoreTypeError, Delta, Gamma};
pub use env::{Env, Fault, Rho};
pub use print::{print_cmd, print_expr, print_program};
pub use small::{run_to_completion, small_step, Outcome};
pub use value::{binop_type, Value};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::ScalarType;

    fn prog(body: CCmd) -> CoreProgram {
        CoreProgram {
            mems: vec![CoreMem {
                name: "A".into(),
                elem: ScalarType::Float,
                size: 4,
                backing: "A".into(),
            }],
            body,
        }
    }

    fn conflict(ordered: bool) -> CCmd {
        let rd = CCmd::let_("x", CExpr::read("A", CExpr::b32(0)));
        let wr = CCmd::store("A", CExpr::b32(1), CExpr::Val(Value::Float(1.0)));
        if ordered {
            CCmd::ordered(vec![rd, wr])
        } else {
            CCmd::seq(vec![rd, wr])
        }
    }

    #[test]
    fn conflict_is_stuck_in_both_semantics() {
        let p = prog(conflict(false));
        let mut env = Env::new(&p);
        let r = big_step(&mut env, Rho::new(), &p.body, &mut 100);
        assert!(matches!(r, Err(Fault::Stuck(_))));
        let o = run_to_completion(Env::new(&p), Rho::new(), p.body.clone(), 100);
        assert_eq!(o.label(), "stuck");
    }

    #[test]
    fn ordered_restores_and_semantics_agree() {
        let p = prog(conflict(true));
        let mut env = Env::new(&p);
        let rho = big_step(&mut env, Rho::new(), &p.body, &mut 100).unwrap();
        assert_eq!(env.mems["A"][1], Value::Float(1.0));
        assert_eq!(rho, ["A".to_string()].into_iter().collect());
        match run_to_completion(Env::new(&p), Rho::new(), p.body.clone(), 100) {
            Outcome::Completed { env: e2, rho: r2, .. } => {
                assert_eq!(e2, env);
                assert_eq!(r2, rho);
            }
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn inter_merge_unions() {
        let r: Rho = ["R".to_string()].into_iter().collect();
        let mut outer: Rho = ["S".to_string()].into_iter().collect();
        let c = CCmd::Inter(Box::new(CCmd::Skip), r, Box::new(CCmd::Skip));
        let mut env = Env::new(&prog(CCmd::Skip));
        assert_eq!(small_step(&mut env, &mut outer, c).unwrap(), Some(CCmd::Skip));
        assert_eq!(outer.len(), 2);
    }

    #[test]
    fn divergence_runs_out_of_fuel() {
        let body = CCmd::seq(vec![
            CCmd::let_("t", CExpr::Val(Value::Bool(true))),
            CCmd::while_("t", CCmd::Skip),
        ]);
        let p = prog(body);
        assert_eq!(
            run_to_completion(Env::new(&p), Rho::new(), p.body.clone(), 1000).label(),
            "fuel_exhausted"
        );
        assert_eq!(
            big_step(&mut Env::new(&p), Rho::new(), &p.body, &mut 1000),
            Err(Fault::Fuel)
        );
    }

    #[test]
    fn printing() {
        let p = prog(conflict(true));
        let s = print_program(&p);
        assert_eq!(s, "mem A: float[4];\nlet x = A[0];\n---\nA[1] := 1.0;\n");
        let e = CExpr::bop(
            crate::ast::BinOp::Mul,
            CExpr::bop(crate::ast::BinOp::Add, CExpr::var("a"), CExpr::b32(1)),
            CExpr::Val(Value::bit(8, 2)),
        );
        assert_eq!(print_expr(&e), "(a + 1) * 2b8");
    }
}
