//! Checked big-step semantics: `σ, ρ, c ⇓ σ', ρ'`.

use super::ast::{CCmd, CExpr};
use super::env::{claim, Env, Fault, Rho};
use super::value::Value;

pub fn eval_expr(env: &Env, rho: &mut Rho, e: &CExpr) -> Result<Value, Fault> {
    match e {
        CExpr::Val(v) => Ok(*v),
        CExpr::Var(x) => env.var(x),
        CExpr::Bop(op, l, r) => {
            let a = eval_expr(env, rho, l)?;
            let b = eval_expr(env, rho, r)?;
            Ok(Value::binop(*op, a, b)?)
        }
        CExpr::Read(a, ix) => {
            let i = eval_expr(env, rho, ix)?;
            claim(rho, a)?;
            env.load(a, i)
        }
    }
}

fn cond(env: &Env, x: &str) -> Result<bool, Fault> {
    env.var(x)?
        .as_bool()
        .ok_or_else(|| Fault::Runtime(format!("condition `{x}` is not a bool")))
}

/// Runs `c`; `fuel` is decremented once per loop iteration.
pub fn big_step(env: &mut Env, rho: Rho, c: &CCmd, fuel: &mut u64) -> Result<Rho, Fault> {
    let mut rho = rho;
    match c {
        CCmd::Skip => {}
        CCmd::Expr(e) => {
            eval_expr(env, &mut rho, e)?;
        }
        CCmd::Let(x, e) => {
            let v = eval_expr(env, &mut rho, e)?;
            env.vars.insert(x.clone(), v);
        }
        CCmd::Assign(x, e) => {
            let v = eval_expr(env, &mut rho, e)?;
            env.assign(x, v)?;
        }
        CCmd::Store(a, i, v) => {
            let i = eval_expr(env, &mut rho, i)?;
            let v = eval_expr(env, &mut rho, v)?;
            claim(&mut rho, a)?;
            env.store(a, i, v)?;
        }
        CCmd::Unordered(a, b) => {
            rho = big_step(env, rho, a, fuel)?;
            rho = big_step(env, rho, b, fuel)?;
        }
        CCmd::Ordered(a, b) => {
            let r1 = big_step(env, rho.clone(), a, fuel)?;
            let r2 = big_step(env, rho, b, fuel)?;
            rho = &r1 | &r2;
        }
        CCmd::Inter(a, r, b) => {
            let r1 = big_step(env, rho, a, fuel)?;
            let r2 = big_step(env, r.clone(), b, fuel)?;
            rho = &r1 | &r2;
        }
        CCmd::If(x, a, b) => {
            let branch = if cond(env, x)? { a } else { b };
            rho = big_step(env, rho, branch, fuel)?;
        }
        CCmd::While(x, body) => {
            let entry = rho.clone();
            while cond(env, x)? {
                if *fuel == 0 {
                    return Err(Fault::Fuel);
                }
                *fuel -= 1;
                let r = big_step(env, entry.clone(), body, fuel)?;
                rho.extend(r);
            }
        }
    }
    Ok(rho)
}
