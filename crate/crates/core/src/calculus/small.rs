//! Checked small-step semantics: `σ, ρ, c → σ', ρ', c'`.

use std::mem;

use super::ast::{CCmd, CExpr};
use super::env::{claim, Env, Fault, Rho};
use super::value::Value;

fn step_expr(env: &Env, rho: &mut Rho, e: CExpr) -> Result<CExpr, Fault> {
    match e {
        CExpr::Val(_) => Err(Fault::Stuck("value does not step".into())),
        CExpr::Var(x) => Ok(CExpr::Val(env.var(&x)?)),
        CExpr::Bop(op, l, r) => match (*l, *r) {
            (CExpr::Val(a), CExpr::Val(b)) => Ok(CExpr::Val(Value::binop(op, a, b)?)),
            (CExpr::Val(a), r) => Ok(CExpr::bop(op, CExpr::Val(a), step_expr(env, rho, r)?)),
            (l, r) => Ok(CExpr::bop(op, step_expr(env, rho, l)?, r)),
        },
        CExpr::Read(a, ix) => match *ix {
            CExpr::Val(i) => {
                claim(rho, &a)?;
                Ok(CExpr::Val(env.load(&a, i)?))
            }
            ix => Ok(CExpr::read(&a, step_expr(env, rho, ix)?)),
        },
    }
}

/// One reduction step. `Ok(None)` means `c` is `skip`.
pub fn small_step(env: &mut Env, rho: &mut Rho, c: CCmd) -> Result<Option<CCmd>, Fault> {
    Ok(Some(match c {
        CCmd::Skip => return Ok(None),
        CCmd::Expr(CExpr::Val(_)) => CCmd::Skip,
        CCmd::Expr(e) => CCmd::Expr(step_expr(env, rho, e)?),
        CCmd::Let(x, CExpr::Val(v)) => {
            env.vars.insert(x, v);
            CCmd::Skip
        }
        CCmd::Let(x, e) => CCmd::Let(x, step_expr(env, rho, e)?),
        CCmd::Assign(x, CExpr::Val(v)) => {
            env.assign(&x, v)?;
            CCmd::Skip
        }
        CCmd::Assign(x, e) => CCmd::Assign(x, step_expr(env, rho, e)?),
        CCmd::Store(a, CExpr::Val(i), CExpr::Val(v)) => {
            claim(rho, &a)?;
            env.store(&a, i, v)?;
            CCmd::Skip
        }
        CCmd::Store(a, CExpr::Val(i), v) => CCmd::Store(a, CExpr::Val(i), step_expr(env, rho, v)?),
        CCmd::Store(a, i, v) => CCmd::Store(a, step_expr(env, rho, i)?, v),
        CCmd::Unordered(a, b) => match *a {
            CCmd::Skip => *b,
            a => CCmd::Unordered(Box::new(step_inner(env, rho, a)?), b),
        },
        CCmd::Ordered(a, b) => CCmd::Inter(a, rho.clone(), b),
        CCmd::Inter(a, mut r, b) => match (*a, *b) {
            (CCmd::Skip, CCmd::Skip) => {
                rho.extend(mem::take(&mut r));
                CCmd::Skip
            }
            // A finished prefix around another finished prefix: fold the
            // outer annotation into ρ now. Results and typing are unchanged,
            // and loop unfolding no longer nests without bound.
            (CCmd::Skip, CCmd::Inter(b1, r2, b2)) if b1.is_skip() => {
                rho.extend(mem::take(&mut r));
                CCmd::Inter(b1, r2, b2)
            }
            (CCmd::Skip, b) => {
                let b = step_inner(env, &mut r, b)?;
                CCmd::Inter(Box::new(CCmd::Skip), r, Box::new(b))
            }
            (a, b) => {
                let a = step_inner(env, rho, a)?;
                CCmd::Inter(Box::new(a), r, Box::new(b))
            }
        },
        CCmd::If(x, a, b) => {
            let v = env.var(&x)?;
            match v.as_bool() {
                Some(true) => *a,
                Some(false) => *b,
                None => return Err(Fault::Runtime(format!("condition `{x}` is not a bool"))),
            }
        }
        CCmd::While(x, body) => {
            let again = CCmd::While(x.clone(), body.clone());
            CCmd::if_(&x, CCmd::ordered2(*body, again), CCmd::Skip)
        }
    }))
}

fn step_inner(env: &mut Env, rho: &mut Rho, c: CCmd) -> Result<CCmd, Fault> {
    small_step(env, rho, c)?.ok_or_else(|| Fault::Stuck("skip does not step".into()))
}

#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Completed { env: Env, rho: Rho, steps: u64 },
    Stuck { reason: String, steps: u64 },
    FuelExhausted { steps: u64 },
    RuntimeError { message: String, steps: u64 },
}

impl Outcome {
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Completed { .. } => "completed",
            Outcome::Stuck { .. } => "stuck",
            Outcome::FuelExhausted { .. } => "fuel_exhausted",
            Outcome::RuntimeError { .. } => "runtime_error",
        }
    }
}

/// Iterates [`small_step`] until `skip`, a fault, or `fuel` steps.
pub fn run_to_completion(env: Env, rho: Rho, c: CCmd, fuel: u64) -> Outcome {
    let (mut env, mut rho, mut c) = (env, rho, c);
    let mut steps = 0;
    loop {
        if c.is_skip() {
            return Outcome::Completed { env, rho, steps };
        }
        if steps >= fuel {
            return Outcome::FuelExhausted { steps };
        }
        match small_step(&mut env, &mut rho, c) {
            Ok(Some(next)) => c = next,
            Ok(None) => unreachable!(),
            Err(Fault::Stuck(reason)) => return Outcome::Stuck { reason, steps },
            Err(Fault::Runtime(message)) => return Outcome::RuntimeError { message, steps },
            Err(Fault::Fuel) => return Outcome::FuelExhausted { steps },
        }
        steps += 1;
    }
}
