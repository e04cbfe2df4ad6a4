//! Progress and preservation checks over the core calculus.

use std::collections::BTreeMap;

use fuse_core::calculus::{
    big_step, core_check, small_step, CCmd, CoreChecker, CoreProgram, Delta, Env, Fault, Gamma,
    Rho, Value,
};
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Completed { steps: u64 },
    /// A well-typed, unfinished program that could not step.
    Stuck { step: u64, reason: String },
    /// A residual that no longer type-checks.
    PreservationViolation { step: u64, error: String },
    RuntimeError { step: u64, message: String },
    FuelExhausted { steps: u64 },
    /// The program itself is ill-typed.
    Rejected { error: String },
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Completed { .. } => "completed",
            Verdict::Stuck { .. } => "stuck",
            Verdict::PreservationViolation { .. } => "preservation_violation",
            Verdict::RuntimeError { .. } => "runtime_error",
            Verdict::FuelExhausted { .. } => "fuel_exhausted",
            Verdict::Rejected { .. } => "rejected",
        }
    }

    /// Stuck states and preservation violations are soundness failures.
    pub fn is_failure(&self) -> bool {
        matches!(
            self,
            Verdict::Stuck { .. } | Verdict::PreservationViolation { .. }
        )
    }
}

/// Initial state with `inputs` loaded into the named backing stores.
pub fn initial_env(p: &CoreProgram, inputs: &BTreeMap<String, Vec<Value>>) -> Env {
    let mut env = Env::new(p);
    for (k, v) in inputs {
        if let Some(slot) = env.mems.get_mut(k) {
            if slot.len() == v.len() {
                slot.clone_from(v);
            }
        }
    }
    env
}

fn gamma_of(env: &Env) -> Gamma {
    env.vars.iter().map(|(k, v)| (k.clone(), v.ty())).collect()
}

/// Runs `p` one small step at a time, re-typing the residual after every
/// step under the variables in σ and the memories not in ρ.
pub fn assert_progress_preservation(
    p: &CoreProgram,
    inputs: &BTreeMap<String, Vec<Value>>,
    fuel: u64,
) -> Verdict {
    let mems = p.delta_star();
    if let Err(e) = core_check(&mems, &p.body) {
        return Verdict::Rejected {
            error: e.to_string(),
        };
    }
    let ck = CoreChecker::new(&mems);
    let full = ck.full_delta();
    let mut env = initial_env(p, inputs);
    let mut rho = Rho::new();
    let mut c = p.body.clone();
    let mut step = 0;
    while !c.is_skip() {
        if step >= fuel {
            return Verdict::FuelExhausted { steps: step };
        }
        c = match small_step(&mut env, &mut rho, c) {
            Ok(Some(next)) => next,
            Ok(None) => unreachable!("skip was handled above"),
            Err(Fault::Stuck(reason)) => return Verdict::Stuck { step, reason },
            Err(Fault::Runtime(message)) => return Verdict::RuntimeError { step, message },
            Err(Fault::Fuel) => return Verdict::FuelExhausted { steps: step },
        };
        step += 1;
        let avail: Delta = full.difference(&rho).cloned().collect();
        if let Err(e) = ck.cmd(gamma_of(&env), avail, &c) {
            return Verdict::PreservationViolation {
                step,
                error: e.to_string(),
            };
        }
    }
    Verdict::Completed { steps: step }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Agreement {
    Agree,
    /// Both semantics faulted the same way.
    AgreeFault(String),
    Disagree(String),
}

/// Runs the big-step and small-step interpreters from the same state and
/// compares final stores, variables and access sets.
pub fn compare_semantics(
    p: &CoreProgram,
    inputs: &BTreeMap<String, Vec<Value>>,
    fuel: u64,
) -> Agreement {
    let mut big_env = initial_env(p, inputs);
    let big = big_step(&mut big_env, Rho::new(), &p.body, &mut fuel.clone());
    let small = fuse_core::calculus::run_to_completion(
        initial_env(p, inputs),
        Rho::new(),
        p.body.clone(),
        fuel,
    );
    use fuse_core::calculus::Outcome;
    match (big, small) {
        (Ok(rho), Outcome::Completed { env, rho: r2, .. }) => {
            if env != big_env {
                Agreement::Disagree("final states differ".into())
            } else if rho != r2 {
                Agreement::Disagree(format!("access sets differ: {rho:?} vs {r2:?}"))
            } else {
                Agreement::Agree
            }
        }
        (Err(Fault::Stuck(_)), Outcome::Stuck { .. }) => Agreement::AgreeFault("stuck".into()),
        (Err(Fault::Runtime(_)), Outcome::RuntimeError { .. }) => {
            Agreement::AgreeFault("runtime_error".into())
        }
        // The two interpreters count fuel differently, so running out in
        // either one says nothing about the other.
        (Err(Fault::Fuel), _) | (_, Outcome::FuelExhausted { .. }) => {
            Agreement::AgreeFault("fuel_exhausted".into())
        }
        (b, s) => Agreement::Disagree(format!("big-step {:?}, small-step {}", b, s.label())),
    }
}

/// Every command obtained by replacing one subterm of `c` with `skip`.
fn candidates(c: &CCmd) -> Vec<CCmd> {
    let mut out = Vec::new();
    if !c.is_skip() {
        out.push(CCmd::Skip);
    }
    let wrap2 = |a: &CCmd, b: &CCmd, mk: &dyn Fn(CCmd, CCmd) -> CCmd, out: &mut Vec<CCmd>| {
        out.push(mk(CCmd::Skip, b.clone()));
        out.push(mk(a.clone(), CCmd::Skip));
        for a2 in candidates(a) {
            out.push(mk(a2, b.clone()));
        }
        for b2 in candidates(b) {
            out.push(mk(a.clone(), b2));
        }
    };
    match c {
        CCmd::Unordered(a, b) => {
            out.push((**a).clone());
            out.push((**b).clone());
            wrap2(a, b, &CCmd::unordered2, &mut out);
        }
        CCmd::Ordered(a, b) => {
            wrap2(a, b, &CCmd::ordered2, &mut out);
        }
        CCmd::If(x, a, b) => {
            let x = x.clone();
            wrap2(a, b, &move |a, b| CCmd::if_(&x, a, b), &mut out);
        }
        CCmd::While(x, body) => {
            for b2 in candidates(body) {
                out.push(CCmd::while_(x, b2));
            }
        }
        _ => {}
    }
    out
}

/// Greedily shrinks `p` while `still_fails` holds, replacing subterms with
/// `skip` and preferring the smallest candidate at each round. Every round
/// strictly reduces the node count.
pub fn shrink(p: &CoreProgram, still_fails: impl Fn(&CoreProgram) -> bool) -> CoreProgram {
    let mut cur = p.clone();
    loop {
        let size = cur.body.size();
        let mut cands = candidates(&cur.body);
        cands.retain(|c| c.size() < size);
        cands.sort_by_key(CCmd::size);
        let next = cands.into_iter().find_map(|body| {
            let q = CoreProgram {
                mems: cur.mems.clone(),
                body,
            };
            still_fails(&q).then_some(q)
        });
        match next {
            Some(q) => cur = q,
            None => return cur,
        }
    }
}

/// `c` with every `---` replaced by `;`.
pub fn erase_ordering(c: &CCmd) -> CCmd {
    match c {
        CCmd::Ordered(a, b) => CCmd::unordered2(erase_ordering(a), erase_ordering(b)),
        CCmd::Unordered(a, b) => CCmd::unordered2(erase_ordering(a), erase_ordering(b)),
        CCmd::If(x, a, b) => CCmd::if_(x, erase_ordering(a), erase_ordering(b)),
        CCmd::While(x, b) => CCmd::while_(x, erase_ordering(b)),
        c => c.clone(),
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ControlReport {
    pub mutants: u64,
    /// Mutants the checker rejected.
    pub rejected: u64,
    /// Rejected mutants that really do get stuck when run unchecked.
    pub rejected_and_stuck: u64,
    /// Accepted mutants that got stuck. Must stay zero.
    pub accepted_and_stuck: u64,
}

/// Negative control: drops the ordering from `p` and runs the mutant both
/// through the checker and, unchecked, through the interpreter.
pub fn negative_control(
    p: &CoreProgram,
    inputs: &BTreeMap<String, Vec<Value>>,
    fuel: u64,
    report: &mut ControlReport,
) {
    let body = erase_ordering(&p.body);
    if body == p.body {
        return;
    }
    let m = CoreProgram {
        mems: p.mems.clone(),
        body,
    };
    report.mutants += 1;
    let accepted = core_check(&m.delta_star(), &m.body).is_ok();
    let out = fuse_core::calculus::run_to_completion(initial_env(&m, inputs), Rho::new(), m.body, fuel);
    let stuck = out.label() == "stuck";
    if !accepted {
        report.rejected += 1;
        if stuck {
            report.rejected_and_stuck += 1;
        }
    } else if stuck {
        report.accepted_and_stuck += 1;
    }
}
