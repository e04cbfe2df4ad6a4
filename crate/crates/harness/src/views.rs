//! Exhaustive check of view lowering against the logical index model.
//!
//! Every configuration becomes a small program that reads each in-range
//! view element into a result memory and then overwrites it. The program is
//! elaborated and run; reads and writes must land on exactly the element the
//! model predicts, and the C++ backend's index expressions must evaluate to
//! the same element.

use std::collections::BTreeMap;
use std::fmt::Write;

use fuse_core::ast::{ExprKind, BinOp};
use fuse_core::calculus::{run_to_completion, Env, Outcome, Rho, Value};
use fuse_core::elaborate::elaborate;
use fuse_core::linear::LinearForm;
use fuse_core::parser::parse_expr;
use fuse_core::typecheck::{check_with, Options};
use fuse_core::{backend, parse_program};
use serde::Serialize;

/// One view over `A` with dimension shape `dims` (size, banks).
#[derive(Clone, Debug)]
pub struct ViewCase {
    pub dims: Vec<(i64, i64)>,
    pub decl: String,
    /// In-range view indices and the logical element of `A` each maps to.
    pub points: Vec<(Vec<i64>, Vec<i64>)>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ViewReport {
    pub cases: u64,
    pub accesses: u64,
    pub mismatches: u64,
    pub failures: Vec<String>,
}

fn divides(n: i64) -> impl Iterator<Item = i64> {
    [1, 2, 4].into_iter().filter(move |d| n % d == 0)
}

fn cartesian(ranges: &[i64]) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for &r in ranges {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..r).map(move |i| {
                    let mut q = p.clone();
                    q.push(i);
                    q
                })
            })
            .collect();
    }
    out
}

fn in_range(idx: &[i64], dims: &[(i64, i64)]) -> bool {
    idx.iter().zip(dims).all(|(i, (n, _))| *i >= 0 && i < n)
}

fn list(xs: &[i64]) -> String {
    xs.iter().map(|x| format!("[by {x}]")).collect()
}

/// All view configurations over memories of at most 16 elements with
/// banking factors 1, 2 and 4.
pub fn enumerate_cases() -> Vec<ViewCase> {
    let mut shapes: Vec<Vec<(i64, i64)>> = Vec::new();
    for n in 1..=16 {
        for b in divides(n) {
            shapes.push(vec![(n, b)]);
        }
    }
    for r in [2, 4] {
        for c in [2, 4] {
            for rb in divides(r) {
                for cb in divides(c) {
                    shapes.push(vec![(r, rb), (c, cb)]);
                }
            }
        }
    }
    let mut out = Vec::new();
    for dims in shapes {
        let sizes: Vec<i64> = dims.iter().map(|d| d.0).collect();
        let all = cartesian(&sizes);
        // shrink: every factor dividing the banking
        let factors: Vec<Vec<i64>> = dims.iter().map(|d| divides(d.1).collect()).collect();
        for f in cartesian_of(&factors) {
            out.push(ViewCase {
                dims: dims.clone(),
                decl: format!("view v = shrink A{};", list(&f)),
                points: all.iter().map(|i| (i.clone(), i.clone())).collect(),
            });
        }
        // suffix: offsets that are multiples of the banking
        let offs: Vec<Vec<i64>> = dims
            .iter()
            .map(|(n, b)| (0..*n).filter(|o| o % b == 0).collect())
            .collect();
        for o in cartesian_of(&offs) {
            out.push(offset_case(&dims, &all, "suffix", &o));
        }
        // shift: every offset
        let offs: Vec<Vec<i64>> = dims.iter().map(|(n, _)| (0..*n).collect()).collect();
        for o in cartesian_of(&offs) {
            out.push(offset_case(&dims, &all, "shift", &o));
        }
        // split: factors dividing both banking and size
        let ws: Vec<Vec<i64>> = dims
            .iter()
            .map(|(n, b)| divides(*b).filter(|w| n % w == 0).collect())
            .collect();
        for w in cartesian_of(&ws) {
            let vsizes: Vec<i64> = dims
                .iter()
                .zip(&w)
                .flat_map(|((n, _), w)| [*w, n / w])
                .collect();
            let points = cartesian(&vsizes)
                .into_iter()
                .map(|v| {
                    let logical = w
                        .iter()
                        .enumerate()
                        .map(|(d, w)| w * v[2 * d + 1] + v[2 * d])
                        .collect();
                    (v, logical)
                })
                .collect();
            out.push(ViewCase {
                dims: dims.clone(),
                decl: format!("view v = split A{};", list(&w)),
                points,
            });
            // a shrink of the split view
            if dims.len() == 1 && dims[0].1 / w[0] > 1 {
                let f = dims[0].1 / w[0];
                let mut c = out.last().unwrap().clone();
                c.decl = format!("view s = split A[by {}];\nview v = shrink s[by 1][by {f}];", w[0]);
                out.push(c);
            }
        }
    }
    out
}

fn cartesian_of(choices: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for c in choices {
        out = out
            .into_iter()
            .flat_map(|p| {
                c.iter().map(move |x| {
                    let mut q = p.clone();
                    q.push(*x);
                    q
                })
            })
            .collect();
    }
    out
}

fn offset_case(dims: &[(i64, i64)], all: &[Vec<i64>], kind: &str, o: &[i64]) -> ViewCase {
    let points = all
        .iter()
        .filter_map(|i| {
            let l: Vec<i64> = i.iter().zip(o).map(|(i, o)| i + o).collect();
            in_range(&l, dims).then(|| (i.clone(), l))
        })
        .collect();
    // 1-D shifts go through a scalar so the offset is only known at run time
    let decl = if kind == "shift" && dims.len() == 1 {
        format!("let o = {};\nview v = shift A[by o];", o[0])
    } else {
        format!("view v = {kind} A{};", list(o))
    };
    ViewCase {
        dims: dims.to_vec(),
        decl,
        points,
    }
}

fn flat(idx: &[i64], dims: &[(i64, i64)]) -> usize {
    idx.iter().zip(dims).fold(0, |acc, (i, (n, _))| acc * n + i) as usize
}

fn source(c: &ViewCase) -> String {
    let mut s = String::new();
    let shape: String = c
        .dims
        .iter()
        .map(|(n, b)| if *b > 1 { format!("[{n} bank {b}]") } else { format!("[{n}]") })
        .collect();
    writeln!(s, "let A: bit<32>{shape};").unwrap();
    writeln!(s, "let R: bit<32>[{}];", c.points.len().max(1)).unwrap();
    writeln!(s, "{}", c.decl).unwrap();
    let ix = |v: &[i64]| v.iter().map(|i| format!("[{i}]")).collect::<String>();
    let mut steps = Vec::new();
    for (k, (v, _)) in c.points.iter().enumerate() {
        steps.push(format!("let x{k} = v{};\n---\nR[{k}] := x{k};\n", ix(v)));
    }
    for (k, (v, _)) in c.points.iter().enumerate() {
        steps.push(format!("v{} := {};\n", ix(v), 1000 + k));
    }
    s.push_str(&steps.join("---\n"));
    s
}

/// Runs one case; returns the number of checked accesses or a description
/// of the first mismatch.
pub fn check_case(c: &ViewCase) -> Result<u64, String> {
    let src = source(c);
    let p = parse_program(&src).map_err(|d| format!("parse: {}\n{src}", d.message))?;
    let e = elaborate(&p).map_err(|d| format!("rejected: {}\n{src}", d[0].message))?;
    let len: i64 = c.dims.iter().map(|d| d.0).product();
    let init: Vec<Value> = (0..len).map(|i| Value::b32(i * 7 + 3)).collect();
    let mut env = Env::new(&e.core);
    e.memmap.scatter(&mut env, "A", &init);
    let env = match run_to_completion(env, Rho::new(), e.core.body.clone(), 1_000_000) {
        Outcome::Completed { env, .. } => env,
        o => return Err(format!("run ended {}\n{src}", o.label())),
    };
    let a = e.memmap.gather(&env, "A");
    let r = e.memmap.gather(&env, "R");
    let mut want = init.clone();
    for (k, (v, l)) in c.points.iter().enumerate() {
        let at = flat(l, &c.dims);
        if r[k] != init[at] {
            return Err(format!("read of v{v:?} gave {} but A{l:?} is {}\n{src}", r[k], init[at]));
        }
        want[at] = Value::b32(1000 + k as i64);
    }
    if a != want {
        return Err(format!("writes landed in the wrong elements\n{src}"));
    }
    check_emitted(c, &p, &src)?;
    Ok(2 * c.points.len() as u64)
}

/// Evaluates the backend's index expressions for `A` and compares them with
/// the model, in program order: all reads, then all writes.
fn check_emitted(c: &ViewCase, p: &fuse_core::ast::Program, src: &str) -> Result<(), String> {
    let text = backend::emit_cxx(p).map_err(|d| format!("emit: {}", d[0].message))?;
    let mut vars: BTreeMap<String, i64> = BTreeMap::new();
    let mut seen = Vec::new();
    for line in text.lines().map(str::trim) {
        if line.starts_with('#') || line.starts_with("void") {
            continue;
        }
        if let Some(rest) = line.strip_prefix("ap_int<32> ") {
            if let Some((name, val)) = rest.trim_end_matches(';').split_once(" = ") {
                if let Ok(v) = val.trim().parse::<i64>() {
                    vars.insert(name.trim().to_string(), v);
                }
            }
        }
        let mut rest = line;
        while let Some(pos) = rest.find("A[") {
            let before = rest[..pos].chars().last();
            rest = &rest[pos + 1..];
            if before.is_some_and(|ch| ch.is_alphanumeric() || ch == '_') {
                continue;
            }
            let mut idx = Vec::new();
            while let Some(body) = rest.strip_prefix('[') {
                let end = body.find(']').ok_or("unbalanced index")?;
                let e = parse_expr(&body[..end]).map_err(|d| d.message)?;
                idx.push(eval(&e, &vars).ok_or_else(|| format!("cannot evaluate `{}`", &body[..end]))?);
                rest = &body[end + 1..];
            }
            seen.push(idx);
        }
    }
    let want: Vec<Vec<i64>> = c
        .points
        .iter()
        .chain(c.points.iter())
        .map(|(_, l)| l.clone())
        .collect();
    if seen != want {
        return Err(format!("emitted indices {seen:?}, expected {want:?}\n{src}\n{text}"));
    }
    Ok(())
}

fn eval(e: &fuse_core::ast::Expr, vars: &BTreeMap<String, i64>) -> Option<i64> {
    match &e.kind {
        ExprKind::Int(n) => Some(*n),
        ExprKind::Var(x) => vars.get(x).copied(),
        ExprKind::Binary(op, l, r) => {
            let (l, r) = (eval(l, vars)?, eval(r, vars)?);
            match op {
                BinOp::Add => Some(l + r),
                BinOp::Sub => Some(l - r),
                BinOp::Mul => Some(l * r),
                BinOp::Div if r != 0 => Some(l.div_euclid(r)),
                BinOp::Rem if r != 0 => Some(l.rem_euclid(r)),
                _ => None,
            }
        }
        _ => None,
    }
}

/// Physical accesses `A{b}[o]` on one-dimensional memories must reach
/// logical element `banks * o + b`.
pub fn physical_cases() -> Vec<(String, i64, i64)> {
    let mut out = Vec::new();
    for n in 1..=16 {
        for b in divides(n) {
            for bank in 0..b {
                for off in 0..n / b {
                    let src = format!(
                        "let A: bit<32>[{n}{}];\nA{{{bank}}}[{off}] := 77;",
                        if b > 1 { format!(" bank {b}") } else { String::new() }
                    );
                    out.push((src, n, b * off + bank));
                }
            }
        }
    }
    out
}

pub fn check_physical(src: &str, n: i64, at: i64) -> Result<(), String> {
    let p = parse_program(src).map_err(|d| d.message)?;
    let e = elaborate(&p).map_err(|d| d[0].message.clone())?;
    let env = match run_to_completion(Env::new(&e.core), Rho::new(), e.core.body.clone(), 1000) {
        Outcome::Completed { env, .. } => env,
        o => return Err(o.label().to_string()),
    };
    let a = e.memmap.gather(&env, "A");
    let want: Vec<Value> = (0..n).map(|i| Value::b32(if i == at { 77 } else { 0 })).collect();
    if a != want {
        return Err(format!("wrote the wrong element\n{src}"));
    }
    Ok(())
}

/// Runs every view and physical-access case.
pub fn view_oracle() -> ViewReport {
    let mut rep = ViewReport::default();
    for c in enumerate_cases() {
        rep.cases += 1;
        match check_case(&c) {
            Ok(n) => rep.accesses += n,
            Err(e) => {
                rep.mismatches += 1;
                if rep.failures.len() < 5 {
                    rep.failures.push(e);
                }
            }
        }
    }
    for (src, n, at) in physical_cases() {
        rep.cases += 1;
        rep.accesses += 1;
        if let Err(e) = check_physical(&src, n, at) {
            rep.mismatches += 1;
            if rep.failures.len() < 5 {
                rep.failures.push(e);
            }
        }
    }
    rep
}

/// The blocked dot product over split views.
pub const SPLIT_DOT: &str = "let A: float[12 bank 4];
let B: float[12 bank 4];
view split_A = split A[by 2];
view split_B = split B[by 2];
let sum = 0.0;
for (let i = 0..6) unroll 2 {
  for (let j = 0..2) unroll 2 {
    let v = split_A[j][i] * split_B[j][i];
  } combine {
    sum += v;
  }
}
";

#[derive(Clone, Debug, Serialize)]
pub struct SplitDotReport {
    /// Every access reaches element `2i + j` for its copy's iterators.
    pub elements_ok: bool,
    /// Within each memory, the four lockstep copies use four distinct banks.
    pub distinct_banks: bool,
    /// The elaborated program computes the dot product.
    pub value_ok: bool,
    pub accesses: usize,
}

pub fn split_dot_product() -> Result<SplitDotReport, String> {
    let p = parse_program(SPLIT_DOT).map_err(|d| d.message)?;
    let opts = Options {
        trace: true,
        ..Options::default()
    };
    let checked = check_with(&p, opts).map_err(|d| d.message)?;
    let trace = &checked.report.trace;
    let mut elements_ok = !trace.is_empty();
    let mut banks: BTreeMap<String, Vec<u64>> = BTreeMap::new();
    for rec in trace {
        // key = [outer copy, inner copy]; i = 2 * ctr + outer copy
        let (ui, uj) = (rec.key[0] as i64, rec.key[1] as i64);
        let form: &LinearForm = &rec.root_forms[0];
        for ctr in 0..3 {
            let i = 2 * ctr + ui;
            let got = form.eval(&|v: &str| v.ends_with("_ctr").then_some(ctr));
            elements_ok &= got == Some(2 * i + uj);
        }
        banks.entry(rec.root.clone()).or_default().extend(&rec.banks);
    }
    let distinct_banks = banks.len() == 2
        && banks.values().all(|b| {
            let mut s = b.clone();
            s.sort();
            s == [0, 1, 2, 3]
        });
    let e = elaborate(&p).map_err(|d| d[0].message.clone())?;
    let a: Vec<Value> = (0..12).map(|i| Value::Float(i as f64)).collect();
    let b: Vec<Value> = (0..12).map(|i| Value::Float((i % 3) as f64)).collect();
    let mut env = Env::new(&e.core);
    e.memmap.scatter(&mut env, "A", &a);
    e.memmap.scatter(&mut env, "B", &b);
    let want: f64 = (0..12).map(|i| (i * (i % 3)) as f64).sum();
    let value_ok = match run_to_completion(env, Rho::new(), e.core.body.clone(), 1_000_000) {
        Outcome::Completed { env, .. } => env.vars.get("sum") == Some(&Value::Float(want)),
        _ => false,
    };
    Ok(SplitDotReport {
        elements_ok,
        distinct_banks,
        value_ok,
        accesses: trace.len(),
    })
}
