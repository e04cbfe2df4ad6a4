//! Concrete rendering of core programs.

use std::fmt::Write;

use super::ast::{CCmd, CExpr, CoreProgram};

pub fn print_program(p: &CoreProgram) -> String {
    let mut out = String::new();
    for m in &p.mems {
        write!(out, "mem {}: {}[{}]", m.name, m.elem, m.size).unwrap();
        if m.backing != m.name {
            write!(out, " @ {}", m.backing).unwrap();
        }
        out.push_str(";\n");
    }
    group(&mut out, &p.body, 0);
    out
}

pub fn print_cmd(c: &CCmd) -> String {
    let mut out = String::new();
    group(&mut out, c, 0);
    out
}

pub fn print_expr(e: &CExpr) -> String {
    let mut out = String::new();
    expr(&mut out, e, 0);
    out
}

fn pad(out: &mut String, n: usize) {
    for _ in 0..n {
        out.push_str("  ");
    }
}

fn group(out: &mut String, c: &CCmd, ind: usize) {
    match c {
        CCmd::Skip => {}
        CCmd::Unordered(a, b) => {
            part(out, a, ind);
            group(out, b, ind);
        }
        CCmd::Ordered(a, b) => {
            part(out, a, ind);
            pad(out, ind);
            out.push_str("---\n");
            group(out, b, ind);
        }
        CCmd::Inter(a, r, b) => {
            part(out, a, ind);
            pad(out, ind);
            let names: Vec<&str> = r.iter().map(String::as_str).collect();
            writeln!(out, "~{{{}}}~", names.join(", ")).unwrap();
            group(out, b, ind);
        }
        _ => line(out, c, ind),
    }
}

/// Left operand of a sequence: ordered forms need braces to keep nesting.
fn part(out: &mut String, c: &CCmd, ind: usize) {
    match c {
        CCmd::Ordered(..) | CCmd::Inter(..) => {
            pad(out, ind);
            out.push_str("{\n");
            group(out, c, ind + 1);
            pad(out, ind);
            out.push_str("}\n");
        }
        CCmd::Unordered(..) => group(out, c, ind),
        CCmd::Skip => line(out, c, ind),
        _ => line(out, c, ind),
    }
}

fn block(out: &mut String, c: &CCmd, ind: usize) {
    if c.is_skip() {
        out.push_str("{}");
        return;
    }
    out.push_str("{\n");
    group(out, c, ind + 1);
    pad(out, ind);
    out.push('}');
}

fn line(out: &mut String, c: &CCmd, ind: usize) {
    pad(out, ind);
    match c {
        CCmd::Skip => out.push_str("skip;"),
        CCmd::Expr(e) => {
            expr(out, e, 0);
            out.push(';');
        }
        CCmd::Let(x, e) => {
            write!(out, "let {x} = ").unwrap();
            expr(out, e, 0);
            out.push(';');
        }
        CCmd::Assign(x, e) => {
            write!(out, "{x} := ").unwrap();
            expr(out, e, 0);
            out.push(';');
        }
        CCmd::Store(a, i, v) => {
            write!(out, "{a}[").unwrap();
            expr(out, i, 0);
            out.push_str("] := ");
            expr(out, v, 0);
            out.push(';');
        }
        CCmd::If(x, a, b) => {
            write!(out, "if {x} ").unwrap();
            block(out, a, ind);
            if !b.is_skip() {
                out.push_str(" else ");
                block(out, b, ind);
            }
        }
        CCmd::While(x, b) => {
            write!(out, "while {x} ").unwrap();
            block(out, b, ind);
        }
        CCmd::Unordered(..) | CCmd::Ordered(..) | CCmd::Inter(..) => {
            block(out, c, ind);
        }
    }
    out.push('\n');
}

fn expr(out: &mut String, e: &CExpr, ctx: u8) {
    match e {
        CExpr::Val(v) => write!(out, "{v}").unwrap(),
        CExpr::Var(x) => out.push_str(x),
        CExpr::Read(a, i) => {
            write!(out, "{a}[").unwrap();
            expr(out, i, 0);
            out.push(']');
        }
        CExpr::Bop(op, l, r) => {
            let p = op.precedence();
            if p < ctx {
                out.push('(');
            }
            expr(out, l, p);
            write!(out, " {} ", op.symbol()).unwrap();
            expr(out, r, p + 1);
            if p < ctx {
                out.push(')');
            }
        }
    }
}
