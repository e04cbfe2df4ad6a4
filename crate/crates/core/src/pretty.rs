//! Concrete-syntax printer. Output reparses to an equal AST.

use std::fmt::Write;

use crate::ast::*;

pub fn pretty_print(p: &Program) -> String {
    let mut out = String::new();
    group(&mut out, &p.body, 0);
    out
}

pub fn pretty_expr(e: &Expr) -> String {
    let mut s = String::new();
    expr(&mut s, e);
    s
}

fn pad(out: &mut String, indent: usize) {
    for _ in 0..indent {
        out.push_str("  ");
    }
}

fn braced(c: &Cmd) -> bool {
    match &c.kind {
        CmdKind::Block(_) => true,
        CmdKind::For { body, combine, .. } => combine.is_some() || braced(body),
        CmdKind::While { body, .. } => braced(body),
        CmdKind::If { then, els, .. } => match els {
            Some(e) => braced(e),
            None => braced(then),
        },
        _ => false,
    }
}

/// Prints a command in statement-list position (inside a block or at top level).
fn group(out: &mut String, c: &Cmd, indent: usize) {
    match &c.kind {
        CmdKind::Skip => {}
        CmdKind::Ordered(parts) => {
            for (i, p) in parts.iter().enumerate() {
                if i > 0 {
                    pad(out, indent);
                    out.push_str("---\n");
                }
                group(out, p, indent);
            }
        }
        CmdKind::Unordered(cs) => {
            for s in cs {
                line(out, s, indent);
            }
        }
        _ => line(out, c, indent),
    }
}

fn line(out: &mut String, c: &Cmd, indent: usize) {
    pad(out, indent);
    stmt(out, c, indent);
    if !braced(c) {
        out.push(';');
    }
    out.push('\n');
}

fn body(out: &mut String, c: &Cmd, indent: usize) {
    out.push(' ');
    stmt(out, c, indent);
}

fn block(out: &mut String, inner: &Cmd, indent: usize) {
    if inner.is_skip() {
        out.push_str("{}");
        return;
    }
    out.push_str("{\n");
    group(out, inner, indent + 1);
    pad(out, indent);
    out.push('}');
}

fn stmt(out: &mut String, c: &Cmd, indent: usize) {
    match &c.kind {
        CmdKind::Skip => out.push_str("{}"),
        CmdKind::Let { name, ty, init } => {
            write!(out, "let {name}").unwrap();
            if let Some(t) = ty {
                write!(out, ": {t}").unwrap();
            }
            out.push_str(" = ");
            expr(out, init);
        }
        CmdKind::MemDecl { name, ty } => {
            write!(out, "let {name}: {ty}").unwrap();
        }
        CmdKind::View {
            name,
            kind,
            target,
            args,
        } => {
            write!(out, "view {name} = {} ", kind.keyword()).unwrap();
            view_target(out, target, args);
        }
        CmdKind::Unordered(cs) => sugar(out, cs, indent),
        CmdKind::Ordered(_) => {
            // Not produced by the parser outside a block; print as one.
            out.push_str("{\n");
            group(out, c, indent + 1);
            pad(out, indent);
            out.push('}');
        }
        CmdKind::Block(inner) => block(out, inner, indent),
        CmdKind::For {
            iter,
            lo,
            hi,
            unroll,
            body: b,
            combine,
        } => {
            write!(out, "for (let {iter} = {lo}..{hi})").unwrap();
            if *unroll != 1 {
                write!(out, " unroll {unroll}").unwrap();
            }
            body(out, b, indent);
            if let Some(cb) = combine {
                out.push_str(" combine ");
                match &cb.kind {
                    CmdKind::Block(inner) => block(out, inner, indent),
                    _ => block(out, cb, indent),
                }
            }
        }
        CmdKind::While { cond, body: b } => {
            out.push_str("while (");
            expr(out, cond);
            out.push(')');
            body(out, b, indent);
        }
        CmdKind::If { cond, then, els } => {
            out.push_str("if (");
            expr(out, cond);
            out.push(')');
            body(out, then, indent);
            if let Some(e) = els {
                out.push_str(" else");
                body(out, e, indent);
            }
        }
        CmdKind::Assign { name, value } => {
            write!(out, "{name} := ").unwrap();
            expr(out, value);
        }
        CmdKind::Store { target, value } => {
            access(out, target);
            out.push_str(" := ");
            expr(out, value);
        }
        CmdKind::Reduce { op, target, value } => {
            match target {
                ReduceTarget::Var(v) => out.push_str(v),
                ReduceTarget::Access(a) => access(out, a),
            }
            write!(out, " {} ", op.symbol()).unwrap();
            expr(out, value);
        }
        CmdKind::Expr(e) => expr(out, e),
    }
}

fn view_target(out: &mut String, target: &str, args: &[Expr]) {
    out.push_str(target);
    for a in args {
        out.push_str("[by ");
        expr(out, a);
        out.push(']');
    }
}

/// Multi-name declarations, the only way an unordered group can appear in
/// single-statement position.
fn sugar(out: &mut String, cs: &[Cmd], indent: usize) {
    let mems: Option<Vec<(&String, &MemType)>> = cs
        .iter()
        .map(|c| match &c.kind {
            CmdKind::MemDecl { name, ty } => Some((name, ty)),
            _ => None,
        })
        .collect();
    if let Some(ms) = mems {
        if ms.iter().all(|(_, t)| *t == ms[0].1) {
            let names: Vec<&str> = ms.iter().map(|(n, _)| n.as_str()).collect();
            write!(out, "let {}: {}", names.join(", "), ms[0].1).unwrap();
            return;
        }
    }
    let views: Option<Vec<_>> = cs
        .iter()
        .map(|c| match &c.kind {
            CmdKind::View {
                name,
                kind,
                target,
                args,
            } => Some((name, *kind, target, args)),
            _ => None,
        })
        .collect();
    if let Some(vs) = views {
        if vs.iter().all(|v| v.1 == vs[0].1) {
            let names: Vec<&str> = vs.iter().map(|v| v.0.as_str()).collect();
            write!(out, "view {} = {} ", names.join(", "), vs[0].1.keyword()).unwrap();
            for (i, v) in vs.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                view_target(out, v.2, v.3);
            }
            return;
        }
    }
    out.push_str("{\n");
    for s in cs {
        line(out, s, indent + 1);
    }
    pad(out, indent);
    out.push('}');
}

fn access(out: &mut String, a: &Access) {
    out.push_str(&a.mem);
    if let Some(bs) = &a.banks {
        for b in bs {
            write!(out, "{{{b}}}").unwrap();
        }
    }
    for ix in &a.indices {
        out.push('[');
        expr(out, ix);
        out.push(']');
    }
}

fn prec(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Binary(op, _, _) => op.precedence(),
        _ => u8::MAX,
    }
}

fn expr(out: &mut String, e: &Expr) {
    match &e.kind {
        ExprKind::Int(v) => write!(out, "{v}").unwrap(),
        ExprKind::Float(v) => write!(out, "{v:?}").unwrap(),
        ExprKind::Bool(b) => write!(out, "{b}").unwrap(),
        ExprKind::Var(v) => out.push_str(v),
        ExprKind::Access(a) => access(out, a),
        ExprKind::Binary(op, l, r) => {
            let p = op.precedence();
            let lp = prec(l) < p;
            let rp = prec(r) <= p;
            if lp {
                out.push('(');
            }
            expr(out, l);
            if lp {
                out.push(')');
            }
            write!(out, " {} ", op.symbol()).unwrap();
            if rp {
                out.push('(');
            }
            expr(out, r);
            if rp {
                out.push(')');
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_program;

    fn roundtrip(src: &str) -> String {
        let p = parse_program(src).unwrap();
        let s = pretty_print(&p);
        let q = parse_program(&s).unwrap_or_else(|e| panic!("{e}\n{s}"));
        assert_eq!(p, q, "{s}");
        s
    }

    #[test]
    fn simple_let() {
        assert_eq!(roundtrip("let x = 0;"), "let x = 0;\n");
    }

    #[test]
    fn ordered_block_keeps_dashes() {
        let s = roundtrip(
            "let A: float[10];  let B: float[10];\n{\n  let x = A[0] + 1\n  ---\n  B[1] := A[1] + x\n};\nlet y = B[0];",
        );
        assert!(s.contains("---"));
    }

    #[test]
    fn parenthesization() {
        let s = roundtrip("let x = (a - b) - (c - d) * (e + f);");
        assert_eq!(s, "let x = a - b - (c - d) * (e + f);\n");
    }

    #[test]
    fn sugar_in_body_position() {
        roundtrip("for (let i = 0..2) let A, B: float[4];");
        roundtrip("if (c) view a, b = shrink A[by 2], B[by 2] else x := 1;");
    }

    #[test]
    fn assorted() {
        roundtrip("for (let i = 0..10) unroll 2 { let v = A[i] * B[i]; } combine { dot += v; }");
        roundtrip("while (i < 3) { i := i + 1 } if (b) {} else { A{0}{1}[0][i] := 1.5 }");
        roundtrip("view s = suffix A[by 2 * i]; s[1]; --- --- let y: bit<8> = 3");
    }
}
