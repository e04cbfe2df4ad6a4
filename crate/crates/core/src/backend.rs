//! C++ emission for HLS toolchains.
//!
//! Memories become array parameters of one kernel function with partition
//! and resource pragmas. Loops stay loops, carrying an unroll pragma when
//! unrolled. Views disappear: their accesses become index arithmetic on the
//! underlying array.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::ast::*;
use crate::diag::Diagnostic;
use crate::typecheck::{check_program, Report};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub factor: u64,
    pub dim: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemPlan {
    pub name: String,
    /// Absent for single-ported memories with no partitioned dimension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resource: Option<String>,
    pub partitions: Vec<Partition>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopPlan {
    pub iter: String,
    pub unroll: u64,
}

/// Pragmas and names the emitter uses, in emission order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmitPlan {
    pub memories: Vec<MemPlan>,
    pub loops: Vec<LoopPlan>,
    /// Surface name to emitted identifier.
    pub names: BTreeMap<String, String>,
}

const CXX_KEYWORDS: &[&str] = &[
    "auto", "break", "case", "char", "class", "const", "continue", "default", "delete", "do",
    "double", "else", "enum", "extern", "float", "for", "goto", "if", "inline", "int", "long",
    "new", "operator", "private", "protected", "public", "register", "return", "short",
    "signed", "sizeof", "static", "struct", "switch", "template", "this", "throw", "try",
    "typedef", "union", "unsigned", "void", "volatile", "while", "bool", "true", "false",
    "kernel", "namespace", "using", "virtual", "friend", "catch", "mutable", "explicit",
];

fn ident(x: &str) -> String {
    if CXX_KEYWORDS.contains(&x) {
        format!("{x}_")
    } else {
        x.to_string()
    }
}

fn cxx_type(t: ScalarType) -> String {
    match t {
        ScalarType::Bit(n) => format!("ap_int<{n}>"),
        ScalarType::Float => "float".into(),
        ScalarType::Bool => "bool".into(),
    }
}

fn resource(ports: u64) -> &'static str {
    if ports == 1 {
        "RAM_1P_BRAM"
    } else {
        "RAM_2P_BRAM"
    }
}

#[derive(Clone)]
struct ViewDef {
    kind: ViewKind,
    target: String,
    args: Vec<Expr>,
}

struct Emitter<'a> {
    report: &'a Report,
    mems: BTreeMap<String, MemType>,
    views: Vec<BTreeMap<String, ViewDef>>,
    plan: EmitPlan,
    out: String,
}

/// Emits the kernel for an accepted program.
pub fn emit_cxx(p: &Program) -> Result<String, Vec<Diagnostic>> {
    Ok(run(p)?.out)
}

pub fn emit_plan(p: &Program) -> Result<EmitPlan, Vec<Diagnostic>> {
    Ok(run(p)?.plan)
}

fn run(p: &Program) -> Result<Emitted, Vec<Diagnostic>> {
    let report = check_program(p)?;
    let mut em = Emitter {
        report: &report,
        mems: BTreeMap::new(),
        views: vec![BTreeMap::new()],
        plan: EmitPlan::default(),
        out: String::new(),
    };
    em.program(p);
    Ok(Emitted {
        out: em.out,
        plan: em.plan,
    })
}

struct Emitted {
    out: String,
    plan: EmitPlan,
}

fn pad(out: &mut String, indent: usize) {
    for _ in 0..indent {
        out.push_str("  ");
    }
}

fn lit(v: i64) -> Expr {
    Expr::int(v)
}

fn add(a: Expr, b: Expr) -> Expr {
    match (&a.kind, &b.kind) {
        (_, ExprKind::Int(0)) => a,
        (ExprKind::Int(0), _) => b,
        _ => Expr::binary(BinOp::Add, a, b),
    }
}

fn mul(k: i64, e: Expr) -> Expr {
    match &e.kind {
        _ if k == 1 => e,
        ExprKind::Int(v) => lit(k * v),
        _ => Expr::binary(BinOp::Mul, lit(k), e),
    }
}

impl Emitter<'_> {
    fn program(&mut self, p: &Program) {
        let decls = p.memories();
        let mut params = Vec::new();
        for (name, ty, _) in &decls {
            let id = ident(name);
            self.plan.names.insert(name.to_string(), id.clone());
            self.mems.insert(name.to_string(), (*ty).clone());
            let mut s = format!("{} {id}", cxx_type(ty.elem));
            for d in &ty.dims {
                write!(s, "[{}]", d.size).unwrap();
            }
            params.push(s);
        }
        writeln!(self.out, "#include <ap_int.h>\n").unwrap();
        writeln!(self.out, "void kernel({}) {{", params.join(", ")).unwrap();
        for (name, ty, _) in &decls {
            let id = ident(name);
            let res = (ty.ports > 1 || ty.dims.iter().any(|d| d.banks > 1)).then(|| resource(ty.ports));
            if let Some(res) = res {
                writeln!(self.out, "#pragma HLS resource variable={id} core={res}").unwrap();
            }
            let mut parts = Vec::new();
            for (d, spec) in ty.dims.iter().enumerate() {
                if spec.banks > 1 {
                    writeln!(
                        self.out,
                        "#pragma HLS ARRAY_PARTITION variable={id} cyclic factor={} dim={}",
                        spec.banks,
                        d + 1
                    )
                    .unwrap();
                    parts.push(Partition {
                        factor: spec.banks,
                        dim: d + 1,
                    });
                }
            }
            self.plan.memories.push(MemPlan {
                name: id,
                resource: res.map(str::to_string),
                partitions: parts,
            });
        }
        if !decls.is_empty() {
            self.out.push('\n');
        }
        self.group(&p.body, 1);
        self.out.push_str("}\n");
    }

    fn group(&mut self, c: &Cmd, indent: usize) {
        match &c.kind {
            CmdKind::Skip | CmdKind::MemDecl { .. } => {}
            CmdKind::Ordered(cs) | CmdKind::Unordered(cs) => {
                for ch in cs {
                    self.group(ch, indent);
                }
            }
            _ => self.stmt(c, indent),
        }
    }

    fn block(&mut self, c: &Cmd, indent: usize) {
        self.views.push(BTreeMap::new());
        match &c.kind {
            CmdKind::Block(inner) => self.group(inner, indent),
            _ => self.group(c, indent),
        }
        self.views.pop();
    }

    fn stmt(&mut self, c: &Cmd, indent: usize) {
        match &c.kind {
            CmdKind::Block(inner) => {
                pad(&mut self.out, indent);
                self.out.push_str("{\n");
                self.block(inner, indent + 1);
                pad(&mut self.out, indent);
                self.out.push_str("}\n");
            }
            CmdKind::Let { name, init, .. } => {
                let t = self
                    .report
                    .let_types
                    .get(&c.span.start)
                    .copied()
                    .unwrap_or(ScalarType::Bit(32));
                let e = self.expr(init);
                pad(&mut self.out, indent);
                writeln!(self.out, "{} {} = {e};", cxx_type(t), ident(name)).unwrap();
            }
            CmdKind::View {
                name,
                kind,
                target,
                args,
            } => {
                self.views.last_mut().unwrap().insert(
                    name.clone(),
                    ViewDef {
                        kind: *kind,
                        target: target.clone(),
                        args: args.clone(),
                    },
                );
            }
            CmdKind::For {
                iter,
                lo,
                hi,
                unroll,
                body,
                combine,
            } => {
                let it = ident(iter);
                self.plan.loops.push(LoopPlan {
                    iter: it.clone(),
                    unroll: *unroll,
                });
                pad(&mut self.out, indent);
                writeln!(self.out, "for (int {it} = {lo}; {it} < {hi}; {it}++) {{").unwrap();
                if *unroll > 1 {
                    pad(&mut self.out, indent + 1);
                    writeln!(self.out, "#pragma HLS UNROLL factor={unroll} skip_exit_check")
                        .unwrap();
                }
                self.views.push(BTreeMap::new());
                match &body.kind {
                    CmdKind::Block(inner) => self.group(inner, indent + 1),
                    _ => self.group(body, indent + 1),
                }
                if let Some(cb) = combine {
                    self.block(cb, indent + 1);
                }
                self.views.pop();
                pad(&mut self.out, indent);
                self.out.push_str("}\n");
            }
            CmdKind::While { cond, body } => {
                let e = self.expr(cond);
                pad(&mut self.out, indent);
                writeln!(self.out, "while ({e}) {{").unwrap();
                self.block(body, indent + 1);
                pad(&mut self.out, indent);
                self.out.push_str("}\n");
            }
            CmdKind::If { cond, then, els } => {
                let e = self.expr(cond);
                pad(&mut self.out, indent);
                writeln!(self.out, "if ({e}) {{").unwrap();
                self.block(then, indent + 1);
                if let Some(els) = els {
                    pad(&mut self.out, indent);
                    self.out.push_str("} else {\n");
                    self.block(els, indent + 1);
                }
                pad(&mut self.out, indent);
                self.out.push_str("}\n");
            }
            CmdKind::Assign { name, value } => {
                let e = self.expr(value);
                pad(&mut self.out, indent);
                writeln!(self.out, "{} = {e};", ident(name)).unwrap();
            }
            CmdKind::Store { target, value } => {
                let a = self.access(target);
                let e = self.expr(value);
                pad(&mut self.out, indent);
                writeln!(self.out, "{a} = {e};").unwrap();
            }
            CmdKind::Reduce { op, target, value } => {
                let t = match target {
                    ReduceTarget::Var(v) => ident(v),
                    ReduceTarget::Access(a) => self.access(a),
                };
                let e = self.expr(value);
                pad(&mut self.out, indent);
                writeln!(self.out, "{t} {} {e};", op.symbol()).unwrap();
            }
            CmdKind::Expr(e) => {
                let e = self.expr(e);
                pad(&mut self.out, indent);
                writeln!(self.out, "{e};").unwrap();
            }
            CmdKind::Skip
            | CmdKind::MemDecl { .. }
            | CmdKind::Ordered(_)
            | CmdKind::Unordered(_) => self.group(c, indent),
        }
    }

    fn view(&self, name: &str) -> Option<ViewDef> {
        self.views.iter().rev().find_map(|s| s.get(name)).cloned()
    }

    /// Root memory and logical root indices of an access.
    fn lower(&self, a: &Access) -> (String, Vec<Expr>) {
        let mut name = a.mem.clone();
        let mut idx: Vec<Expr> = a.indices.clone();
        if let Some(bs) = &a.banks {
            let dims = self.dims_of(&name);
            let banks: Vec<u64> = if bs.len() == dims.len() {
                bs.clone()
            } else {
                crate::layout::BankLayout::new(dims.clone()).unflatten_bank(bs[0])
            };
            if idx.len() != dims.len() {
                let layout = crate::layout::BankLayout::new(dims.clone());
                let flat = match &idx[0].kind {
                    ExprKind::Int(v) => *v as u64,
                    _ => 0,
                };
                idx = layout
                    .unflatten_offset(flat)
                    .into_iter()
                    .map(|o| lit(o as i64))
                    .collect();
            }
            idx = idx
                .into_iter()
                .zip(dims.iter().zip(&banks))
                .map(|(o, (d, b))| add(mul(d.banks as i64, o), lit(*b as i64)))
                .collect();
        }
        while let Some(v) = self.view(&name) {
            idx = match v.kind {
                ViewKind::Shrink => idx,
                ViewKind::Suffix | ViewKind::Shift => v
                    .args
                    .iter()
                    .zip(idx)
                    .map(|(o, i)| add(o.clone(), i))
                    .collect(),
                ViewKind::Split => v
                    .args
                    .iter()
                    .enumerate()
                    .map(|(d, w)| {
                        let w = crate::typecheck::const_value(w).unwrap_or(1);
                        add(mul(w, idx[2 * d + 1].clone()), idx[2 * d].clone())
                    })
                    .collect(),
            };
            name = v.target;
        }
        (name, idx)
    }

    fn dims_of(&self, name: &str) -> Vec<BankSpec> {
        match self.view(name) {
            None => self.mems[name].dims.clone(),
            Some(v) => {
                let parent = self.dims_of(&v.target);
                match v.kind {
                    ViewKind::Suffix | ViewKind::Shift => parent,
                    ViewKind::Shrink => parent
                        .iter()
                        .zip(&v.args)
                        .map(|(d, f)| {
                            let f = crate::typecheck::const_value(f).unwrap_or(1) as u64;
                            BankSpec::new(d.size, d.banks / f)
                        })
                        .collect(),
                    ViewKind::Split => parent
                        .iter()
                        .zip(&v.args)
                        .flat_map(|(d, w)| {
                            let w = crate::typecheck::const_value(w).unwrap_or(1) as u64;
                            [BankSpec::new(w, w), BankSpec::new(d.size / w, d.banks / w)]
                        })
                        .collect(),
                }
            }
        }
    }

    fn access(&self, a: &Access) -> String {
        let (root, idx) = self.lower(a);
        let mut s = ident(&root);
        for i in &idx {
            write!(s, "[{}]", self.expr(i)).unwrap();
        }
        s
    }

    fn expr(&self, e: &Expr) -> String {
        let mut s = String::new();
        self.expr_into(&mut s, e);
        s
    }

    fn expr_into(&self, out: &mut String, e: &Expr) {
        match &e.kind {
            ExprKind::Int(v) => write!(out, "{v}").unwrap(),
            ExprKind::Float(v) => write!(out, "{v:?}").unwrap(),
            ExprKind::Bool(b) => write!(out, "{b}").unwrap(),
            ExprKind::Var(v) => out.push_str(&ident(v)),
            ExprKind::Access(a) => out.push_str(&self.access(a)),
            ExprKind::Binary(op, l, r) => {
                let p = op.precedence();
                let lp = prec(l) < p;
                let rp = prec(r) <= p;
                paren(out, lp, |o| self.expr_into(o, l));
                write!(out, " {} ", op.symbol()).unwrap();
                paren(out, rp, |o| self.expr_into(o, r));
            }
        }
    }
}

fn prec(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Binary(op, _, _) => op.precedence(),
        _ => u8::MAX,
    }
}

fn paren(out: &mut String, on: bool, f: impl FnOnce(&mut String)) {
    if on {
        out.push('(');
    }
    f(out);
    if on {
        out.push(')');
    }
}

/// Recovers the plan from emitted text.
pub fn plan_from_cxx(text: &str) -> EmitPlan {
    let mut plan = EmitPlan::default();
    for line in text.lines() {
        let t = line.trim();
        if let Some(rest) = t.strip_prefix("#pragma HLS resource variable=") {
            let (name, core) = rest.split_once(" core=").unwrap_or((rest, ""));
            if let Some(m) = plan.memories.iter_mut().find(|m| m.name == name) {
                m.resource = Some(core.to_string());
            }
        } else if let Some(rest) = t.strip_prefix("#pragma HLS ARRAY_PARTITION variable=") {
            let mut it = rest.split_whitespace();
            let name = it.next().unwrap_or_default();
            let field = |k: &str| {
                rest.split_whitespace()
                    .find_map(|w| w.strip_prefix(k))
                    .and_then(|v| v.parse().ok())
                    .unwrap_or(0)
            };
            let p = Partition {
                factor: field("factor="),
                dim: field("dim=") as usize,
            };
            if let Some(m) = plan.memories.iter_mut().find(|m| m.name == name) {
                m.partitions.push(p);
            }
        } else if let Some(rest) = t.strip_prefix("for (int ") {
            let iter = rest.split_whitespace().next().unwrap_or_default();
            plan.loops.push(LoopPlan {
                iter: iter.to_string(),
                unroll: 1,
            });
        } else if let Some(rest) = t.strip_prefix("#pragma HLS UNROLL factor=") {
            let k = rest.split_whitespace().next().and_then(|v| v.parse().ok());
            if let (Some(l), Some(k)) = (plan.loops.last_mut(), k) {
                l.unroll = k;
            }
        } else if let Some(rest) = t.strip_prefix("void kernel(") {
            for param in rest.trim_end_matches(") {").split(", ") {
                let name = param
                    .split_whitespace()
                    .last()
                    .unwrap_or_default()
                    .split('[')
                    .next()
                    .unwrap_or_default();
                if !name.is_empty() {
                    plan.memories.push(MemPlan {
                        name: name.to_string(),
                        resource: None,
                        partitions: Vec::new(),
                    });
                    let surface = name.strip_suffix('_').filter(|s| CXX_KEYWORDS.contains(s));
                    plan.names
                        .insert(surface.unwrap_or(name).to_string(), name.to_string());
                }
            }
        }
    }
    plan
}
