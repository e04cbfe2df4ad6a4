//! The time-sensitive affine type checker.
//!
//! Checking walks the program once. When asked to, the same walk emits the
//! core program, so every capability the checker grants corresponds to
//! exactly one emitted access.

mod access;
mod expr;

pub(crate) mod expr_support {
    pub(crate) use super::expr::form_to_cexpr;
}
pub mod state;
mod walk;

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::ast::{BankSpec, MemType, Program, ScalarType, ViewKind};
use crate::calculus::CCmd;
use crate::diag::{Code, Diagnostic, Span};
use crate::linear::LinearForm;
use crate::view::Xform;

use state::{Effects, Obj, State};

/// One unroll copy: an entry per fused iterator in scope.
pub type Key = Vec<u32>;

#[derive(Clone, Copy, Debug, Default)]
pub struct Options {
    /// Record resource errors instead of stopping at the first one.
    pub force: bool,
    /// Build the core program.
    pub emit: bool,
    /// Record every granted access in the report.
    pub trace: bool,
}

#[derive(Clone, Debug)]
pub(crate) enum IterB {
    /// Index into the fused iterator context.
    Ctx(usize),
    Plain { counter: Option<String>, lo: i64 },
}

#[derive(Clone, Debug)]
pub(crate) enum Binding {
    Scalar {
        ty: ScalarType,
        depth: usize,
        names: BTreeMap<Key, String>,
        level: usize,
    },
    Iter(IterB),
    Mem(String),
    View {
        depth: usize,
        insts: BTreeMap<Key, usize>,
    },
    Register {
        ty: ScalarType,
        names: BTreeMap<Key, String>,
        k: u64,
        fused: bool,
    },
}

#[derive(Clone, Debug)]
pub(crate) struct CtxIter {
    pub k: u64,
    pub lo: i64,
    pub counter: Option<String>,
}

#[derive(Clone, Debug)]
pub struct ViewInst {
    pub name: String,
    pub surface: String,
    pub kind: ViewKind,
    pub parent: Obj,
    pub root: String,
    pub dims: Vec<BankSpec>,
    pub xform: Xform,
}

/// An access whose bank memory is chosen once its bank is known.
#[derive(Clone, Debug)]
pub struct Pending {
    pub root: String,
    pub forms: Vec<LinearForm>,
    /// Port to use for each root bank the access may touch.
    pub ports: BTreeMap<u64, u64>,
}

/// Hands out unique core variable names.
#[derive(Clone, Debug, Default)]
pub struct NameGen {
    taken: BTreeSet<String>,
}

impl NameGen {
    pub fn fresh(&mut self, base: &str) -> String {
        if self.taken.insert(base.to_string()) {
            return base.to_string();
        }
        let mut n = 1;
        loop {
            let cand = format!("{base}_{n}");
            if self.taken.insert(cand.clone()) {
                return cand;
            }
            n += 1;
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MemReport {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: String,
    pub ports: u64,
    pub dims: Vec<BankSpec>,
    pub flat_banks: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ViewReport {
    pub name: String,
    pub kind: &'static str,
    pub target: String,
    #[serde(rename = "type")]
    pub ty: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct LoopReport {
    pub iter: String,
    pub lo: i64,
    pub hi: i64,
    pub unroll: u64,
    pub trips: i64,
    pub line: u32,
}

#[derive(Clone, Debug, Serialize)]
pub struct BankUsage {
    pub memory: String,
    pub bank: u64,
    /// Most credits used on this bank in any one time step.
    pub peak: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AccessRecord {
    pub path: String,
    pub root: String,
    pub key: Key,
    pub root_forms: Vec<LinearForm>,
    /// Banks of the credit domain this access may touch.
    pub banks: Vec<u64>,
    pub write: bool,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Report {
    pub memories: Vec<MemReport>,
    pub views: Vec<ViewReport>,
    pub loops: Vec<LoopReport>,
    pub bank_usage: Vec<BankUsage>,
    /// Type of every `let`, keyed by the statement's byte offset.
    #[serde(skip)]
    pub let_types: BTreeMap<usize, ScalarType>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<AccessRecord>,
}

/// Index type of an unrolled iterator: copies `lo..hi` of each logical
/// iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct IndexType {
    pub lo: u64,
    pub hi: u64,
}

pub fn iterator_index_type(lo: i64, hi: i64, unroll: u64) -> Result<IndexType, Diagnostic> {
    if hi <= lo {
        return Err(Diagnostic::error(
            Code::Type,
            Span::default(),
            format!("empty iteration range {lo}..{hi}"),
        ));
    }
    if unroll == 0 || (hi - lo) as u64 % unroll != 0 {
        return Err(Diagnostic::error(
            Code::Divides,
            Span::default(),
            format!("unroll factor {unroll} does not divide the trip count {}", hi - lo),
        ));
    }
    Ok(IndexType { lo: 0, hi: unroll })
}

/// Shape of a logical index, as far as banking is concerned.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IndexForm {
    Lit(u64),
    Iter(IndexType),
    Scalar,
    Compound,
}

/// Banks an index of the given form may touch in a dimension.
pub fn banks_of_access(index: IndexForm, dim: BankSpec) -> Result<Vec<u64>, Code> {
    match index {
        IndexForm::Lit(n) => Ok(vec![n % dim.banks]),
        IndexForm::Iter(t) => {
            let u = t.hi - t.lo;
            if u > 1 && u != dim.banks {
                return Err(Code::Banks);
            }
            if u == 1 {
                return Ok((0..dim.banks).collect());
            }
            Ok((t.lo..t.hi).collect())
        }
        IndexForm::Scalar if dim.banks == 1 => Ok(vec![0]),
        IndexForm::Scalar | IndexForm::Compound => Err(Code::Index),
    }
}

pub struct Checker {
    pub(crate) opts: Options,
    pub(crate) roots: BTreeMap<String, MemType>,
    pub(crate) root_order: Vec<String>,
    pub(crate) views: Vec<ViewInst>,
    pub(crate) scopes: Vec<BTreeMap<String, Binding>>,
    pub(crate) ctx: Vec<CtxIter>,
    pub(crate) barriers: Vec<usize>,
    pub(crate) names: NameGen,
    pub(crate) st: State,
    pub(crate) effects: Vec<Effects>,
    pub(crate) soft: Vec<Diagnostic>,
    pub(crate) report: Report,
    pub(crate) peaks: BTreeMap<(String, u64), u32>,
    pub(crate) pending: Vec<Pending>,
    pub(crate) pre: Vec<CCmd>,
    /// Inside a reducer's right-hand side: which copy of the registers.
    pub(crate) reg_copy: Option<u32>,
    pub(crate) allow_regs: bool,
}

/// Result of a successful check.
pub struct Checked {
    pub body: CCmd,
    pub report: Report,
    /// Resource errors recorded in force mode.
    pub soft: Vec<Diagnostic>,
    pub roots: Vec<(String, MemType)>,
}

impl Checker {
    pub fn new(opts: Options) -> Self {
        Checker {
            opts,
            roots: BTreeMap::new(),
            root_order: Vec::new(),
            views: Vec::new(),
            scopes: vec![BTreeMap::new()],
            ctx: Vec::new(),
            barriers: Vec::new(),
            names: NameGen::default(),
            st: State::default(),
            effects: Vec::new(),
            soft: Vec::new(),
            report: Report::default(),
            peaks: BTreeMap::new(),
            pending: Vec::new(),
            pre: Vec::new(),
            reg_copy: None,
            allow_regs: false,
        }
    }

    pub fn run(mut self, p: &Program) -> Result<Checked, Diagnostic> {
        self.hoist(p)?;
        let body = self.cmd(&p.body, &[Vec::new()])?;
        self.report.bank_usage = self
            .peaks
            .iter()
            .map(|((m, b), p)| BankUsage {
                memory: m.clone(),
                bank: *b,
                peak: *p,
            })
            .collect();
        let roots = self
            .root_order
            .iter()
            .map(|n| (n.clone(), self.roots[n].clone()))
            .collect();
        Ok(Checked {
            body,
            report: self.report,
            soft: self.soft,
            roots,
        })
    }

    fn hoist(&mut self, p: &Program) -> Result<(), Diagnostic> {
        for (name, ty, span) in p.memories() {
            if self.roots.contains_key(name) {
                return Err(err(Code::Type, span, format!("memory `{name}` is declared twice")));
            }
            if ty.ports == 0 {
                return Err(err(Code::Type, span, format!("memory `{name}` needs at least one port")));
            }
            for d in &ty.dims {
                if d.size == 0 {
                    return Err(err(Code::Type, span, format!("memory `{name}` has an empty dimension")));
                }
                if d.banks == 0 || d.size % d.banks != 0 {
                    return Err(err(
                        Code::Divides,
                        span,
                        format!(
                            "banking factor {} does not divide size {} of `{name}`",
                            d.banks, d.size
                        ),
                    ));
                }
            }
            self.roots.insert(name.to_string(), ty.clone());
            self.root_order.push(name.to_string());
            self.scopes[0].insert(name.to_string(), Binding::Mem(name.to_string()));
            self.report.memories.push(MemReport {
                name: name.to_string(),
                ty: format!("mem {ty}"),
                ports: ty.ports,
                dims: ty.dims.clone(),
                flat_banks: ty.flat_banks(),
            });
        }
        Ok(())
    }

    pub(crate) fn lookup(&self, x: &str) -> Option<&Binding> {
        self.scopes.iter().rev().find_map(|s| s.get(x))
    }

    pub(crate) fn push_scope(&mut self) {
        self.scopes.push(BTreeMap::new());
    }

    pub(crate) fn pop_scope(&mut self) -> BTreeMap<String, Binding> {
        self.scopes.pop().unwrap_or_default()
    }

    /// Binds a new name in the innermost scope; memories and names already
    /// bound in this scope cannot be rebound.
    pub(crate) fn bind(&mut self, x: &str, b: Binding, span: Span) -> Result<(), Diagnostic> {
        if self.roots.contains_key(x) {
            return Err(err(Code::Type, span, format!("`{x}` is a memory and cannot be rebound")));
        }
        let top = self.scopes.last_mut().unwrap();
        if top.contains_key(x) {
            return Err(err(Code::Type, span, format!("`{x}` is already bound in this scope")));
        }
        top.insert(x.to_string(), b);
        Ok(())
    }

    /// Records a resource error; fatal unless forcing.
    pub(crate) fn soft(&mut self, d: Diagnostic) -> Result<(), Diagnostic> {
        if self.opts.force {
            self.soft.push(d);
            Ok(())
        } else {
            Err(d)
        }
    }

    /// Marks `v` as assigned: capabilities whose index mentions it die.
    pub(crate) fn note_var(&mut self, v: &str) {
        let mut e = Effects::default();
        e.vars.insert(v.to_string());
        self.st.invalidate(&e);
        for f in &mut self.effects {
            f.vars.insert(v.to_string());
        }
    }

    pub(crate) fn note_root(&mut self, r: &str) {
        let mut e = Effects::default();
        e.roots.insert(r.to_string());
        self.st.invalidate(&e);
        for f in &mut self.effects {
            f.roots.insert(r.to_string());
        }
    }

    /// Core name of a per-copy value: `x__u` for each unrolled iterator.
    pub(crate) fn copy_name(&mut self, base: &str, key: &[u32]) -> String {
        let mut s = base.to_string();
        for (it, u) in self.ctx.iter().zip(key) {
            if it.k > 1 {
                s.push_str(&format!("__{u}"));
            }
        }
        self.names.fresh(&s)
    }

    pub(crate) fn obj_dims(&self, o: &Obj) -> &[BankSpec] {
        match o {
            Obj::Root(r) => &self.roots[r].dims,
            Obj::View(v) => &self.views[*v].dims,
        }
    }

    pub(crate) fn obj_root(&self, o: &Obj) -> String {
        match o {
            Obj::Root(r) => r.clone(),
            Obj::View(v) => self.views[*v].root.clone(),
        }
    }

    pub(crate) fn obj_name(&self, o: &Obj) -> String {
        match o {
            Obj::Root(r) => r.clone(),
            Obj::View(v) => self.views[*v].name.clone(),
        }
    }
}

pub(crate) fn err(code: Code, span: Span, msg: impl Into<String>) -> Diagnostic {
    Diagnostic::error(code, span, msg)
}

/// Checks `p`, stopping at the first error.
pub fn check_program(p: &Program) -> Result<Report, Vec<Diagnostic>> {
    Checker::new(Options::default())
        .run(p)
        .map(|c| c.report)
        .map_err(|d| vec![d])
}

/// Checks with explicit options.
pub fn check_with(p: &Program, opts: Options) -> Result<Checked, Diagnostic> {
    Checker::new(opts).run(p)
}

/// Memory name standing in for an access until its bank is known.
pub fn placeholder(id: usize) -> String {
    format!("\0{id}")
}

/// Value of an integer constant expression such as `4 / 2`.
pub fn const_value(e: &crate::ast::Expr) -> Option<i64> {
    expr::const_fold(e)
}
