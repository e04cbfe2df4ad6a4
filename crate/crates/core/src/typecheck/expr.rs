//! Expressions, index forms and view declarations.

use std::fmt;

use crate::ast::{BinOp, Expr, ExprKind, ScalarType, ViewKind};
use crate::calculus::{binop_type, CExpr, Value};
use crate::diag::{Code, Diagnostic, Span};
use crate::linear::LinearForm;
use crate::view::{derive, ViewArg};

use super::state::Obj;
use super::{err, Binding, Checker, IterB, Key, ViewInst};

/// Type of a surface expression. Integer literals take whatever numeric
/// type their context asks for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum ETy {
    Int,
    S(ScalarType),
}

impl ETy {
    pub fn fits(self, t: ScalarType) -> bool {
        match self {
            ETy::Int => matches!(t, ScalarType::Bit(_) | ScalarType::Float),
            ETy::S(s) => s == t,
        }
    }

    pub fn resolve(self) -> ScalarType {
        match self {
            ETy::Int => ScalarType::Bit(32),
            ETy::S(t) => t,
        }
    }
}

impl fmt::Display for ETy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ETy::Int => f.write_str("an integer literal"),
            ETy::S(t) => write!(f, "{t}"),
        }
    }
}

const B32: ScalarType = ScalarType::Bit(32);

/// Folds integer literal arithmetic.
pub(crate) fn const_fold(e: &Expr) -> Option<i64> {
    match &e.kind {
        ExprKind::Int(v) => Some(*v),
        ExprKind::Binary(op, l, r) => {
            let (a, b) = (const_fold(l)?, const_fold(r)?);
            match op {
                BinOp::Add => a.checked_add(b),
                BinOp::Sub => a.checked_sub(b),
                BinOp::Mul => a.checked_mul(b),
                BinOp::Div => a.checked_div(b),
                BinOp::Rem => a.checked_rem(b),
                _ => None,
            }
        }
        _ => None,
    }
}

/// Core expression computing a linear form over bit<32> atoms.
pub(crate) fn form_to_cexpr(f: &LinearForm) -> CExpr {
    let mut acc: Option<CExpr> = None;
    for (atom, &c) in &f.terms {
        let t = if c == 1 {
            CExpr::var(atom)
        } else {
            CExpr::bop(BinOp::Mul, CExpr::b32(c), CExpr::var(atom))
        };
        acc = Some(match acc {
            None => t,
            Some(a) => CExpr::bop(BinOp::Add, a, t),
        });
    }
    match acc {
        None => CExpr::b32(f.constant),
        Some(a) if f.constant > 0 => CExpr::bop(BinOp::Add, a, CExpr::b32(f.constant)),
        Some(a) if f.constant < 0 => CExpr::bop(BinOp::Sub, a, CExpr::b32(-f.constant)),
        Some(a) => a,
    }
}

impl Checker {
    pub(crate) fn elem_of(&self, mem: &str, span: Span) -> Result<ScalarType, Diagnostic> {
        match self.lookup(mem) {
            Some(Binding::Mem(r)) => Ok(self.roots[r].elem),
            Some(Binding::View { insts, .. }) => {
                let id = *insts.values().next().expect("view has an instance");
                Ok(self.roots[&self.views[id].root].elem)
            }
            Some(_) => Err(err(Code::Type, span, format!("`{mem}` is not a memory"))),
            None => Err(err(Code::Type, span, format!("unknown memory `{mem}`"))),
        }
    }

    pub(crate) fn lookup_obj(&self, mem: &str, key: &Key, span: Span) -> Result<Obj, Diagnostic> {
        match self.lookup(mem) {
            Some(Binding::Mem(r)) => Ok(Obj::Root(r.clone())),
            Some(Binding::View { depth, insts }) => Ok(Obj::View(insts[&key[..*depth]])),
            Some(_) => Err(err(Code::Type, span, format!("`{mem}` is not a memory"))),
            None => Err(err(Code::Type, span, format!("unknown memory `{mem}`"))),
        }
    }

    pub(crate) fn infer(&self, e: &Expr) -> Result<ETy, Diagnostic> {
        match &e.kind {
            ExprKind::Int(_) => Ok(ETy::Int),
            ExprKind::Float(_) => Ok(ETy::S(ScalarType::Float)),
            ExprKind::Bool(_) => Ok(ETy::S(ScalarType::Bool)),
            ExprKind::Var(x) => match self.lookup(x) {
                Some(Binding::Scalar { ty, .. }) => Ok(ETy::S(*ty)),
                Some(Binding::Iter(_)) => Ok(ETy::S(B32)),
                Some(Binding::Register { ty, .. }) if self.allow_regs => Ok(ETy::S(*ty)),
                Some(Binding::Register { .. }) => Err(err(
                    Code::Type,
                    e.span,
                    format!("combine register `{x}` can only be used by a reducer"),
                )),
                Some(Binding::Mem(_)) | Some(Binding::View { .. }) => Err(err(
                    Code::Type,
                    e.span,
                    format!("memory `{x}` cannot be used as a value"),
                )),
                None => Err(err(Code::Type, e.span, format!("unbound variable `{x}`"))),
            },
            ExprKind::Binary(op, l, r) => {
                let (a, b) = (self.infer(l)?, self.infer(r)?);
                let operand = match (a, b) {
                    (ETy::Int, ETy::Int) => None,
                    (ETy::Int, ETy::S(t)) | (ETy::S(t), ETy::Int) => {
                        if !ETy::Int.fits(t) {
                            return Err(mismatch(*op, a, b, e.span));
                        }
                        Some(t)
                    }
                    (ETy::S(s), ETy::S(t)) if s == t => Some(t),
                    _ => return Err(mismatch(*op, a, b, e.span)),
                };
                match operand {
                    None if op.is_logic() => Err(mismatch(*op, a, b, e.span)),
                    None if op.is_compare() => Ok(ETy::S(ScalarType::Bool)),
                    None => Ok(ETy::Int),
                    Some(t) => binop_type(*op, t)
                        .map(ETy::S)
                        .ok_or_else(|| mismatch(*op, a, b, e.span)),
                }
            }
            ExprKind::Access(a) => {
                let t = self.elem_of(&a.mem, a.span)?;
                Ok(ETy::S(t))
            }
        }
    }

    /// Emits `e` for one copy, hoisting memory reads into `pre`. `lit` is
    /// the type bare integer literals take.
    pub(crate) fn emit_expr(
        &mut self,
        e: &Expr,
        key: &Key,
        lit: ScalarType,
    ) -> Result<CExpr, Diagnostic> {
        match &e.kind {
            ExprKind::Int(v) => Ok(CExpr::Val(match lit {
                ScalarType::Float => Value::Float(*v as f64),
                ScalarType::Bit(n) => Value::bit(n, *v),
                ScalarType::Bool => Value::b32(*v),
            })),
            ExprKind::Float(f) => Ok(CExpr::Val(Value::Float(*f))),
            ExprKind::Bool(b) => Ok(CExpr::Val(Value::Bool(*b))),
            ExprKind::Var(x) => match self.lookup(x).cloned() {
                Some(Binding::Scalar { depth, names, .. }) => {
                    Ok(CExpr::var(&names[&key[..depth]]))
                }
                Some(Binding::Iter(b)) => Ok(form_to_cexpr(&self.iter_form(&b, key))),
                Some(Binding::Register { names, fused, .. }) => {
                    let Some(u) = self.reg_copy else {
                        return Err(err(
                            Code::Type,
                            e.span,
                            format!("combine register `{x}` can only be used by a reducer"),
                        ));
                    };
                    let mut k = key.clone();
                    if fused {
                        k.push(u);
                    }
                    Ok(CExpr::var(&names[&k]))
                }
                _ => {
                    self.infer(e)?;
                    unreachable!()
                }
            },
            ExprKind::Binary(op, l, r) => {
                let operand = match (self.infer(l)?, self.infer(r)?) {
                    (ETy::Int, ETy::Int) if op.is_arith() => lit,
                    (ETy::Int, ETy::Int) => B32,
                    (ETy::Int, ETy::S(t)) | (ETy::S(t), _) => t,
                };
                let a = self.emit_expr(l, key, operand)?;
                let b = self.emit_expr(r, key, operand)?;
                Ok(CExpr::bop(*op, a, b))
            }
            ExprKind::Access(a) => self.access_read(a, key),
        }
    }

    pub(crate) fn iter_form(&self, b: &IterB, key: &Key) -> LinearForm {
        match b {
            IterB::Ctx(i) => {
                let it = &self.ctx[*i];
                let base = LinearForm::constant(it.lo + key[*i] as i64);
                match &it.counter {
                    Some(c) => base.add(&LinearForm::term(c, it.k as i64)),
                    None => base,
                }
            }
            IterB::Plain { counter, lo } => {
                let base = LinearForm::constant(*lo);
                match counter {
                    Some(c) => base.add(&LinearForm::var(c)),
                    None => base,
                }
            }
        }
    }

    /// Affine form of `e` over iterator counters, if it is one.
    fn affine(&self, e: &Expr, key: &Key) -> Option<LinearForm> {
        if let Some(c) = const_fold(e) {
            return Some(LinearForm::constant(c));
        }
        match &e.kind {
            ExprKind::Var(x) => match self.lookup(x) {
                Some(Binding::Iter(b)) => Some(self.iter_form(b, key)),
                _ => None,
            },
            ExprKind::Binary(BinOp::Add, l, r) => Some(self.affine(l, key)?.add(&self.affine(r, key)?)),
            ExprKind::Binary(BinOp::Sub, l, r) => {
                Some(self.affine(l, key)?.add(&self.affine(r, key)?.scale(-1)))
            }
            ExprKind::Binary(BinOp::Mul, l, r) => {
                if let Some(c) = const_fold(l) {
                    Some(self.affine(r, key)?.scale(c))
                } else {
                    let c = const_fold(r)?;
                    Some(self.affine(l, key)?.scale(c))
                }
            }
            _ => None,
        }
    }

    /// Index of one logical dimension with `banks` banks. `loose` skips the
    /// bank checks (physical offsets and shift views).
    pub(crate) fn index_form(
        &mut self,
        e: &Expr,
        key: &Key,
        banks: u64,
        loose: bool,
        physical: bool,
    ) -> Result<LinearForm, Diagnostic> {
        match &e.kind {
            ExprKind::Int(v) => {
                if *v < 0 {
                    return Err(err(Code::Index, e.span, format!("negative index {v}")));
                }
                Ok(LinearForm::constant(*v))
            }
            ExprKind::Var(x) => match self.lookup(x).cloned() {
                Some(Binding::Iter(b)) => {
                    let k = match b {
                        IterB::Ctx(i) => self.ctx[i].k,
                        IterB::Plain { .. } => 1,
                    };
                    if !physical && k > 1 && k != banks {
                        self.soft(err(
                            Code::Banks,
                            e.span,
                            format!(
                                "`{x}` is unrolled {k} times but the dimension has {banks} bank(s)"
                            ),
                        ))?;
                    }
                    Ok(self.iter_form(&b, key))
                }
                Some(Binding::Scalar {
                    ty, depth, names, ..
                }) => {
                    if ty != B32 {
                        return Err(err(
                            Code::Type,
                            e.span,
                            format!("index `{x}` must be bit<32>, found {ty}"),
                        ));
                    }
                    if !physical && !loose && banks > 1 {
                        self.soft(err(
                            Code::Index,
                            e.span,
                            format!(
                                "variable index `{x}` cannot select among {banks} banks; use an iterator or a shift view"
                            ),
                        ))?;
                    }
                    Ok(LinearForm::var(&names[&key[..depth]]))
                }
                _ => {
                    self.infer(e)?;
                    Err(err(Code::Type, e.span, format!("`{x}` cannot be an index")))
                }
            },
            _ => {
                let t = self.infer(e)?;
                if !t.fits(B32) || t == ETy::S(ScalarType::Float) {
                    return Err(err(Code::Type, e.span, format!("index must be bit<32>, found {t}")));
                }
                self.soft(err(
                    Code::Index,
                    e.span,
                    "index must be a literal, an iterator or a variable; bind compound indices with `let`",
                ))?;
                let ce = self.emit_expr(e, key, B32)?;
                let v = self.names.fresh("idx");
                self.pre.push(crate::calculus::CCmd::let_(&v, ce));
                Ok(LinearForm::var(&v))
            }
        }
    }

    /// Creates the view instance for one copy; captured offsets go to `pre`.
    pub(crate) fn view_decl(
        &mut self,
        name: &str,
        kind: ViewKind,
        target: &str,
        args: &[Expr],
        key: &Key,
        span: Span,
    ) -> Result<usize, Diagnostic> {
        let parent = self.lookup_obj(target, key, span)?;
        let pdims = self.obj_dims(&parent).to_vec();
        let inst = self.copy_name(name, key);
        let mut vargs = Vec::new();
        for (d, a) in args.iter().enumerate() {
            vargs.push(self.view_arg(kind, a, key, &inst, d)?);
        }
        let (dims, xform) =
            derive(kind, &pdims, &vargs).map_err(|m| err(Code::View, span, m))?;
        let root = self.obj_root(&parent);
        self.views.push(ViewInst {
            name: inst,
            surface: name.to_string(),
            kind,
            parent,
            root,
            dims,
            xform,
        });
        Ok(self.views.len() - 1)
    }

    fn view_arg(
        &mut self,
        kind: ViewKind,
        e: &Expr,
        key: &Key,
        inst: &str,
        d: usize,
    ) -> Result<ViewArg, Diagnostic> {
        if let Some(c) = const_fold(e) {
            return Ok(ViewArg::Const(c));
        }
        match kind {
            ViewKind::Shrink | ViewKind::Split => Err(err(
                Code::View,
                e.span,
                format!("{} factor must be a constant", kind.keyword()),
            )),
            ViewKind::Suffix => {
                if let ExprKind::Binary(BinOp::Mul, l, r) = &e.kind {
                    if let Some(k) = const_fold(l) {
                        return Ok(ViewArg::Scaled(k, self.offset_form(r, key, inst, d)?));
                    }
                    if let Some(k) = const_fold(r) {
                        return Ok(ViewArg::Scaled(k, self.offset_form(l, key, inst, d)?));
                    }
                }
                Ok(ViewArg::Form(self.offset_form(e, key, inst, d)?))
            }
            ViewKind::Shift => Ok(ViewArg::Form(self.offset_form(e, key, inst, d)?)),
        }
    }

    fn offset_form(
        &mut self,
        e: &Expr,
        key: &Key,
        inst: &str,
        d: usize,
    ) -> Result<LinearForm, Diagnostic> {
        let t = self.infer(e)?;
        if t != ETy::Int && t != ETy::S(B32) {
            return Err(err(Code::Type, e.span, format!("view offset must be bit<32>, found {t}")));
        }
        let mut reads = false;
        e.for_each_access(&mut |_| reads = true);
        if reads {
            return Err(err(Code::View, e.span, "view offsets cannot read memories"));
        }
        if let Some(f) = self.affine(e, key) {
            return Ok(f);
        }
        let ce = self.emit_expr(e, key, B32)?;
        let v = self.names.fresh(&format!("{inst}_off{d}"));
        self.pre.push(crate::calculus::CCmd::let_(&v, ce));
        Ok(LinearForm::var(&v))
    }
}

fn mismatch(op: BinOp, a: ETy, b: ETy, span: Span) -> Diagnostic {
    err(
        Code::Type,
        span,
        format!("`{}` is not defined on {a} and {b}", op.symbol()),
    )
}
