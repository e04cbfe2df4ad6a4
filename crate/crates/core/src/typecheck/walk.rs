//! Commands: scoping, time steps, control flow and unrolled loops.

use std::collections::BTreeMap;
use std::mem;

use crate::ast::{Cmd, CmdKind, Expr, ReduceOp, ReduceTarget, ScalarType};
use crate::calculus::{binop_type, CCmd, CExpr};
use crate::diag::{Code, Diagnostic, Span};

use super::state::{Effects, State};
use super::{err, Binding, Checker, CtxIter, IterB, Key, LoopReport, ViewReport};

/// Barrier marker pushed while checking a combine block.
const COMBINE: usize = usize::MAX;

impl Checker {
    pub(crate) fn cmd(&mut self, c: &Cmd, copies: &[Key]) -> Result<CCmd, Diagnostic> {
        match &c.kind {
            CmdKind::Skip | CmdKind::MemDecl { .. } => Ok(CCmd::Skip),
            CmdKind::Unordered(cs) => {
                let mut out = Vec::new();
                for ch in cs {
                    out.push(self.cmd(ch, copies)?);
                }
                Ok(CCmd::seq(out))
            }
            CmdKind::Ordered(parts) => self.ordered(parts, copies),
            CmdKind::Block(inner) => {
                self.push_scope();
                let r = self.cmd(inner, copies)?;
                self.pop_scope();
                Ok(r)
            }
            CmdKind::For { .. } => self.for_loop(c, copies),
            CmdKind::If { cond, then, els } => {
                let mut out = Vec::new();
                for key in copies {
                    out.push(self.if_cmd(cond, then, els.as_deref(), key)?);
                }
                Ok(CCmd::seq(out))
            }
            CmdKind::While { cond, body } => {
                let mut out = Vec::new();
                for key in copies {
                    out.push(self.while_cmd(cond, body, key)?);
                }
                Ok(CCmd::seq(out))
            }
            _ => self.leaf(c, copies),
        }
    }

    /// Runs `f` as a compound command starting from `entry`, returning the
    /// end state and the effects it had.
    fn branch<T>(
        &mut self,
        entry: &State,
        keep_caps: bool,
        f: impl FnOnce(&mut Self) -> Result<T, Diagnostic>,
    ) -> Result<(T, State), Diagnostic> {
        self.st = entry.clone();
        if !keep_caps {
            self.st.clear_caps();
        }
        let r = f(self)?;
        Ok((r, mem::take(&mut self.st)))
    }

    fn ordered(&mut self, parts: &[Cmd], copies: &[Key]) -> Result<CCmd, Diagnostic> {
        let entry = self.st.clone();
        self.effects.push(Effects::default());
        let mut out = Vec::new();
        let mut ends = Vec::new();
        for (i, p) in parts.iter().enumerate() {
            let (c, s) = self.branch(&entry, i == 0, |me| me.cmd(p, copies))?;
            out.push(c);
            ends.push(s);
        }
        let eff = self.effects.pop().unwrap_or_default();
        self.st = State::join(&entry, ends, &eff);
        Ok(CCmd::ordered(out))
    }

    /// A branch or loop condition: a bool expression that reads no memory.
    /// Returns the setup, the condition variable and, when the variable is
    /// fresh, the expression that recomputes it.
    fn condition(
        &mut self,
        cond: &Expr,
        key: &Key,
    ) -> Result<(Vec<CCmd>, String, Option<CExpr>), Diagnostic> {
        if self.infer(cond)? != super::expr::ETy::S(ScalarType::Bool) {
            return Err(err(Code::Type, cond.span, "condition must be a bool"));
        }
        let mut reads = false;
        cond.for_each_access(&mut |_| reads = true);
        if reads {
            return Err(err(
                Code::Type,
                cond.span,
                "conditions cannot read memories; bind the value with `let` first",
            ));
        }
        self.pre.clear();
        let e = self.emit_expr(cond, key, ScalarType::Bool)?;
        if let CExpr::Var(x) = &e {
            return Ok((Vec::new(), x.clone(), None));
        }
        let x = self.names.fresh("cond");
        Ok((vec![CCmd::let_(&x, e.clone())], x, Some(e)))
    }

    fn if_cmd(
        &mut self,
        cond: &Expr,
        then: &Cmd,
        els: Option<&Cmd>,
        key: &Key,
    ) -> Result<CCmd, Diagnostic> {
        let (mut pre, x, _) = self.condition(cond, key)?;
        let entry = self.st.clone();
        self.effects.push(Effects::default());
        let one = [key.clone()];
        let (t, s1) = self.branch(&entry, true, |me| me.scoped(then, &one))?;
        let (e, s2) = match els {
            Some(els) => self.branch(&entry, true, |me| me.scoped(els, &one))?,
            None => (CCmd::Skip, entry.clone()),
        };
        let eff = self.effects.pop().unwrap_or_default();
        self.st = State::join(&entry, vec![s1, s2], &eff);
        pre.push(CCmd::if_(&x, t, e));
        Ok(CCmd::seq(pre))
    }

    fn while_cmd(&mut self, cond: &Expr, body: &Cmd, key: &Key) -> Result<CCmd, Diagnostic> {
        let (mut pre, x, again) = self.condition(cond, key)?;
        let entry = self.st.clone();
        self.effects.push(Effects::default());
        let one = [key.clone()];
        let (mut b, end) = self.branch(&entry, false, |me| me.scoped(body, &one))?;
        if let Some(e) = again {
            b = CCmd::seq(vec![b, CCmd::assign(&x, e)]);
        }
        let eff = self.effects.pop().unwrap_or_default();
        self.st = State::join(&entry, vec![end], &eff);
        pre.push(CCmd::while_(&x, b));
        Ok(CCmd::seq(pre))
    }

    fn scoped(&mut self, c: &Cmd, copies: &[Key]) -> Result<CCmd, Diagnostic> {
        self.push_scope();
        let r = self.cmd(c, copies)?;
        self.pop_scope();
        Ok(r)
    }

    fn for_loop(&mut self, c: &Cmd, copies: &[Key]) -> Result<CCmd, Diagnostic> {
        let CmdKind::For {
            iter,
            lo,
            hi,
            unroll,
            body,
            combine,
        } = &c.kind
        else {
            unreachable!()
        };
        let (lo, hi, k) = (*lo, *hi, *unroll);
        if hi <= lo {
            return Err(err(
                Code::Type,
                c.span,
                format!("loop over `{iter}` has an empty range {lo}..{hi}"),
            ));
        }
        if k == 0 || (hi - lo) as u64 % k != 0 {
            return Err(err(
                Code::Divides,
                c.span,
                format!(
                    "unroll factor {k} does not divide the {} iterations of `{iter}`",
                    hi - lo
                ),
            ));
        }
        let trips = (hi - lo) / k as i64;
        let fused = !self.ctx.is_empty() || k > 1;
        let counter = (trips > 1).then(|| self.names.fresh(&format!("{iter}_ctr")));
        self.report.loops.push(LoopReport {
            iter: iter.clone(),
            lo,
            hi,
            unroll: k,
            trips,
            line: c.span.line,
        });

        let entry = self.st.clone();
        self.effects.push(Effects::default());

        // Body: one time step per trip, every copy in lockstep.
        self.st = entry.clone();
        self.st.clear_caps();
        self.push_scope();
        let level = self.scopes.len() - 1;
        self.barriers.push(level);
        let body_copies: Vec<Key> = if fused {
            self.ctx.push(CtxIter {
                k,
                lo,
                counter: counter.clone(),
            });
            let idx = self.ctx.len() - 1;
            self.bind(iter, Binding::Iter(IterB::Ctx(idx)), c.span)?;
            copies
                .iter()
                .flat_map(|key| {
                    (0..k as u32).map(move |u| {
                        let mut kk = key.clone();
                        kk.push(u);
                        kk
                    })
                })
                .collect()
        } else {
            self.bind(
                iter,
                Binding::Iter(IterB::Plain {
                    counter: counter.clone(),
                    lo,
                }),
                c.span,
            )?;
            copies.to_vec()
        };
        let inner: &Cmd = match &body.kind {
            CmdKind::Block(b) => b,
            _ => body,
        };
        let body_core = self.cmd(inner, &body_copies)?;
        let scope = self.pop_scope();
        self.barriers.pop();
        if fused {
            self.ctx.pop();
        }
        let mut ends = vec![mem::take(&mut self.st)];

        // Combine: reducers fold the body's per-copy values.
        let comb_core = match combine {
            Some(cb) => {
                let regs: Vec<(String, Binding)> = scope
                    .into_iter()
                    .filter_map(|(n, b)| match b {
                        Binding::Scalar { ty, names, .. } => Some((
                            n,
                            Binding::Register {
                                ty,
                                names,
                                k,
                                fused,
                            },
                        )),
                        _ => None,
                    })
                    .collect();
                self.st = entry.clone();
                self.st.clear_caps();
                self.push_scope();
                self.barriers.push(COMBINE);
                for (n, b) in regs {
                    self.scopes.last_mut().unwrap().insert(n, b);
                }
                let inner: &Cmd = match &cb.kind {
                    CmdKind::Block(b) => b,
                    _ => cb,
                };
                let r = self.cmd(inner, copies)?;
                self.barriers.pop();
                self.pop_scope();
                ends.push(mem::take(&mut self.st));
                Some(r)
            }
            None => None,
        };
        let eff = self.effects.pop().unwrap_or_default();
        self.st = State::join(&entry, ends, &eff);

        let step = match comb_core {
            Some(cc) => CCmd::ordered(vec![body_core, cc]),
            None => body_core,
        };
        Ok(match counter {
            None => step,
            Some(ctr) => {
                let go = self.names.fresh(&format!("{iter}_go"));
                let test = || CExpr::bop(crate::ast::BinOp::Lt, CExpr::var(&ctr), CExpr::b32(trips));
                CCmd::seq(vec![
                    CCmd::let_(&ctr, CExpr::b32(0)),
                    CCmd::let_(&go, test()),
                    CCmd::while_(
                        &go,
                        CCmd::seq(vec![
                            step,
                            CCmd::assign(
                                &ctr,
                                CExpr::bop(crate::ast::BinOp::Add, CExpr::var(&ctr), CExpr::b32(1)),
                            ),
                            CCmd::assign(&go, test()),
                        ]),
                    ),
                ])
            }
        })
    }

    /// A scalar that may be assigned here, with its core names.
    fn assignable(
        &mut self,
        name: &str,
        reducer: bool,
        span: Span,
    ) -> Result<(ScalarType, usize, BTreeMap<Key, String>), Diagnostic> {
        let (ty, depth, names, level) = match self.lookup(name) {
            Some(Binding::Scalar {
                ty,
                depth,
                names,
                level,
            }) => (*ty, *depth, names.clone(), *level),
            Some(Binding::Register { .. }) => {
                return Err(err(
                    Code::Type,
                    span,
                    format!("`{name}` is a combine register and cannot be assigned"),
                ))
            }
            Some(Binding::Iter(_)) => {
                return Err(err(Code::Type, span, format!("cannot assign to iterator `{name}`")))
            }
            Some(_) => {
                return Err(err(Code::Type, span, format!("`{name}` is not a variable")))
            }
            None => return Err(err(Code::Type, span, format!("unbound variable `{name}`"))),
        };
        // Reducers directly inside a combine block may fold into any
        // enclosing scalar; everything else stops at the innermost loop.
        if reducer && self.barriers.last() == Some(&COMBINE) {
            return Ok((ty, depth, names));
        }
        if let Some(&b) = self.barriers.iter().rev().find(|b| **b != COMBINE) {
            if level < b {
                self.soft(err(
                    Code::Type,
                    span,
                    format!(
                        "`{name}` is declared outside the loop; update it from a combine block"
                    ),
                ))?;
            }
        }
        Ok((ty, depth, names))
    }

    /// Number of register copies the expression folds over, if it reads any.
    fn register_arity(&self, e: &Expr) -> Option<u64> {
        let mut vars = Vec::new();
        e.free_vars(&mut vars);
        vars.iter().find_map(|v| match self.lookup(v) {
            Some(Binding::Register { k, fused, .. }) => Some(if *fused { *k } else { 1 }),
            _ => None,
        })
    }

    /// `acc op e` for every register copy, folded left.
    fn reduce_value(
        &mut self,
        op: ReduceOp,
        acc: CExpr,
        value: &Expr,
        key: &Key,
        ty: ScalarType,
    ) -> Result<CExpr, Diagnostic> {
        match self.register_arity(value) {
            None => {
                let v = self.emit_expr(value, key, ty)?;
                Ok(CExpr::bop(op.binop(), acc, v))
            }
            Some(n) => {
                let mut acc = acc;
                for u in 0..n as u32 {
                    self.reg_copy = Some(u);
                    let v = self.emit_expr(value, key, ty);
                    self.reg_copy = None;
                    acc = CExpr::bop(op.binop(), acc, v?);
                }
                Ok(acc)
            }
        }
    }

    fn leaf(&mut self, c: &Cmd, copies: &[Key]) -> Result<CCmd, Diagnostic> {
        self.pending.clear();
        let mut out: Vec<CCmd> = Vec::new();
        match &c.kind {
            CmdKind::Let { name, ty, init } => {
                let ety = self.infer(init)?;
                let t = match ty {
                    Some(t) => {
                        if !ety.fits(*t) {
                            return Err(err(
                                Code::Type,
                                init.span,
                                format!("`{name}` is declared {t} but initialized with {ety}"),
                            ));
                        }
                        *t
                    }
                    None => ety.resolve(),
                };
                self.report.let_types.insert(c.span.start, t);
                let mut names = BTreeMap::new();
                for key in copies {
                    self.pre.clear();
                    let e = self.emit_expr(init, key, t)?;
                    out.append(&mut self.pre);
                    let nm = self.copy_name(name, key);
                    out.push(CCmd::let_(&nm, e));
                    names.insert(key.clone(), nm);
                }
                let b = Binding::Scalar {
                    ty: t,
                    depth: self.ctx.len(),
                    names,
                    level: self.scopes.len() - 1,
                };
                self.bind(name, b, c.span)?;
            }
            CmdKind::Assign { name, value } => {
                let (ty, depth, names) = self.assignable(name, false, c.span)?;
                let ety = self.infer(value)?;
                if !ety.fits(ty) {
                    return Err(err(
                        Code::Type,
                        value.span,
                        format!("cannot assign {ety} to `{name}` of type {ty}"),
                    ));
                }
                for key in copies {
                    self.pre.clear();
                    let e = self.emit_expr(value, key, ty)?;
                    out.append(&mut self.pre);
                    let nm = names[&key[..depth]].clone();
                    out.push(CCmd::assign(&nm, e));
                    self.note_var(&nm);
                }
            }
            CmdKind::Store { target, value } => {
                let elem = self.elem_of(&target.mem, target.span)?;
                let ety = self.infer(value)?;
                if !ety.fits(elem) {
                    return Err(err(
                        Code::Type,
                        value.span,
                        format!("cannot store {ety} into `{}` of {elem}", target.mem),
                    ));
                }
                for key in copies {
                    self.pre.clear();
                    let e = self.emit_expr(value, key, elem)?;
                    let id = self.access_write(target, key)?;
                    out.append(&mut self.pre);
                    out.push(CCmd::store(&super::placeholder(id), CExpr::b32(0), e));
                }
            }
            CmdKind::Reduce { op, target, value } => {
                let (ty, tspan) = match target {
                    ReduceTarget::Var(n) => match self.lookup(n) {
                        Some(Binding::Scalar { ty, .. }) => (*ty, c.span),
                        _ => {
                            self.assignable(n, true, c.span)?;
                            unreachable!()
                        }
                    },
                    ReduceTarget::Access(a) => (self.elem_of(&a.mem, a.span)?, a.span),
                };
                if binop_type(op.binop(), ty) != Some(ty) {
                    return Err(err(
                        Code::Type,
                        tspan,
                        format!("`{}` is not defined on {ty}", op.symbol()),
                    ));
                }
                self.allow_regs = true;
                let ety = self.infer(value);
                self.allow_regs = false;
                let ety = ety?;
                if !ety.fits(ty) {
                    return Err(err(
                        Code::Type,
                        value.span,
                        format!("cannot reduce {ety} into a value of type {ty}"),
                    ));
                }
                match target {
                    ReduceTarget::Var(n) => {
                        let (_, depth, names) = self.assignable(n, true, c.span)?;
                        for key in copies {
                            self.pre.clear();
                            let nm = names[&key[..depth]].clone();
                            let v = self.reduce_value(*op, CExpr::var(&nm), value, key, ty)?;
                            out.append(&mut self.pre);
                            out.push(CCmd::assign(&nm, v));
                            self.note_var(&nm);
                        }
                    }
                    ReduceTarget::Access(a) => {
                        // One access: the element is read and written back
                        // through the same port, in two core steps.
                        for key in copies {
                            self.pre.clear();
                            let t = self.names.fresh(&format!("{}_acc", a.mem));
                            let v = self.reduce_value(*op, CExpr::var(&t), value, key, ty)?;
                            let id = self.access_write(a, key)?;
                            let m = super::placeholder(id);
                            out.append(&mut self.pre);
                            out.push(CCmd::ordered(vec![
                                CCmd::let_(&t, CExpr::read(&m, CExpr::b32(0))),
                                CCmd::store(&m, CExpr::b32(0), v),
                            ]));
                        }
                    }
                }
            }
            CmdKind::Expr(e) => {
                let t = self.infer(e)?.resolve();
                for key in copies {
                    self.pre.clear();
                    let ce = self.emit_expr(e, key, t)?;
                    out.append(&mut self.pre);
                    out.push(CCmd::Expr(ce));
                }
            }
            CmdKind::View {
                name,
                kind,
                target,
                args,
            } => {
                let mut insts = BTreeMap::new();
                for key in copies {
                    self.pre.clear();
                    let id = self.view_decl(name, *kind, target, args, key, c.span)?;
                    out.append(&mut self.pre);
                    insts.insert(key.clone(), id);
                }
                if let Some(&id) = insts.values().next() {
                    let v = &self.views[id];
                    let ty = crate::ast::MemType {
                        elem: self.roots[&v.root].elem,
                        ports: 1,
                        dims: v.dims.clone(),
                    };
                    self.report.views.push(ViewReport {
                        name: name.clone(),
                        kind: kind.keyword(),
                        target: target.clone(),
                        ty: format!("mem {ty}"),
                    });
                }
                let b = Binding::View {
                    depth: self.ctx.len(),
                    insts,
                };
                self.bind(name, b, c.span)?;
            }
            _ => unreachable!("compound command reached leaf"),
        }
        Ok(self.finish_leaf(out))
    }

    fn finish_leaf(&mut self, out: Vec<CCmd>) -> CCmd {
        let pending = mem::take(&mut self.pending);
        if !self.opts.emit || pending.is_empty() {
            return CCmd::seq(out);
        }
        crate::elaborate::lower_leaf_seq(self, out, &pending)
    }
}
