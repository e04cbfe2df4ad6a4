//! Memory accesses: index resolution through views, bank credits and
//! capabilities.

use std::collections::{BTreeMap, BTreeSet};

use crate::ast::{Access, BankSpec, ViewKind};
use crate::calculus::CExpr;
use crate::diag::{Code, Diagnostic, Span};
use crate::layout::BankLayout;
use crate::linear::LinearForm;

use super::state::{CapKey, Obj};
use super::{err, placeholder, AccessRecord, Checker, Key, Pending};

pub(crate) struct Resolved {
    pub root: String,
    pub path: Obj,
    /// The object whose banks this access spends credits on.
    pub domain: Obj,
    pub dom_forms: Vec<LinearForm>,
    pub root_forms: Vec<LinearForm>,
}

/// Flat banks a set of per-dimension forms may touch.
pub(crate) fn flat_bank_set(dims: &[BankSpec], forms: &[LinearForm]) -> Vec<u64> {
    let layout = BankLayout::new(dims.to_vec());
    let mut out: Vec<Vec<u64>> = vec![Vec::new()];
    for (d, f) in dims.iter().zip(forms) {
        let set = f.bank_set(d.banks);
        out = out
            .into_iter()
            .flat_map(|p| {
                set.iter().map(move |b| {
                    let mut q = p.clone();
                    q.push(*b);
                    q
                })
            })
            .collect();
    }
    let mut flat: Vec<u64> = out.iter().map(|bs| layout.flatten_bank(bs)).collect();
    flat.sort_unstable();
    flat
}

impl Checker {
    fn resolve(&mut self, a: &Access, key: &Key) -> Result<Resolved, Diagnostic> {
        let obj = self.lookup_obj(&a.mem, key, a.span)?;
        let dims = self.obj_dims(&obj).to_vec();
        let is_root = matches!(obj, Obj::Root(_));
        let loose = matches!(obj, Obj::View(v) if self.views[v].kind == ViewKind::Shift);
        let forms = match &a.banks {
            None => {
                if a.indices.len() != dims.len() {
                    return Err(arity(&a.mem, dims.len(), a.indices.len(), a.span));
                }
                let mut forms = Vec::new();
                for (d, ix) in a.indices.iter().enumerate() {
                    let f = self.index_form(ix, key, dims[d].banks, loose, false)?;
                    if is_root && f.is_const() && f.constant as u64 >= dims[d].size {
                        return Err(err(
                            Code::Index,
                            ix.span,
                            format!(
                                "index {} is out of range for dimension {d} of `{}` (size {})",
                                f.constant, a.mem, dims[d].size
                            ),
                        ));
                    }
                    forms.push(f);
                }
                forms
            }
            Some(bs) => {
                let layout = BankLayout::new(dims.clone());
                let banks = if bs.len() == dims.len() {
                    bs.clone()
                } else if bs.len() == 1 {
                    if bs[0] >= layout.flat_banks() {
                        return Err(bank_range(&a.mem, bs[0], a.span));
                    }
                    layout.unflatten_bank(bs[0])
                } else {
                    return Err(err(
                        Code::Type,
                        a.span,
                        format!("`{}` takes one flat bank or one bank per dimension", a.mem),
                    ));
                };
                for (d, b) in banks.iter().enumerate() {
                    if *b >= dims[d].banks {
                        return Err(bank_range(&a.mem, *b, a.span));
                    }
                }
                let offsets: Vec<LinearForm> = if a.indices.len() == dims.len() {
                    let mut offs = Vec::new();
                    for (d, ix) in a.indices.iter().enumerate() {
                        let f = self.index_form(ix, key, 1, true, true)?;
                        let blen = dims[d].size / dims[d].banks;
                        if is_root && f.is_const() && f.constant as u64 >= blen {
                            return Err(offset_range(&a.mem, f.constant, ix.span));
                        }
                        offs.push(f);
                    }
                    offs
                } else if a.indices.len() == 1 {
                    let ix = &a.indices[0];
                    let Some(flat) = super::expr::const_fold(ix) else {
                        return Err(err(
                            Code::Index,
                            ix.span,
                            "a flat bank offset into a multi-dimensional memory must be a literal",
                        ));
                    };
                    if flat < 0 || flat as u64 >= layout.bank_len() {
                        return Err(offset_range(&a.mem, flat, ix.span));
                    }
                    layout
                        .unflatten_offset(flat as u64)
                        .into_iter()
                        .map(|o| LinearForm::constant(o as i64))
                        .collect()
                } else {
                    return Err(arity(&a.mem, dims.len(), a.indices.len(), a.span));
                };
                offsets
                    .iter()
                    .zip(&banks)
                    .zip(&dims)
                    .map(|((o, b), d)| o.scale(d.banks as i64).add_const(*b as i64))
                    .collect()
            }
        };
        let mut cur = obj.clone();
        let mut f = forms;
        let mut domain = None;
        while let Obj::View(v) = cur {
            let view = &self.views[v];
            if view.kind == ViewKind::Shift && domain.is_none() {
                domain = Some((Obj::View(v), f.clone()));
            }
            f = view.xform.to_parent(&f);
            cur = view.parent.clone();
        }
        let Obj::Root(root) = cur else { unreachable!() };
        let (domain, dom_forms) = domain.unwrap_or_else(|| (Obj::Root(root.clone()), f.clone()));
        Ok(Resolved {
            root,
            path: obj,
            domain,
            dom_forms,
            root_forms: f,
        })
    }

    /// First shift view at or below `o`, else its root.
    fn domain_of(&self, o: &Obj) -> Obj {
        let mut cur = o.clone();
        while let Obj::View(v) = cur {
            if self.views[v].kind == ViewKind::Shift {
                return Obj::View(v);
            }
            cur = self.views[v].parent.clone();
        }
        cur
    }

    fn capacity(&self, dom: &Obj) -> u32 {
        match dom {
            Obj::Root(r) => self.roots[r].ports as u32,
            Obj::View(_) => 1,
        }
    }

    /// Spends one credit on each of `banks` in `dom`; returns the port each
    /// one got.
    fn spend(
        &mut self,
        dom: &Obj,
        banks: &[u64],
        what: &str,
        span: Span,
    ) -> Result<BTreeMap<u64, u64>, Diagnostic> {
        let cap = self.capacity(dom);
        let mut ports = BTreeMap::new();
        for &b in banks {
            let used = self.st.used.get(&(dom.clone(), b)).copied().unwrap_or(0);
            if used >= cap {
                self.soft(err(
                    Code::Consumed,
                    span,
                    format!(
                        "bank {b} of `{}` already consumed in this time step ({what}); separate the accesses with `---`",
                        self.obj_name(dom)
                    ),
                ))?;
                ports.insert(b, 0);
            } else {
                ports.insert(b, used as u64);
            }
        }
        for &b in banks {
            let e = self.st.used.entry((dom.clone(), b)).or_insert(0);
            *e += 1;
            let n = *e;
            if let Obj::Root(r) = dom {
                let p = self.peaks.entry((r.clone(), b)).or_insert(0);
                *p = (*p).max(n);
            }
        }
        Ok(ports)
    }

    /// The root ports shift view `s` holds in this step, claiming them on
    /// first use.
    fn claim(&mut self, s: usize, span: Span) -> Result<BTreeMap<u64, u64>, Diagnostic> {
        if let Some(m) = self.st.claims.get(&s) {
            return Ok(m.clone());
        }
        let parent = self.views[s].parent.clone();
        let dom = self.domain_of(&parent);
        let n = BankLayout::new(self.obj_dims(&dom).to_vec()).flat_banks();
        let all: Vec<u64> = (0..n).collect();
        let what = format!("shift view `{}` needs every bank", self.views[s].name);
        let map = match dom {
            Obj::Root(_) => self.spend(&dom, &all, &what, span)?,
            Obj::View(t) => {
                self.spend(&dom, &all, &what, span)?;
                self.claim(t, span)?
            }
        };
        self.st.claims.insert(s, map.clone());
        Ok(map)
    }

    fn acquire(
        &mut self,
        r: &Resolved,
        write: bool,
        mem: &str,
        span: Span,
    ) -> Result<BTreeMap<u64, u64>, Diagnostic> {
        if let Some(ps) = self.st.paths.get(&r.root) {
            if !ps.contains(&r.path) {
                let other = ps.iter().next().map(|o| self.obj_name(o)).unwrap_or_default();
                self.soft(err(
                    Code::Consumed,
                    span,
                    format!(
                        "`{}` already consumed through `{other}` in this time step; access it through one name",
                        r.root
                    ),
                ))?;
            }
        }
        let ck = CapKey {
            root: r.root.clone(),
            path: r.path.clone(),
            forms: r.root_forms.clone(),
        };
        if write && self.st.writes.contains(&ck) {
            self.soft(err(
                Code::WriteCap,
                span,
                format!("`{mem}` is written twice at the same element in one time step"),
            ))?;
        }
        let dims = self.obj_dims(&r.domain).to_vec();
        let banks = flat_bank_set(&dims, &r.dom_forms);
        let what = if write { "write" } else { "read" };
        let ports = match &r.domain {
            Obj::Root(_) => self.spend(&r.domain, &banks, what, span)?,
            Obj::View(s) => {
                self.spend(&r.domain, &banks, what, span)?;
                self.claim(*s, span)?
            }
        };
        self.st
            .paths
            .entry(r.root.clone())
            .or_insert_with(BTreeSet::new)
            .insert(r.path.clone());
        if self.opts.trace {
            self.report.trace.push(AccessRecord {
                path: self.obj_name(&r.path),
                root: r.root.clone(),
                key: Vec::new(),
                root_forms: r.root_forms.clone(),
                banks,
                write,
            });
        }
        Ok(ports)
    }

    fn push_pending(&mut self, r: &Resolved, ports: BTreeMap<u64, u64>) -> usize {
        self.pending.push(Pending {
            root: r.root.clone(),
            forms: r.root_forms.clone(),
            ports,
        });
        self.pending.len() - 1
    }

    pub(crate) fn access_read(&mut self, a: &Access, key: &Key) -> Result<CExpr, Diagnostic> {
        let r = self.resolve(a, key)?;
        let ck = CapKey {
            root: r.root.clone(),
            path: r.path.clone(),
            forms: r.root_forms.clone(),
        };
        if let Some(t) = self.st.reads.get(&ck) {
            return Ok(CExpr::var(t));
        }
        let ports = self.acquire(&r, false, &a.mem, a.span)?;
        if let Some(rec) = self.report.trace.last_mut().filter(|_| self.opts.trace) {
            rec.key = key.clone();
        }
        let t = self.names.fresh(&format!("{}_rd", a.mem));
        let id = self.push_pending(&r, ports);
        self.pre.push(crate::calculus::CCmd::let_(
            &t,
            CExpr::read(&placeholder(id), CExpr::b32(0)),
        ));
        self.st.reads.insert(ck, t.clone());
        Ok(CExpr::var(&t))
    }

    pub(crate) fn access_write(&mut self, a: &Access, key: &Key) -> Result<usize, Diagnostic> {
        let r = self.resolve(a, key)?;
        let ports = self.acquire(&r, true, &a.mem, a.span)?;
        if let Some(rec) = self.report.trace.last_mut().filter(|_| self.opts.trace) {
            rec.key = key.clone();
        }
        self.note_root(&r.root);
        self.st.writes.insert(CapKey {
            root: r.root.clone(),
            path: r.path.clone(),
            forms: r.root_forms.clone(),
        });
        Ok(self.push_pending(&r, ports))
    }
}

fn arity(mem: &str, want: usize, got: usize, span: Span) -> Diagnostic {
    err(
        Code::Type,
        span,
        format!("`{mem}` has {want} dimension(s) but the access gives {got} index(es)"),
    )
}

fn bank_range(mem: &str, b: u64, span: Span) -> Diagnostic {
    err(Code::Index, span, format!("bank {b} is out of range for `{mem}`"))
}

fn offset_range(mem: &str, o: i64, span: Span) -> Diagnostic {
    err(Code::Index, span, format!("offset {o} is out of range for a bank of `{mem}`"))
}
