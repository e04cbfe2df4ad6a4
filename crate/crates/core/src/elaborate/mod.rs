//! Lowering of checked programs to the core calculus: banked memories
//! become one core memory per bank and port, and logical indices become
//! bank selection plus offsets.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::ast::{BinOp, MemType, Program, ScalarType};
use crate::calculus::{CCmd, CExpr, CoreMem, CoreProgram, Env, Value};
use crate::diag::Diagnostic;
use crate::layout::BankLayout;
use crate::linear::{gcd, lcm, LinearForm};
use crate::typecheck::{check_with, placeholder, Checker, Options, Pending, Report};

use crate::typecheck::expr_support::form_to_cexpr;

/// Where each logical element of a memory lives in the core program.
#[derive(Clone, Debug, Serialize)]
pub struct RootMap {
    pub name: String,
    pub elem: ScalarType,
    pub ports: u64,
    pub layout: BankLayout,
}

impl RootMap {
    /// Core memory for one bank and port.
    pub fn bank_name(&self, flat: u64, port: u64) -> String {
        bank_name(&self.name, self.layout.flat_banks(), self.ports, flat, port)
    }

    /// Backing store of a bank, shared by its ports.
    pub fn backing(&self, flat: u64) -> String {
        bank_name(&self.name, self.layout.flat_banks(), 1, flat, 0)
    }
}

fn bank_name(root: &str, banks: u64, ports: u64, flat: u64, port: u64) -> String {
    let mut s = root.to_string();
    if banks > 1 {
        s.push_str(&format!("_{flat}"));
    }
    if ports > 1 {
        s.push_str(&format!("__p{port}"));
    }
    s
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct MemMap {
    pub roots: Vec<RootMap>,
}

impl MemMap {
    pub fn get(&self, name: &str) -> Option<&RootMap> {
        self.roots.iter().find(|r| r.name == name)
    }

    /// Writes a row-major logical array into the banks of `root`.
    pub fn scatter(&self, env: &mut Env, root: &str, data: &[Value]) {
        let r = self.get(root).expect("known memory");
        for (i, v) in data.iter().enumerate() {
            let idx = r.layout.unflatten_logical(i as u64);
            let (b, offs) = r.layout.bank_and_offset(&idx).expect("in range");
            let o = r.layout.flatten_offset(&offs);
            if let Some(m) = env.mems.get_mut(&r.backing(b)) {
                m[o as usize] = *v;
            }
        }
    }

    /// Reads the banks of `root` back as a row-major logical array.
    pub fn gather(&self, env: &Env, root: &str) -> Vec<Value> {
        let r = self.get(root).expect("known memory");
        (0..r.layout.len())
            .map(|i| {
                let idx = r.layout.unflatten_logical(i);
                let (b, offs) = r.layout.bank_and_offset(&idx).expect("in range");
                let o = r.layout.flatten_offset(&offs);
                env.mems[&r.backing(b)][o as usize]
            })
            .collect()
    }

    fn core_mems(&self) -> Vec<CoreMem> {
        let mut out = Vec::new();
        for r in &self.roots {
            for b in 0..r.layout.flat_banks() {
                for p in 0..r.ports {
                    out.push(CoreMem {
                        name: r.bank_name(b, p),
                        elem: r.elem,
                        size: r.layout.bank_len(),
                        backing: r.backing(b),
                    });
                }
            }
        }
        out
    }
}

pub struct Elaborated {
    pub core: CoreProgram,
    pub report: Report,
    pub memmap: MemMap,
}

fn build(roots: Vec<(String, MemType)>) -> MemMap {
    MemMap {
        roots: roots
            .into_iter()
            .map(|(name, ty)| RootMap {
                name,
                elem: ty.elem,
                ports: ty.ports,
                layout: BankLayout::new(ty.dims),
            })
            .collect(),
    }
}

/// Checks and lowers `p`.
pub fn elaborate(p: &Program) -> Result<Elaborated, Vec<Diagnostic>> {
    let opts = Options {
        emit: true,
        ..Options::default()
    };
    let c = check_with(p, opts).map_err(|d| vec![d])?;
    let memmap = build(c.roots);
    Ok(Elaborated {
        core: CoreProgram {
            mems: memmap.core_mems(),
            body: c.body,
        },
        report: c.report,
        memmap,
    })
}

/// Lowers `p` even when resource checks fail, returning the resource errors
/// it would have reported. The result may get stuck when run.
pub fn elaborate_forced(p: &Program) -> Result<(Elaborated, Vec<Diagnostic>), Diagnostic> {
    let opts = Options {
        emit: true,
        force: true,
        ..Options::default()
    };
    let c = check_with(p, opts)?;
    let memmap = build(c.roots);
    Ok((
        Elaborated {
            core: CoreProgram {
                mems: memmap.core_mems(),
                body: c.body,
            },
            report: c.report,
            memmap,
        },
        c.soft,
    ))
}

/// Lowers the statements of one leaf together. Index bindings the dispatch
/// depends on are moved in front of it when that cannot change their value;
/// otherwise each statement is dispatched on its own.
pub(crate) fn lower_leaf_seq(ck: &mut Checker, out: Vec<CCmd>, pending: &[Pending]) -> CCmd {
    let mut used = BTreeSet::new();
    for c in &out {
        placeholders(c, &mut used);
    }
    let atoms: BTreeSet<String> = used
        .iter()
        .flat_map(|&i| pending[i].forms.iter().flat_map(|f| f.terms.keys().cloned()))
        .collect();
    let mut written = BTreeSet::new();
    for c in &out {
        if let CCmd::Let(x, _) | CCmd::Assign(x, _) = c {
            written.insert(x.clone());
        }
    }
    let mut hoisted = Vec::new();
    let mut rest = Vec::new();
    for c in out {
        match &c {
            CCmd::Let(x, e) if atoms.contains(x) && pure(e, &written) => hoisted.push(c),
            _ => rest.push(c),
        }
    }
    let bound_inside = rest
        .iter()
        .any(|c| matches!(c, CCmd::Let(x, _) | CCmd::Assign(x, _) if atoms.contains(x)));
    if bound_inside {
        hoisted.extend(rest.into_iter().map(|c| lower_leaf(ck, c, pending)));
        return CCmd::seq(hoisted);
    }
    hoisted.push(lower_leaf(ck, CCmd::seq(rest), pending));
    CCmd::seq(hoisted)
}

fn pure(e: &CExpr, written: &BTreeSet<String>) -> bool {
    match e {
        CExpr::Val(_) => true,
        CExpr::Var(x) => !written.contains(x),
        CExpr::Bop(_, l, r) => pure(l, written) && pure(r, written),
        CExpr::Read(..) => false,
    }
}

/// Resolves the placeholder memories of one statement. When a bank depends
/// on a run-time value, the statement is replicated under a dispatch on
/// that value's residues.
pub(crate) fn lower_leaf(ck: &mut Checker, body: CCmd, pending: &[Pending]) -> CCmd {
    let mut used = BTreeSet::new();
    placeholders(&body, &mut used);
    if used.is_empty() {
        return body;
    }
    // Modulus each atom must be split by so every bank is static.
    let mut moduli: BTreeMap<String, i64> = BTreeMap::new();
    for p in used.iter().map(|&i| &pending[i]) {
        let dims = &ck.roots[&p.root].dims;
        for (f, d) in p.forms.iter().zip(dims) {
            let b = d.banks as i64;
            for (atom, &c) in &f.terms {
                if c.rem_euclid(b) != 0 {
                    let m = b / gcd(b, c);
                    let e = moduli.entry(atom.clone()).or_insert(1);
                    *e = lcm(*e, m);
                }
            }
        }
    }
    let atoms: Vec<(String, i64)> = moduli.into_iter().collect();
    let mut residues = BTreeMap::new();
    dispatch(ck, &body, pending, &used, &atoms, &mut residues)
}

fn placeholders(c: &CCmd, out: &mut BTreeSet<usize>) {
    let mut mem = |a: &str| {
        if let Some(id) = a.strip_prefix('\0').and_then(|s| s.parse().ok()) {
            out.insert(id);
        }
    };
    match c {
        CCmd::Expr(e) | CCmd::Let(_, e) | CCmd::Assign(_, e) => expr_placeholders(e, &mut mem),
        CCmd::Store(a, i, v) => {
            mem(a);
            expr_placeholders(i, &mut mem);
            expr_placeholders(v, &mut mem);
        }
        CCmd::Ordered(a, b) | CCmd::Unordered(a, b) | CCmd::Inter(a, _, b) | CCmd::If(_, a, b) => {
            placeholders(a, out);
            placeholders(b, out);
        }
        CCmd::While(_, b) => placeholders(b, out),
        CCmd::Skip => {}
    }
}

fn expr_placeholders(e: &CExpr, mem: &mut impl FnMut(&str)) {
    match e {
        CExpr::Read(a, i) => {
            mem(a);
            expr_placeholders(i, mem);
        }
        CExpr::Bop(_, l, r) => {
            expr_placeholders(l, mem);
            expr_placeholders(r, mem);
        }
        _ => {}
    }
}

fn dispatch(
    ck: &mut Checker,
    body: &CCmd,
    pending: &[Pending],
    used: &BTreeSet<usize>,
    atoms: &[(String, i64)],
    residues: &mut BTreeMap<String, i64>,
) -> CCmd {
    let Some(((atom, m), rest)) = atoms.split_first() else {
        let targets: Vec<(String, CExpr)> = pending
            .iter()
            .enumerate()
            .map(|(i, p)| {
                if used.contains(&i) {
                    target(ck, p, residues)
                } else {
                    (String::new(), CExpr::b32(0))
                }
            })
            .collect();
        return substitute(body, &targets);
    };
    let s = ck.names.fresh(&format!("{atom}_bk"));
    let mm = CExpr::b32(*m);
    let sel = CExpr::bop(
        BinOp::Rem,
        CExpr::bop(
            BinOp::Add,
            CExpr::bop(BinOp::Rem, CExpr::var(atom), mm.clone()),
            mm.clone(),
        ),
        mm,
    );
    let mut cases = Vec::new();
    for r in 0..*m {
        residues.insert(atom.clone(), r);
        cases.push(dispatch(ck, body, pending, used, rest, residues));
    }
    residues.remove(atom);
    // if s == 0 { case 0 } else { if s == 1 { ... } else { case m-1 } }
    let mut acc = cases.pop().unwrap();
    for (r, case) in cases.into_iter().enumerate().rev() {
        let c = ck.names.fresh(&format!("{atom}_is{r}"));
        acc = CCmd::seq(vec![
            CCmd::let_(
                &c,
                CExpr::bop(BinOp::Eq, CExpr::var(&s), CExpr::b32(r as i64)),
            ),
            CCmd::if_(&c, case, acc),
        ]);
    }
    CCmd::seq(vec![CCmd::let_(&s, sel), acc])
}

/// Core memory and offset of one access under fixed residues.
fn target(ck: &Checker, p: &Pending, residues: &BTreeMap<String, i64>) -> (String, CExpr) {
    let ty = &ck.roots[&p.root];
    let layout = BankLayout::new(ty.dims.clone());
    let strides = layout.offset_strides();
    let mut banks = Vec::new();
    let mut flat_off: Option<CExpr> = None;
    let mut lin_off = LinearForm::constant(0);
    for (d, (f, spec)) in p.forms.iter().zip(&ty.dims).enumerate() {
        let b = spec.banks as i64;
        let mut k = f.constant;
        for (atom, c) in &f.terms {
            if c.rem_euclid(b) != 0 {
                k += c * residues[atom];
            }
        }
        let bank = k.rem_euclid(b);
        banks.push(bank as u64);
        let shifted = f.add_const(-bank);
        let stride = strides[d] as i64;
        match shifted.div_exact(b) {
            Some(q) => lin_off = lin_off.add(&q.scale(stride)),
            None => {
                let q = CExpr::bop(BinOp::Div, form_to_cexpr(&shifted), CExpr::b32(b));
                let q = if stride == 1 {
                    q
                } else {
                    CExpr::bop(BinOp::Mul, q, CExpr::b32(stride))
                };
                flat_off = Some(match flat_off {
                    None => q,
                    Some(a) => CExpr::bop(BinOp::Add, a, q),
                });
            }
        }
    }
    let flat = layout.flatten_bank(&banks);
    let port = p.ports.get(&flat).copied().unwrap_or(0);
    let name = bank_name(&p.root, layout.flat_banks(), ty.ports, flat, port);
    let off = match flat_off {
        None => form_to_cexpr(&lin_off),
        Some(dynamic) if lin_off == LinearForm::constant(0) => dynamic,
        Some(dynamic) => CExpr::bop(BinOp::Add, form_to_cexpr(&lin_off), dynamic),
    };
    (name, off)
}

fn substitute(c: &CCmd, t: &[(String, CExpr)]) -> CCmd {
    let go = |c: &CCmd| Box::new(substitute(c, t));
    match c {
        CCmd::Expr(e) => CCmd::Expr(subst_expr(e, t)),
        CCmd::Let(x, e) => CCmd::Let(x.clone(), subst_expr(e, t)),
        CCmd::Assign(x, e) => CCmd::Assign(x.clone(), subst_expr(e, t)),
        CCmd::Store(a, i, v) => match lookup(a, t) {
            Some((name, off)) => CCmd::Store(name, off, subst_expr(v, t)),
            None => CCmd::Store(a.clone(), subst_expr(i, t), subst_expr(v, t)),
        },
        CCmd::Ordered(a, b) => CCmd::Ordered(go(a), go(b)),
        CCmd::Unordered(a, b) => CCmd::Unordered(go(a), go(b)),
        CCmd::Inter(a, r, b) => CCmd::Inter(go(a), r.clone(), go(b)),
        CCmd::If(x, a, b) => CCmd::If(x.clone(), go(a), go(b)),
        CCmd::While(x, b) => CCmd::While(x.clone(), go(b)),
        CCmd::Skip => CCmd::Skip,
    }
}

fn lookup(a: &str, t: &[(String, CExpr)]) -> Option<(String, CExpr)> {
    let id: usize = a.strip_prefix('\0')?.parse().ok()?;
    debug_assert_eq!(placeholder(id), a);
    t.get(id).cloned()
}

fn subst_expr(e: &CExpr, t: &[(String, CExpr)]) -> CExpr {
    match e {
        CExpr::Read(a, i) => match lookup(a, t) {
            Some((name, off)) => CExpr::Read(name, Box::new(off)),
            None => CExpr::Read(a.clone(), Box::new(subst_expr(i, t))),
        },
        CExpr::Bop(op, l, r) => CExpr::Bop(*op, Box::new(subst_expr(l, t)), Box::new(subst_expr(r, t))),
        _ => e.clone(),
    }
}
