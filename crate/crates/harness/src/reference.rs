//! A naive sequential evaluator for surface programs.
//!
//! It ignores banking, ports and time steps entirely: memories are flat
//! row-major arrays, views are index maps fixed at declaration, unrolled
//! loops run one iteration at a time and a combine block runs after every
//! iteration. It shares no code with the checker or the elaborator.

use std::collections::BTreeMap;

use fuse_core::ast::{
    Access, BankSpec, BinOp, Cmd, CmdKind, Expr, ExprKind, Program, ReduceTarget, ScalarType,
    ViewKind,
};
use fuse_core::calculus::Value;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RefError {
    Runtime(String),
    Fuel,
}

impl std::fmt::Display for RefError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RefError::Runtime(m) => write!(f, "runtime error: {m}"),
            RefError::Fuel => f.write_str("fuel exhausted"),
        }
    }
}

fn rt<T>(msg: impl Into<String>) -> Result<T, RefError> {
    Err(RefError::Runtime(msg.into()))
}

/// An untyped integer literal, or a value whose type is already fixed.
#[derive(Clone, Copy, Debug)]
enum R {
    Int(i64),
    V(Value),
}

fn coerce(r: R, t: ScalarType) -> Result<Value, RefError> {
    match (r, t) {
        (R::Int(n), ScalarType::Bit(w)) => Ok(Value::bit(w, n)),
        (R::Int(n), ScalarType::Float) => Ok(Value::Float(n as f64)),
        (R::V(v), t) if v.ty() == t => Ok(v),
        (r, t) => rt(format!("cannot use {r:?} as {t}")),
    }
}

fn fix(r: R) -> Value {
    match r {
        R::Int(n) => Value::b32(n),
        R::V(v) => v,
    }
}

fn as_index(r: R) -> Result<i64, RefError> {
    match r {
        R::Int(n) => Ok(n),
        R::V(v) => v
            .as_i64()
            .ok_or_else(|| RefError::Runtime(format!("index {v} is not an integer"))),
    }
}

#[derive(Clone, Debug)]
struct View {
    parent: String,
    kind: ViewKind,
    args: Vec<i64>,
    dims: Vec<BankSpec>,
}

#[derive(Clone, Debug)]
enum Binding {
    Var(Value),
    View(View),
}

struct Mem {
    elem: ScalarType,
    dims: Vec<BankSpec>,
    data: Vec<Value>,
}

pub struct Reference {
    mems: BTreeMap<String, Mem>,
    scopes: Vec<BTreeMap<String, Binding>>,
    fuel: u64,
}

/// Final memory contents (row-major) and top-level variables.
#[derive(Clone, Debug, PartialEq)]
pub struct RefResult {
    pub mems: BTreeMap<String, Vec<Value>>,
    pub vars: BTreeMap<String, Value>,
}

/// Runs `p` with the given initial memory contents. `fuel` bounds the number
/// of commands executed.
pub fn run_reference(
    p: &Program,
    inputs: &BTreeMap<String, Vec<Value>>,
    fuel: u64,
) -> Result<RefResult, RefError> {
    let mut r = Reference {
        mems: BTreeMap::new(),
        scopes: vec![BTreeMap::new()],
        fuel,
    };
    for (name, ty, _) in p.memories() {
        let len = ty.len() as usize;
        let data = match inputs.get(name) {
            Some(d) if d.len() == len => d.clone(),
            _ => vec![Value::zero(ty.elem); len],
        };
        r.mems.insert(
            name.to_string(),
            Mem {
                elem: ty.elem,
                dims: ty.dims.clone(),
                data,
            },
        );
    }
    r.cmd(&p.body)?;
    let vars = r.scopes[0]
        .iter()
        .filter_map(|(k, b)| match b {
            Binding::Var(v) => Some((k.clone(), *v)),
            Binding::View(_) => None,
        })
        .collect();
    Ok(RefResult {
        mems: r.mems.into_iter().map(|(k, m)| (k, m.data)).collect(),
        vars,
    })
}

impl Reference {
    fn lookup(&self, x: &str) -> Option<&Binding> {
        self.scopes.iter().rev().find_map(|s| s.get(x))
    }

    fn var(&self, x: &str) -> Result<Value, RefError> {
        match self.lookup(x) {
            Some(Binding::Var(v)) => Ok(*v),
            _ => rt(format!("unbound variable `{x}`")),
        }
    }

    fn set(&mut self, x: &str, v: Value) -> Result<(), RefError> {
        for s in self.scopes.iter_mut().rev() {
            if let Some(Binding::Var(slot)) = s.get_mut(x) {
                *slot = v;
                return Ok(());
            }
        }
        rt(format!("assignment to unbound `{x}`"))
    }

    fn bind(&mut self, x: &str, b: Binding) {
        self.scopes.last_mut().unwrap().insert(x.to_string(), b);
    }

    fn scoped<T>(&mut self, f: impl FnOnce(&mut Self) -> Result<T, RefError>) -> Result<T, RefError> {
        self.scopes.push(BTreeMap::new());
        let out = f(self);
        self.scopes.pop();
        out
    }

    fn dims_of(&self, obj: &str) -> Result<Vec<BankSpec>, RefError> {
        match self.lookup(obj) {
            Some(Binding::View(v)) => Ok(v.dims.clone()),
            Some(Binding::Var(_)) => rt(format!("`{obj}` is not a memory")),
            None => match self.mems.get(obj) {
                Some(m) => Ok(m.dims.clone()),
                None => rt(format!("unknown memory `{obj}`")),
            },
        }
    }

    /// Root memory and its logical index for `obj[idx]`.
    fn locate(&self, obj: &str, idx: Vec<i64>) -> Result<(String, usize), RefError> {
        match self.lookup(obj) {
            Some(Binding::View(v)) => {
                let parent_idx: Vec<i64> = match v.kind {
                    ViewKind::Shrink => idx,
                    ViewKind::Suffix | ViewKind::Shift => {
                        idx.iter().zip(&v.args).map(|(i, o)| i + o).collect()
                    }
                    ViewKind::Split => v
                        .args
                        .iter()
                        .enumerate()
                        .map(|(d, w)| w * idx[2 * d + 1] + idx[2 * d])
                        .collect(),
                };
                self.locate(&v.parent, parent_idx)
            }
            Some(Binding::Var(_)) => rt(format!("`{obj}` is not a memory")),
            None => {
                let m = self
                    .mems
                    .get(obj)
                    .ok_or_else(|| RefError::Runtime(format!("unknown memory `{obj}`")))?;
                let mut flat = 0i64;
                for (d, (&i, spec)) in idx.iter().zip(&m.dims).enumerate() {
                    if i < 0 || i as u64 >= spec.size {
                        return rt(format!(
                            "index {i} out of range for dimension {d} of `{obj}`"
                        ));
                    }
                    flat = flat * spec.size as i64 + i;
                }
                Ok((obj.to_string(), flat as usize))
            }
        }
    }

    /// Logical indices of an access, converting bank/offset pairs of a
    /// physical access with the cyclic rule `index = banks * offset + bank`.
    fn indices(&mut self, a: &Access) -> Result<Vec<i64>, RefError> {
        let dims = self.dims_of(&a.mem)?;
        let mut raw = Vec::new();
        for e in &a.indices {
            let r = self.expr(e)?;
            raw.push(as_index(r)?);
        }
        let Some(bs) = &a.banks else {
            if raw.len() != dims.len() {
                return rt(format!("wrong number of indices for `{}`", a.mem));
            }
            return Ok(raw);
        };
        let banks: Vec<u64> = if bs.len() == dims.len() {
            bs.clone()
        } else {
            // row-major flat bank number
            let mut flat = bs[0];
            let mut out = vec![0; dims.len()];
            for d in (0..dims.len()).rev() {
                out[d] = flat % dims[d].banks;
                flat /= dims[d].banks;
            }
            out
        };
        let offs: Vec<i64> = if raw.len() == dims.len() {
            raw
        } else {
            let mut flat = raw[0];
            let mut out = vec![0; dims.len()];
            for d in (0..dims.len()).rev() {
                let blen = (dims[d].size / dims[d].banks) as i64;
                out[d] = flat % blen;
                flat /= blen;
            }
            out
        };
        Ok(offs
            .iter()
            .zip(&banks)
            .zip(&dims)
            .map(|((o, b), d)| o * d.banks as i64 + *b as i64)
            .collect())
    }

    fn load(&mut self, a: &Access) -> Result<Value, RefError> {
        let idx = self.indices(a)?;
        let (root, i) = self.locate(&a.mem, idx)?;
        Ok(self.mems[&root].data[i])
    }

    fn store(&mut self, a: &Access, v: R) -> Result<(), RefError> {
        let idx = self.indices(a)?;
        let (root, i) = self.locate(&a.mem, idx)?;
        let m = self.mems.get_mut(&root).unwrap();
        m.data[i] = coerce(v, m.elem)?;
        Ok(())
    }

    fn expr(&mut self, e: &Expr) -> Result<R, RefError> {
        Ok(match &e.kind {
            ExprKind::Int(n) => R::Int(*n),
            ExprKind::Float(f) => R::V(Value::Float(*f)),
            ExprKind::Bool(b) => R::V(Value::Bool(*b)),
            ExprKind::Var(x) => R::V(self.var(x)?),
            ExprKind::Access(a) => R::V(self.load(a)?),
            ExprKind::Binary(op, l, r) => {
                let l = self.expr(l)?;
                let r = self.expr(r)?;
                binop(*op, l, r)?
            }
        })
    }

    fn tick(&mut self) -> Result<(), RefError> {
        if self.fuel == 0 {
            return Err(RefError::Fuel);
        }
        self.fuel -= 1;
        Ok(())
    }

    fn cond(&mut self, e: &Expr) -> Result<bool, RefError> {
        match self.expr(e)? {
            R::V(Value::Bool(b)) => Ok(b),
            r => rt(format!("condition is {r:?}, not a bool")),
        }
    }

    fn cmd(&mut self, c: &Cmd) -> Result<(), RefError> {
        self.tick()?;
        match &c.kind {
            CmdKind::Skip | CmdKind::MemDecl { .. } => {}
            CmdKind::Let { name, ty, init } => {
                let r = self.expr(init)?;
                let v = match ty {
                    Some(t) => coerce(r, *t)?,
                    None => fix(r),
                };
                self.bind(name, Binding::Var(v));
            }
            CmdKind::View {
                name,
                kind,
                target,
                args,
            } => {
                let mut vals = Vec::new();
                for a in args {
                    let r = self.expr(a)?;
                    vals.push(as_index(r)?);
                }
                let pd = self.dims_of(target)?;
                let dims = match kind {
                    ViewKind::Shrink => pd
                        .iter()
                        .zip(&vals)
                        .map(|(d, f)| BankSpec::new(d.size, d.banks / *f as u64))
                        .collect(),
                    ViewKind::Suffix | ViewKind::Shift => pd.clone(),
                    ViewKind::Split => pd
                        .iter()
                        .zip(&vals)
                        .flat_map(|(d, w)| {
                            let w = *w as u64;
                            [BankSpec::new(w, w), BankSpec::new(d.size / w, d.banks / w)]
                        })
                        .collect(),
                };
                self.bind(
                    name,
                    Binding::View(View {
                        parent: target.clone(),
                        kind: *kind,
                        args: vals,
                        dims,
                    }),
                );
            }
            CmdKind::Unordered(cs) | CmdKind::Ordered(cs) => {
                for c in cs {
                    self.cmd(c)?;
                }
            }
            CmdKind::Block(c) => self.scoped(|r| r.cmd(c))?,
            CmdKind::For {
                iter,
                lo,
                hi,
                body,
                combine,
                ..
            } => {
                for i in *lo..*hi {
                    self.scoped(|r| {
                        r.bind(iter, Binding::Var(Value::b32(i)));
                        // the combine block sees the body's bindings
                        match &body.kind {
                            CmdKind::Block(inner) => r.cmd(inner)?,
                            _ => r.cmd(body)?,
                        }
                        if let Some(c) = combine {
                            r.cmd(c)?;
                        }
                        Ok(())
                    })?;
                }
            }
            CmdKind::While { cond, body } => {
                while self.cond(cond)? {
                    self.tick()?;
                    self.scoped(|r| r.cmd(body))?;
                }
            }
            CmdKind::If { cond, then, els } => {
                if self.cond(cond)? {
                    self.scoped(|r| r.cmd(then))?;
                } else if let Some(e) = els {
                    self.scoped(|r| r.cmd(e))?;
                }
            }
            CmdKind::Assign { name, value } => {
                let old = self.var(name)?;
                let r = self.expr(value)?;
                self.set(name, coerce(r, old.ty())?)?;
            }
            CmdKind::Store { target, value } => {
                let r = self.expr(value)?;
                self.store(target, r)?;
            }
            CmdKind::Reduce { op, target, value } => {
                let r = self.expr(value)?;
                match target {
                    ReduceTarget::Var(x) => {
                        let old = self.var(x)?;
                        let v = coerce(r, old.ty())?;
                        self.set(x, val_binop(op.binop(), old, v)?)?;
                    }
                    ReduceTarget::Access(a) => {
                        let old = self.load(a)?;
                        let v = coerce(r, old.ty())?;
                        self.store(a, R::V(val_binop(op.binop(), old, v)?))?;
                    }
                }
            }
            CmdKind::Expr(e) => {
                self.expr(e)?;
            }
        }
        Ok(())
    }
}

fn val_binop(op: BinOp, a: Value, b: Value) -> Result<Value, RefError> {
    Value::binop(op, a, b).map_err(|e| RefError::Runtime(e.to_string()))
}

fn binop(op: BinOp, l: R, r: R) -> Result<R, RefError> {
    match (l, r) {
        (R::Int(a), R::Int(b)) => Ok(match op {
            BinOp::Add => R::Int(a.wrapping_add(b)),
            BinOp::Sub => R::Int(a.wrapping_sub(b)),
            BinOp::Mul => R::Int(a.wrapping_mul(b)),
            BinOp::Div | BinOp::Rem if b == 0 => return rt("division by zero"),
            BinOp::Div => R::Int(a.wrapping_div(b)),
            BinOp::Rem => R::Int(a.wrapping_rem(b)),
            BinOp::Eq => R::V(Value::Bool(a == b)),
            BinOp::Ne => R::V(Value::Bool(a != b)),
            BinOp::Lt => R::V(Value::Bool(a < b)),
            BinOp::Le => R::V(Value::Bool(a <= b)),
            BinOp::Gt => R::V(Value::Bool(a > b)),
            BinOp::Ge => R::V(Value::Bool(a >= b)),
            BinOp::And | BinOp::Or => return rt("logic operator on integers"),
        }),
        (R::Int(a), R::V(v)) => Ok(R::V(val_binop(op, coerce(R::Int(a), v.ty())?, v)?)),
        (R::V(v), R::Int(b)) => Ok(R::V(val_binop(op, v, coerce(R::Int(b), v.ty())?)?)),
        (R::V(a), R::V(b)) => Ok(R::V(val_binop(op, a, b)?)),
    }
}
