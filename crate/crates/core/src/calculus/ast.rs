//! Core calculus syntax: unbanked memories, variable conditions, and the
//! intermediate sequencing form used by the small-step relation.

use std::collections::{BTreeMap, BTreeSet};

use crate::ast::{BinOp, ScalarType};

use super::value::Value;

#[derive(Clone, Debug, PartialEq)]
pub enum CExpr {
    Val(Value),
    Var(String),
    Bop(BinOp, Box<CExpr>, Box<CExpr>),
    Read(String, Box<CExpr>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum CCmd {
    Expr(CExpr),
    Let(String, CExpr),
    /// `c1 --- c2`
    Ordered(Box<CCmd>, Box<CCmd>),
    /// `c1 ~R~ c2`: an ordered composition in flight; `R` is the access set
    /// `c2` runs against.
    Inter(Box<CCmd>, BTreeSet<String>, Box<CCmd>),
    /// `c1 ; c2`
    Unordered(Box<CCmd>, Box<CCmd>),
    If(String, Box<CCmd>, Box<CCmd>),
    While(String, Box<CCmd>),
    Assign(String, CExpr),
    Store(String, CExpr, CExpr),
    Skip,
}

impl CExpr {
    pub fn var(x: &str) -> CExpr {
        CExpr::Var(x.to_string())
    }

    pub fn b32(v: i64) -> CExpr {
        CExpr::Val(Value::b32(v))
    }

    pub fn bop(op: BinOp, l: CExpr, r: CExpr) -> CExpr {
        CExpr::Bop(op, Box::new(l), Box::new(r))
    }

    pub fn read(a: &str, e: CExpr) -> CExpr {
        CExpr::Read(a.to_string(), Box::new(e))
    }

    pub fn is_val(&self) -> bool {
        matches!(self, CExpr::Val(_))
    }

    pub fn mentions_var(&self, x: &str) -> bool {
        match self {
            CExpr::Val(_) => false,
            CExpr::Var(y) => x == y,
            CExpr::Bop(_, l, r) => l.mentions_var(x) || r.mentions_var(x),
            CExpr::Read(_, e) => e.mentions_var(x),
        }
    }

    pub fn has_read(&self) -> bool {
        match self {
            CExpr::Read(..) => true,
            CExpr::Bop(_, l, r) => l.has_read() || r.has_read(),
            _ => false,
        }
    }
}

impl CCmd {
    pub fn let_(x: &str, e: CExpr) -> CCmd {
        CCmd::Let(x.to_string(), e)
    }

    pub fn assign(x: &str, e: CExpr) -> CCmd {
        CCmd::Assign(x.to_string(), e)
    }

    pub fn store(a: &str, i: CExpr, v: CExpr) -> CCmd {
        CCmd::Store(a.to_string(), i, v)
    }

    pub fn ordered2(a: CCmd, b: CCmd) -> CCmd {
        CCmd::Ordered(Box::new(a), Box::new(b))
    }

    pub fn unordered2(a: CCmd, b: CCmd) -> CCmd {
        CCmd::Unordered(Box::new(a), Box::new(b))
    }

    pub fn if_(x: &str, a: CCmd, b: CCmd) -> CCmd {
        CCmd::If(x.to_string(), Box::new(a), Box::new(b))
    }

    pub fn while_(x: &str, c: CCmd) -> CCmd {
        CCmd::While(x.to_string(), Box::new(c))
    }

    /// Right-nested `;` chain with skips dropped.
    pub fn seq(cs: Vec<CCmd>) -> CCmd {
        let mut it = cs.into_iter().filter(|c| *c != CCmd::Skip).rev();
        let Some(last) = it.next() else {
            return CCmd::Skip;
        };
        it.fold(last, |acc, c| CCmd::unordered2(c, acc))
    }

    /// Right-nested `---` chain. Skips are kept: an empty time step still
    /// separates its neighbours.
    pub fn ordered(cs: Vec<CCmd>) -> CCmd {
        let mut it = cs.into_iter().rev();
        let Some(last) = it.next() else {
            return CCmd::Skip;
        };
        it.fold(last, |acc, c| CCmd::ordered2(c, acc))
    }

    pub fn is_skip(&self) -> bool {
        matches!(self, CCmd::Skip)
    }

    /// Number of nodes; used to rank shrinking candidates.
    pub fn size(&self) -> usize {
        match self {
            CCmd::Ordered(a, b) | CCmd::Unordered(a, b) | CCmd::Inter(a, _, b) => {
                1 + a.size() + b.size()
            }
            CCmd::If(_, a, b) => 1 + a.size() + b.size(),
            CCmd::While(_, c) => 1 + c.size(),
            _ => 1,
        }
    }
}

/// One core memory. Port aliases of a multi-ported bank are separate
/// memories that share `backing`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoreMem {
    pub name: String,
    pub elem: ScalarType,
    pub size: u64,
    pub backing: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoreProgram {
    pub mems: Vec<CoreMem>,
    pub body: CCmd,
}

impl CoreProgram {
    /// The initial affine context: every declared memory and its element type.
    pub fn delta_star(&self) -> BTreeMap<String, ScalarType> {
        self.mems
            .iter()
            .map(|m| (m.name.clone(), m.elem))
            .collect()
    }
}
