//! Core typing: `Γ, Δ ⊢ c ⊣ Γ', Δ'`.

use std::collections::{BTreeMap, BTreeSet};

use crate::ast::ScalarType;

use super::ast::{CCmd, CExpr};
use super::value::binop_type;

pub type Gamma = BTreeMap<String, ScalarType>;
pub type Delta = BTreeSet<String>;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CoreTypeError {
    #[error("memory `{0}` is not available in this time step")]
    Consumed(String),
    #[error("unknown memory `{0}`")]
    UnknownMem(String),
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("{0}")]
    Mismatch(String),
}

pub struct CoreChecker<'a> {
    /// Element type of every memory in Δ*.
    pub mems: &'a BTreeMap<String, ScalarType>,
}

impl<'a> CoreChecker<'a> {
    pub fn new(mems: &'a BTreeMap<String, ScalarType>) -> Self {
        CoreChecker { mems }
    }

    /// Δ* itself.
    pub fn full_delta(&self) -> Delta {
        self.mems.keys().cloned().collect()
    }

    pub fn expr(
        &self,
        g: &Gamma,
        d: Delta,
        e: &CExpr,
    ) -> Result<(ScalarType, Delta), CoreTypeError> {
        match e {
            CExpr::Val(v) => Ok((v.ty(), d)),
            CExpr::Var(x) => g
                .get(x)
                .map(|t| (*t, d))
                .ok_or_else(|| CoreTypeError::Unbound(x.clone())),
            CExpr::Bop(op, l, r) => {
                let (tl, d) = self.expr(g, d, l)?;
                let (tr, d) = self.expr(g, d, r)?;
                if tl != tr {
                    return Err(CoreTypeError::Mismatch(format!(
                        "operands of `{}` have types {tl} and {tr}",
                        op.symbol()
                    )));
                }
                let t = binop_type(*op, tl).ok_or_else(|| {
                    CoreTypeError::Mismatch(format!("`{}` is not defined on {tl}", op.symbol()))
                })?;
                Ok((t, d))
            }
            CExpr::Read(a, ix) => {
                let (ti, mut d) = self.expr(g, d, ix)?;
                if !matches!(ti, ScalarType::Bit(_)) {
                    return Err(CoreTypeError::Mismatch(format!("index into `{a}` has type {ti}")));
                }
                let elem = *self
                    .mems
                    .get(a)
                    .ok_or_else(|| CoreTypeError::UnknownMem(a.clone()))?;
                if !d.remove(a) {
                    return Err(CoreTypeError::Consumed(a.clone()));
                }
                Ok((elem, d))
            }
        }
    }

    fn bind(&self, g: &mut Gamma, x: &str, t: ScalarType) -> Result<(), CoreTypeError> {
        if let Some(old) = g.get(x) {
            if *old != t {
                return Err(CoreTypeError::Mismatch(format!(
                    "`{x}` rebound from {old} to {t}"
                )));
            }
        }
        g.insert(x.to_string(), t);
        Ok(())
    }

    fn cond(&self, g: &Gamma, x: &str) -> Result<(), CoreTypeError> {
        match g.get(x) {
            Some(ScalarType::Bool) => Ok(()),
            Some(t) => Err(CoreTypeError::Mismatch(format!("condition `{x}` has type {t}"))),
            None => Err(CoreTypeError::Unbound(x.to_string())),
        }
    }

    pub fn cmd(&self, g: Gamma, d: Delta, c: &CCmd) -> Result<(Gamma, Delta), CoreTypeError> {
        match c {
            CCmd::Skip => Ok((g, d)),
            CCmd::Expr(e) => {
                let (_, d) = self.expr(&g, d, e)?;
                Ok((g, d))
            }
            CCmd::Let(x, e) => {
                let (t, d) = self.expr(&g, d, e)?;
                let mut g = g;
                self.bind(&mut g, x, t)?;
                Ok((g, d))
            }
            CCmd::Assign(x, e) => {
                let (t, d) = self.expr(&g, d, e)?;
                match g.get(x) {
                    None => Err(CoreTypeError::Unbound(x.clone())),
                    Some(old) if *old != t => Err(CoreTypeError::Mismatch(format!(
                        "`{x}` has type {old}, assigned {t}"
                    ))),
                    Some(_) => Ok((g, d)),
                }
            }
            CCmd::Store(a, i, v) => {
                let (ti, d) = self.expr(&g, d, i)?;
                if !matches!(ti, ScalarType::Bit(_)) {
                    return Err(CoreTypeError::Mismatch(format!("index into `{a}` has type {ti}")));
                }
                let (tv, mut d) = self.expr(&g, d, v)?;
                let elem = *self
                    .mems
                    .get(a)
                    .ok_or_else(|| CoreTypeError::UnknownMem(a.clone()))?;
                if tv != elem {
                    return Err(CoreTypeError::Mismatch(format!(
                        "storing {tv} into `{a}` of {elem}"
                    )));
                }
                if !d.remove(a) {
                    return Err(CoreTypeError::Consumed(a.clone()));
                }
                Ok((g, d))
            }
            CCmd::Unordered(a, b) => {
                let (g, d) = self.cmd(g, d, a)?;
                self.cmd(g, d, b)
            }
            CCmd::Ordered(a, b) => {
                let (g1, d1) = self.cmd(g, d.clone(), a)?;
                let (g2, d2) = self.cmd(g1, d, b)?;
                Ok((g2, &d1 & &d2))
            }
            CCmd::Inter(a, r, b) => {
                let (g1, d1) = self.cmd(g, d, a)?;
                let entry: Delta = self.full_delta().difference(r).cloned().collect();
                let (g2, d2) = self.cmd(g1, entry, b)?;
                Ok((g2, &d1 & &d2))
            }
            CCmd::If(x, a, b) => {
                self.cond(&g, x)?;
                let (g1, d1) = self.cmd(g.clone(), d.clone(), a)?;
                let (g2, d2) = self.cmd(g, d, b)?;
                let g: Gamma = g1
                    .into_iter()
                    .filter(|(k, t)| g2.get(k) == Some(t))
                    .collect();
                Ok((g, &d1 & &d2))
            }
            CCmd::While(x, body) => {
                self.cond(&g, x)?;
                let (_, db) = self.cmd(g.clone(), d, body)?;
                Ok((g, db))
            }
        }
    }
}

/// Checks a whole body from `(∅, Δ*)`.
pub fn core_check(
    mems: &BTreeMap<String, ScalarType>,
    c: &CCmd,
) -> Result<(Gamma, Delta), CoreTypeError> {
    let ck = CoreChecker::new(mems);
    ck.cmd(Gamma::new(), ck.full_delta(), c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::value::Value;

    fn mems() -> BTreeMap<String, ScalarType> {
        [("A".to_string(), ScalarType::Float)].into_iter().collect()
    }

    #[test]
    fn read_then_write_rejected_unless_ordered() {
        let rd = CCmd::let_("x", CExpr::read("A", CExpr::b32(0)));
        let wr = CCmd::store("A", CExpr::b32(1), CExpr::Val(Value::Float(1.0)));
        let m = mems();
        assert_eq!(
            core_check(&m, &CCmd::seq(vec![rd.clone(), wr.clone()])),
            Err(CoreTypeError::Consumed("A".into()))
        );
        let (_, d) = core_check(&m, &CCmd::ordered(vec![rd, wr])).unwrap();
        assert!(!d.contains("A"));
        let (g, d) = core_check(&m, &CCmd::Skip).unwrap();
        assert!(g.is_empty() && d.contains("A"));
    }
}
