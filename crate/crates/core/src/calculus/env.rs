//! Run-time state shared by both interpreters.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Map};

use super::ast::CoreProgram;
use super::value::{EvalError, Value};

/// The access set: core memories touched in the current time step.
pub type Rho = BTreeSet<String>;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum Fault {
    #[error("stuck: {0}")]
    Stuck(String),
    #[error("runtime error: {0}")]
    Runtime(String),
    #[error("fuel exhausted")]
    Fuel,
}

impl From<EvalError> for Fault {
    fn from(e: EvalError) -> Self {
        Fault::Runtime(e.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Env {
    pub vars: BTreeMap<String, Value>,
    /// Backing stores, keyed by backing name.
    pub mems: BTreeMap<String, Vec<Value>>,
    /// Memory name to backing name.
    pub alias: BTreeMap<String, String>,
}

impl Env {
    /// Zero-initialized state for `prog`.
    pub fn new(prog: &CoreProgram) -> Env {
        let mut env = Env {
            vars: BTreeMap::new(),
            mems: BTreeMap::new(),
            alias: BTreeMap::new(),
        };
        for m in &prog.mems {
            env.alias.insert(m.name.clone(), m.backing.clone());
            env.mems
                .entry(m.backing.clone())
                .or_insert_with(|| vec![Value::zero(m.elem); m.size as usize]);
        }
        env
    }

    pub fn var(&self, x: &str) -> Result<Value, Fault> {
        self.vars
            .get(x)
            .copied()
            .ok_or_else(|| Fault::Runtime(format!("unbound variable `{x}`")))
    }

    pub fn assign(&mut self, x: &str, v: Value) -> Result<(), Fault> {
        match self.vars.get_mut(x) {
            Some(slot) => {
                *slot = v;
                Ok(())
            }
            None => Err(Fault::Runtime(format!("assignment to unbound `{x}`"))),
        }
    }

    fn slot(&self, a: &str, idx: Value) -> Result<(String, usize), Fault> {
        let back = self
            .alias
            .get(a)
            .ok_or_else(|| Fault::Runtime(format!("unknown memory `{a}`")))?;
        let i = idx
            .as_i64()
            .ok_or_else(|| Fault::Runtime(format!("index into `{a}` is not a bit value")))?;
        let len = self.mems[back].len();
        if i < 0 || i as usize >= len {
            return Err(Fault::Runtime(format!(
                "index {i} out of bounds for `{a}` of size {len}"
            )));
        }
        Ok((back.clone(), i as usize))
    }

    pub fn load(&self, a: &str, idx: Value) -> Result<Value, Fault> {
        let (b, i) = self.slot(a, idx)?;
        Ok(self.mems[&b][i])
    }

    pub fn store(&mut self, a: &str, idx: Value, v: Value) -> Result<(), Fault> {
        let (b, i) = self.slot(a, idx)?;
        self.mems.get_mut(&b).unwrap()[i] = v;
        Ok(())
    }

    pub fn to_json(&self, rho: &Rho) -> serde_json::Value {
        let vars: Map<String, serde_json::Value> =
            self.vars.iter().map(|(k, v)| (k.clone(), v.to_json())).collect();
        let mems: Map<String, serde_json::Value> = self
            .mems
            .iter()
            .map(|(k, vs)| (k.clone(), vs.iter().map(Value::to_json).collect()))
            .collect();
        json!({ "vars": vars, "mems": mems, "rho": rho.iter().collect::<Vec<_>>() })
    }
}

/// Checks `a ∉ ρ` and records the access.
pub(crate) fn claim(rho: &mut Rho, a: &str) -> Result<(), Fault> {
    if rho.contains(a) {
        return Err(Fault::Stuck(format!("memory `{a}` already accessed in this time step")));
    }
    rho.insert(a.to_string());
    Ok(())
}
