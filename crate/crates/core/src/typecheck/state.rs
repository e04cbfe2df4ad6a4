//! Per-time-step resources: bank credits, shift claims, access paths and
//! capabilities.

use std::collections::{BTreeMap, BTreeSet};

use crate::linear::LinearForm;

/// A root memory or a view instance (index into the checker's view arena).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Obj {
    Root(String),
    View(usize),
}

/// Identity of an element for capability purposes.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct CapKey {
    pub root: String,
    pub path: Obj,
    pub forms: Vec<LinearForm>,
}

impl CapKey {
    fn mentions(&self, vars: &BTreeSet<String>) -> bool {
        self.forms
            .iter()
            .any(|f| f.terms.keys().any(|a| vars.contains(a)))
    }
}

#[derive(Clone, Debug, Default)]
pub struct State {
    /// Credits used per (credit domain, flat bank).
    pub used: BTreeMap<(Obj, u64), u32>,
    /// Shift instances already claimed in this step: root bank to port.
    pub claims: BTreeMap<usize, BTreeMap<u64, u64>>,
    /// Objects through which each root was accessed in this step.
    pub paths: BTreeMap<String, BTreeSet<Obj>>,
    /// Read capabilities, with the temporary that holds the value.
    pub reads: BTreeMap<CapKey, String>,
    pub writes: BTreeSet<CapKey>,
}

/// Variables assigned and roots written inside a compound command.
#[derive(Clone, Debug, Default)]
pub struct Effects {
    pub vars: BTreeSet<String>,
    pub roots: BTreeSet<String>,
}

impl State {
    pub fn clear_caps(&mut self) {
        self.reads.clear();
        self.writes.clear();
    }

    /// Drops capabilities invalidated by `eff`.
    pub fn invalidate(&mut self, eff: &Effects) {
        if !eff.vars.is_empty() {
            self.reads.retain(|k, _| !k.mentions(&eff.vars));
            self.writes.retain(|k| !k.mentions(&eff.vars));
        }
        if !eff.roots.is_empty() {
            self.reads.retain(|k, _| !eff.roots.contains(&k.root));
        }
    }

    /// Joins the end states of alternatives or time steps that all started
    /// from `entry`: credits take the maximum, claims and paths the union, and
    /// capabilities fall back to the entry's minus whatever `eff` touched.
    pub fn join(entry: &State, ends: Vec<State>, eff: &Effects) -> State {
        let mut out = State {
            reads: entry.reads.clone(),
            writes: entry.writes.clone(),
            ..State::default()
        };
        out.invalidate(eff);
        for s in ends {
            for (k, v) in s.used {
                let e = out.used.entry(k).or_insert(0);
                *e = (*e).max(v);
            }
            for (k, v) in s.claims {
                out.claims.entry(k).or_default().extend(v);
            }
            for (k, v) in s.paths {
                out.paths.entry(k).or_default().extend(v);
            }
        }
        out
    }
}
