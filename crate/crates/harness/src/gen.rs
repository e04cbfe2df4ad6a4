//! Random well-typed core programs.
//!
//! Generation threads the typing context through every construct exactly as
//! the core checker does, so every program is accepted by construction.

use std::collections::{BTreeMap, BTreeSet};

use fuse_core::ast::{BinOp, ScalarType};
use fuse_core::calculus::{CCmd, CExpr, CoreMem, CoreProgram, Delta, Gamma, Value};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GenConfig {
    pub seed: u64,
    pub max_depth: u32,
    pub mems: usize,
    pub mem_size: u64,
    /// Scalars bound up front so expressions have something to use.
    pub scalars: usize,
    pub while_prob: f64,
    /// Largest trip count of a generated `while` loop.
    pub max_trips: i64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 0,
            max_depth: 4,
            mems: 3,
            mem_size: 4,
            scalars: 3,
            while_prob: 0.15,
            max_trips: 3,
        }
    }
}

impl GenConfig {
    pub fn with_seed(seed: u64) -> Self {
        GenConfig {
            seed,
            ..GenConfig::default()
        }
    }
}

const TYPES: [ScalarType; 3] = [ScalarType::Bit(32), ScalarType::Float, ScalarType::Bit(8)];

struct Gen {
    rng: ChaCha8Rng,
    cfg: GenConfig,
    mems: BTreeMap<String, (ScalarType, u64)>,
    fresh: u32,
    /// Loop counters and flags; never assigned by generated code.
    fixed: BTreeSet<String>,
}

pub fn generate_well_typed(cfg: &GenConfig) -> CoreProgram {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        cfg: cfg.clone(),
        mems: BTreeMap::new(),
        fresh: 0,
        fixed: Default::default(),
    };
    let mut mems = Vec::new();
    for m in 0..cfg.mems {
        let elem = *[ScalarType::Bit(32), ScalarType::Float]
            .choose(&mut g.rng)
            .unwrap();
        let name = format!("M{m}");
        g.mems.insert(name.clone(), (elem, cfg.mem_size));
        mems.push(CoreMem {
            name: name.clone(),
            elem,
            size: cfg.mem_size,
            backing: name,
        });
    }
    let delta: Delta = g.mems.keys().cloned().collect();
    let mut gamma = Gamma::new();
    let mut prelude = Vec::new();
    for _ in 0..cfg.scalars {
        let t = *TYPES.choose(&mut g.rng).unwrap();
        let x = g.name("s");
        prelude.push(CCmd::let_(&x, CExpr::Val(g.literal(t))));
        gamma.insert(x, t);
    }
    if cfg.max_depth > 0 {
        let (c, _, _) = g.cmd(cfg.max_depth, gamma, delta);
        prelude.push(c);
    }
    CoreProgram {
        mems,
        body: CCmd::seq(prelude),
    }
}

/// Random initial contents for every memory of `p`.
pub fn random_inputs(p: &CoreProgram, seed: u64) -> BTreeMap<String, Vec<Value>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut out = BTreeMap::new();
    for m in &p.mems {
        out.entry(m.backing.clone()).or_insert_with(|| {
            (0..m.size)
                .map(|_| match m.elem {
                    ScalarType::Float => Value::Float(rng.gen_range(-8..8) as f64 / 2.0),
                    ScalarType::Bit(w) => Value::bit(w, rng.gen_range(-20..20)),
                    ScalarType::Bool => Value::Bool(rng.gen()),
                })
                .collect()
        });
    }
    out
}

impl Gen {
    fn name(&mut self, base: &str) -> String {
        self.fresh += 1;
        format!("{base}{}", self.fresh)
    }

    fn literal(&mut self, t: ScalarType) -> Value {
        match t {
            ScalarType::Bit(w) => Value::bit(w, self.rng.gen_range(-9..10)),
            ScalarType::Float => Value::Float(self.rng.gen_range(-16..16) as f64 / 4.0),
            ScalarType::Bool => Value::Bool(self.rng.gen()),
        }
    }

    fn vars_of(&self, g: &Gamma, t: ScalarType) -> Vec<String> {
        g.iter()
            .filter(|(_, ty)| **ty == t)
            .map(|(n, _)| n.clone())
            .collect()
    }

    /// An expression of type `t`; reads consume memories from `d`.
    fn expr(&mut self, depth: u32, t: ScalarType, g: &Gamma, d: &mut Delta) -> CExpr {
        let readable: Vec<String> = d
            .iter()
            .filter(|m| self.mems[*m].0 == t)
            .cloned()
            .collect();
        let vars = self.vars_of(g, t);
        let choice = self.rng.gen_range(0..10);
        if t == ScalarType::Bool {
            if depth == 0 || choice < 3 {
                return match vars.choose(&mut self.rng) {
                    Some(v) if choice < 2 => CExpr::var(v),
                    _ => CExpr::Val(self.literal(t)),
                };
            }
            if choice < 5 {
                let op = *[BinOp::And, BinOp::Or, BinOp::Eq].choose(&mut self.rng).unwrap();
                let l = self.expr(depth - 1, t, g, d);
                let r = self.expr(depth - 1, t, g, d);
                return CExpr::bop(op, l, r);
            }
            let ot = *[ScalarType::Bit(32), ScalarType::Float].choose(&mut self.rng).unwrap();
            let op = *[BinOp::Lt, BinOp::Le, BinOp::Gt, BinOp::Ge, BinOp::Eq, BinOp::Ne]
                .choose(&mut self.rng)
                .unwrap();
            let l = self.expr(depth - 1, ot, g, d);
            let r = self.expr(depth - 1, ot, g, d);
            return CExpr::bop(op, l, r);
        }
        if choice < 2 && !readable.is_empty() {
            let m = readable.choose(&mut self.rng).unwrap().clone();
            d.remove(&m);
            let size = self.mems[&m].1 as i64;
            let ix = CExpr::b32(self.rng.gen_range(0..size));
            return CExpr::read(&m, ix);
        }
        if depth == 0 || choice < 5 {
            return match vars.choose(&mut self.rng) {
                Some(v) if choice % 2 == 0 => CExpr::var(v),
                _ => CExpr::Val(self.literal(t)),
            };
        }
        let ops: &[BinOp] = match t {
            ScalarType::Float => &[BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div],
            _ => &[BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Rem],
        };
        let op = *ops.choose(&mut self.rng).unwrap();
        let l = self.expr(depth - 1, t, g, d);
        let r = if matches!(op, BinOp::Div | BinOp::Rem) && t != ScalarType::Float {
            // nonzero literal divisor
            let mut v = self.rng.gen_range(1..6);
            if self.rng.gen() {
                v = -v;
            }
            CExpr::Val(match t {
                ScalarType::Bit(w) => Value::bit(w, v),
                _ => unreachable!(),
            })
        } else {
            self.expr(depth - 1, t, g, d)
        };
        CExpr::bop(op, l, r)
    }

    fn cmd(&mut self, depth: u32, g: Gamma, d: Delta) -> (CCmd, Gamma, Delta) {
        if depth == 0 {
            return self.leaf(g, d);
        }
        let r: f64 = self.rng.gen();
        if r < self.cfg.while_prob {
            return self.while_loop(depth, g, d);
        }
        match self.rng.gen_range(0..10) {
            0..=2 => {
                let (a, g1, d1) = self.cmd(depth - 1, g, d);
                let (b, g2, d2) = self.cmd(depth - 1, g1, d1);
                (CCmd::unordered2(a, b), g2, d2)
            }
            3..=5 => {
                let (a, g1, d1) = self.cmd(depth - 1, g, d.clone());
                let (b, g2, d2) = self.cmd(depth - 1, g1, d);
                (CCmd::ordered2(a, b), g2, &d1 & &d2)
            }
            6 | 7 => {
                let mut d = d;
                let cond = self.name("c");
                let e = self.expr(2, ScalarType::Bool, &g, &mut d);
                let mut g0 = g;
                g0.insert(cond.clone(), ScalarType::Bool);
                let (a, g1, d1) = self.cmd(depth - 1, g0.clone(), d.clone());
                let (b, g2, d2) = self.cmd(depth - 1, g0, d);
                let gj: Gamma = g1
                    .into_iter()
                    .filter(|(k, t)| g2.get(k) == Some(t))
                    .collect();
                (
                    CCmd::unordered2(CCmd::let_(&cond, e), CCmd::if_(&cond, a, b)),
                    gj,
                    &d1 & &d2,
                )
            }
            _ => self.leaf(g, d),
        }
    }

    /// `let i = 0; let go = i < n; while go { body; i := i + 1; go := i < n }`
    fn while_loop(&mut self, depth: u32, g: Gamma, d: Delta) -> (CCmd, Gamma, Delta) {
        let i = self.name("i");
        let go = self.name("go");
        self.fixed.insert(i.clone());
        let n = self.rng.gen_range(0..=self.cfg.max_trips);
        let test = CExpr::bop(BinOp::Lt, CExpr::var(&i), CExpr::b32(n));
        let mut g0 = g;
        g0.insert(i.clone(), ScalarType::Bit(32));
        g0.insert(go.clone(), ScalarType::Bool);
        let (body, _, db) = self.cmd(depth - 1, g0.clone(), d);
        let step = CCmd::seq(vec![
            body,
            CCmd::assign(&i, CExpr::bop(BinOp::Add, CExpr::var(&i), CExpr::b32(1))),
            CCmd::assign(&go, test.clone()),
        ]);
        let c = CCmd::seq(vec![
            CCmd::let_(&i, CExpr::b32(0)),
            CCmd::let_(&go, test),
            CCmd::while_(&go, step),
        ]);
        (c, g0, db)
    }

    fn leaf(&mut self, g: Gamma, mut d: Delta) -> (CCmd, Gamma, Delta) {
        let mut g = g;
        match self.rng.gen_range(0..8) {
            0..=2 => {
                let t = *TYPES.choose(&mut self.rng).unwrap();
                let e = self.expr(2, t, &g, &mut d);
                let x = self.name("x");
                g.insert(x.clone(), t);
                (CCmd::let_(&x, e), g, d)
            }
            3 | 4 => {
                let writable: Vec<String> = d.iter().cloned().collect();
                match writable.choose(&mut self.rng).cloned() {
                    Some(m) => {
                        let (elem, size) = self.mems[&m];
                        let ix = CExpr::b32(self.rng.gen_range(0..size as i64));
                        let mut d2 = d.clone();
                        d2.remove(&m);
                        let v = self.expr(2, elem, &g, &mut d2);
                        (CCmd::store(&m, ix, v), g, d2)
                    }
                    None => (CCmd::Skip, g, d),
                }
            }
            5 | 6 => {
                let cands: Vec<(String, ScalarType)> = g
                    .iter()
                    .filter(|(n, t)| **t != ScalarType::Bool && !self.fixed.contains(*n))
                    .map(|(n, t)| (n.clone(), *t))
                    .collect();
                match cands.choose(&mut self.rng).cloned() {
                    Some((x, t)) => {
                        let e = self.expr(2, t, &g, &mut d);
                        (CCmd::assign(&x, e), g, d)
                    }
                    None => (CCmd::Skip, g, d),
                }
            }
            _ => {
                let t = *TYPES.choose(&mut self.rng).unwrap();
                let e = self.expr(1, t, &g, &mut d);
                (CCmd::Expr(e), g, d)
            }
        }
    }
}
