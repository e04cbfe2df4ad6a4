//! Random surface programs built from idiomatic fragments: unrolled maps,
//! reductions through combine blocks, lockstep multi-step loops, views,
//! physical accesses, multi-dimensional and multi-ported memories.
//!
//! Fragments are composed with `---` and the result is filtered through the
//! checker, so most but not all candidates are accepted.

use std::collections::BTreeMap;
use std::fmt::Write;

use fuse_core::ast::{Program, ScalarType};
use fuse_core::calculus::Value;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct SurfaceCase {
    pub source: String,
    pub elem: ScalarType,
}

struct Shape {
    elem: ScalarType,
    /// Length of A, B, C and P.
    n: i64,
    /// Banking of A and B.
    b: i64,
    /// Rows and columns of D and E, with their banking.
    rows: (i64, i64),
    cols: (i64, i64),
}

struct G {
    rng: ChaCha8Rng,
    s: Shape,
    fresh: u32,
    out_slot: i64,
}

const OUT: i64 = 16;

fn divisors(n: i64) -> Vec<i64> {
    [1, 2, 4].into_iter().filter(|d| n % d == 0).collect()
}

/// One candidate program for `seed`.
pub fn generate_surface(seed: u64) -> SurfaceCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let elem = *[ScalarType::Float, ScalarType::Bit(32)].choose(&mut rng).unwrap();
    let n = *[4, 8, 12, 16].choose(&mut rng).unwrap();
    let b = *divisors(n).choose(&mut rng).unwrap();
    let r = *[2, 4].choose(&mut rng).unwrap();
    let c = *[2, 3, 4, 6].choose(&mut rng).unwrap();
    let rb = *divisors(r).choose(&mut rng).unwrap();
    let cb = *[1, 2, 3].iter().filter(|d| c % **d == 0).collect::<Vec<_>>().choose(&mut rng).unwrap();
    let mut g = G {
        rng,
        s: Shape {
            elem,
            n,
            b,
            rows: (r, rb),
            cols: (c, *cb),
        },
        fresh: 0,
        out_slot: 0,
    };
    let t = ty(elem);
    let mut src = String::new();
    let bank = |b: i64| if b > 1 { format!(" bank {b}") } else { String::new() };
    writeln!(src, "let A: {t}[{n}{}];", bank(b)).unwrap();
    writeln!(src, "let B: {t}[{n}{}];", bank(b)).unwrap();
    writeln!(src, "let C: {t}[{n}];").unwrap();
    writeln!(src, "let P: {t}{{2}}[{n}];").unwrap();
    writeln!(src, "let O: {t}[{OUT}];").unwrap();
    writeln!(src, "let D: {t}[{r}{}][{c}{}];", bank(rb), bank(*cb)).unwrap();
    writeln!(src, "let E: {t}[{r}{}][{c}{}];", bank(rb), bank(*cb)).unwrap();
    let count = g.rng.gen_range(2..=5);
    let mut parts = Vec::new();
    for _ in 0..count {
        parts.push(g.fragment());
    }
    src.push_str(&parts.join("---\n"));
    SurfaceCase { source: src, elem }
}

fn ty(t: ScalarType) -> String {
    t.to_string()
}

/// Random initial contents for every memory of `p`, row-major.
pub fn surface_inputs(p: &Program, seed: u64) -> BTreeMap<String, Vec<Value>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    p.memories()
        .into_iter()
        .map(|(name, ty, _)| {
            let data = (0..ty.len())
                .map(|_| match ty.elem {
                    ScalarType::Float => Value::Float(rng.gen_range(-8..=8) as f64 / 2.0),
                    ScalarType::Bit(w) => Value::bit(w, rng.gen_range(-9..=9)),
                    ScalarType::Bool => Value::Bool(rng.gen()),
                })
                .collect();
            (name.to_string(), data)
        })
        .collect()
}

impl G {
    fn name(&mut self, base: &str) -> String {
        self.fresh += 1;
        format!("{base}{}", self.fresh)
    }

    fn lit(&mut self) -> String {
        let v: i64 = self.rng.gen_range(-3..=5);
        if v < 0 {
            format!("(0 - {})", -v)
        } else {
            v.to_string()
        }
    }

    fn slot(&mut self) -> i64 {
        let s = self.out_slot % OUT;
        self.out_slot += 1;
        s
    }

    fn op(&mut self) -> &'static str {
        ["+", "-", "*"].choose(&mut self.rng).unwrap()
    }

    fn red(&mut self) -> &'static str {
        ["+=", "-=", "*="].choose(&mut self.rng).unwrap()
    }

    fn fragment(&mut self) -> String {
        match self.rng.gen_range(0..11) {
            0 => self.map(),
            1 => self.reduce(),
            2 => self.lockstep(),
            3 => self.suffix(),
            4 => self.shift(),
            5 => self.split(),
            6 => self.while_if(),
            7 => self.physical(),
            8 => self.two_dim(),
            9 => self.ports(),
            _ => self.mem_reduce(),
        }
    }

    fn unroll(&mut self) -> i64 {
        if self.rng.gen_bool(0.8) {
            self.s.b
        } else {
            1
        }
    }

    fn map(&mut self) -> String {
        let (n, k) = (self.s.n, self.unroll());
        let (op, c) = (self.op(), self.lit());
        let i = self.name("i");
        let u = if k > 1 { format!(" unroll {k}") } else { String::new() };
        format!("for (let {i} = 0..{n}){u} {{\n  B[{i}] := A[{i}] {op} {c};\n}}\n")
    }

    fn reduce(&mut self) -> String {
        let (n, k, t) = (self.s.n, self.unroll(), ty(self.s.elem));
        let (i, s, v) = (self.name("i"), self.name("s"), self.name("v"));
        let (op, red, init, o) = (self.op(), self.red(), self.lit(), self.slot());
        let u = if k > 1 { format!(" unroll {k}") } else { String::new() };
        format!(
            "let {s}: {t} = {init};\nfor (let {i} = 0..{n}){u} {{\n  let {v} = A[{i}] {op} B[{i}];\n}} combine {{\n  {s} {red} {v};\n}}\n---\nO[{o}] := {s};\n"
        )
    }

    fn lockstep(&mut self) -> String {
        let (n, k) = (self.s.n, self.unroll());
        let (i, x) = (self.name("i"), self.name("x"));
        let (op, c) = (self.op(), self.lit());
        let u = if k > 1 { format!(" unroll {k}") } else { String::new() };
        format!(
            "for (let {i} = 0..{n}){u} {{\n  let {x} = A[{i}];\n  ---\n  A[{i}] := {x} {op} {c};\n}}\n"
        )
    }

    /// Block-wise reduction through a suffix view and an inner unrolled loop.
    fn suffix(&mut self) -> String {
        let (n, b, t) = (self.s.n, self.s.b, ty(self.s.elem));
        let (k, j, w, acc, x) = (
            self.name("k"),
            self.name("j"),
            self.name("w"),
            self.name("t"),
            self.name("x"),
        );
        let red = self.red();
        let u = if b > 1 { format!(" unroll {b}") } else { String::new() };
        format!(
            "for (let {k} = 0..{}) {{\n  view {w} = suffix A[by {b} * {k}];\n  let {acc}: {t} = 0;\n  for (let {j} = 0..{b}){u} {{\n    let {x} = {w}[{j}];\n  }} combine {{\n    {acc} {red} {x};\n  }}\n  ---\n  B[{k}] := {acc};\n}}\n",
            n / b
        )
    }

    /// Sliding windows whose start is not a multiple of the banking factor.
    fn shift(&mut self) -> String {
        let (n, b, t) = (self.s.n, self.s.b, ty(self.s.elem));
        let (k, j, w, acc, x) = (
            self.name("k"),
            self.name("j"),
            self.name("w"),
            self.name("t"),
            self.name("x"),
        );
        let u = if b > 1 { format!(" unroll {b}") } else { String::new() };
        let square = self.rng.gen_bool(0.5);
        let (trips, off) = if square {
            let mut m = 0;
            while (m + 1) * (m + 1) + b <= n {
                m += 1;
            }
            (m + 1, format!("{k} * {k}"))
        } else {
            (n - b + 1, k.clone())
        };
        format!(
            "for (let {k} = 0..{trips}) {{\n  view {w} = shift A[by {off}];\n  let {acc}: {t} = 0;\n  for (let {j} = 0..{b}){u} {{\n    let {x} = {w}[{j}];\n  }} combine {{\n    {acc} += {x};\n  }}\n  ---\n  C[{k}] := {acc};\n}}\n"
        )
    }

    /// Blocked reduction: a split view exposes `b` lockstep lanes.
    fn split(&mut self) -> String {
        let (n, b, t) = (self.s.n, self.s.b, ty(self.s.elem));
        let (i, j, sp, acc, s, x) = (
            self.name("i"),
            self.name("j"),
            self.name("sp"),
            self.name("t"),
            self.name("s"),
            self.name("x"),
        );
        let o = self.slot();
        let u = if b > 1 { format!(" unroll {b}") } else { String::new() };
        format!(
            "view {sp} = split A[by {b}];\nlet {s}: {t} = 0;\nfor (let {i} = 0..{}) {{\n  let {acc}: {t} = 0;\n  for (let {j} = 0..{b}){u} {{\n    let {x} = {sp}[{j}][{i}];\n  }} combine {{\n    {acc} += {x};\n  }}\n}} combine {{\n  {s} += {acc};\n}}\n---\nO[{o}] := {s};\n",
            n / b
        )
    }

    fn while_if(&mut self) -> String {
        let n = self.s.n;
        let (m, x) = (self.name("n"), self.name("x"));
        let (c1, c2, op) = (self.lit(), self.lit(), self.op());
        let q = self.rng.gen_range(2..=3);
        format!(
            "let {m} = 0;\nwhile ({m} < {n}) {{\n  let {x} = C[{m}];\n  ---\n  if ({m} % {q} == 0) {{\n    C[{m}] := {x} {op} {c1};\n  }} else {{\n    C[{m}] := {c2};\n  }}\n  ---\n  {m} := {m} + 1;\n}}\n"
        )
    }

    fn physical(&mut self) -> String {
        let (n, b) = (self.s.n, self.s.b);
        let bank = self.rng.gen_range(0..b);
        let off = self.rng.gen_range(0..n / b);
        let (x, c) = (self.name("x"), self.lit());
        let o = self.slot();
        format!("let {x} = A{{{bank}}}[{off}];\nB{{{bank}}}[{off}] := {c};\n---\nO[{o}] := {x};\n")
    }

    fn two_dim(&mut self) -> String {
        let ((r, rb), (c, cb)) = (self.s.rows, self.s.cols);
        let (i, j) = (self.name("i"), self.name("j"));
        let (op, k) = (self.op(), self.lit());
        let ur = if rb > 1 { format!(" unroll {rb}") } else { String::new() };
        let uc = if cb > 1 { format!(" unroll {cb}") } else { String::new() };
        format!(
            "for (let {i} = 0..{r}){ur} {{\n  for (let {j} = 0..{c}){uc} {{\n    E[{i}][{j}] := D[{i}][{j}] {op} {k};\n  }}\n}}\n"
        )
    }

    fn ports(&mut self) -> String {
        let n = self.s.n;
        let (a, b) = (self.rng.gen_range(0..n), self.rng.gen_range(0..n));
        let (x, op, c) = (self.name("x"), self.op(), self.lit());
        format!("let {x} = P[{a}];\nP[{b}] := {x} {op} {c};\n")
    }

    /// Each unrolled copy folds a whole row of C into its own element of B.
    fn mem_reduce(&mut self) -> String {
        let (n, k) = (self.s.n, self.unroll());
        let (i, j, v) = (self.name("i"), self.name("j"), self.name("v"));
        let m = self.rng.gen_range(1..=4);
        let red = self.red();
        let u = if k > 1 { format!(" unroll {k}") } else { String::new() };
        format!(
            "for (let {i} = 0..{n}){u} {{\n  for (let {j} = 0..{m}) {{\n    let {v} = C[{j}];\n  }} combine {{\n    B[{i}] {red} {v};\n  }}\n}}\n"
        )
    }
}
