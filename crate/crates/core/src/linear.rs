//! Affine index forms `c + Σ kᵢ·xᵢ` over named integer atoms.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct LinearForm {
    pub terms: BTreeMap<String, i64>,
    pub constant: i64,
}

pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

pub fn lcm(a: i64, b: i64) -> i64 {
    if a == 0 || b == 0 {
        return 0;
    }
    (a / gcd(a, b) * b).abs()
}

impl LinearForm {
    pub fn constant(c: i64) -> Self {
        LinearForm {
            terms: BTreeMap::new(),
            constant: c,
        }
    }

    pub fn var(name: &str) -> Self {
        Self::term(name, 1)
    }

    pub fn term(name: &str, coef: i64) -> Self {
        let mut f = Self::constant(0);
        if coef != 0 {
            f.terms.insert(name.to_string(), coef);
        }
        f
    }

    pub fn is_const(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn mentions(&self, name: &str) -> bool {
        self.terms.contains_key(name)
    }

    pub fn add(&self, other: &LinearForm) -> LinearForm {
        let mut out = self.clone();
        out.constant += other.constant;
        for (k, v) in &other.terms {
            let e = out.terms.entry(k.clone()).or_insert(0);
            *e += v;
            if *e == 0 {
                out.terms.remove(k);
            }
        }
        out
    }

    pub fn scale(&self, k: i64) -> LinearForm {
        if k == 0 {
            return Self::constant(0);
        }
        LinearForm {
            terms: self.terms.iter().map(|(n, c)| (n.clone(), c * k)).collect(),
            constant: self.constant * k,
        }
    }

    pub fn add_const(&self, c: i64) -> LinearForm {
        let mut out = self.clone();
        out.constant += c;
        out
    }

    /// Replaces atom `name` by the form `with`.
    pub fn substitute(&self, name: &str, with: &LinearForm) -> LinearForm {
        match self.terms.get(name) {
            None => self.clone(),
            Some(&c) => {
                let mut rest = self.clone();
                rest.terms.remove(name);
                rest.add(&with.scale(c))
            }
        }
    }

    /// `g = gcd(banks, every coefficient)`; the form can only land on banks
    /// congruent to the constant modulo `g`.
    pub fn bank_stride(&self, banks: u64) -> u64 {
        let mut g = banks as i64;
        for c in self.terms.values() {
            g = gcd(g, *c);
        }
        g.max(1) as u64
    }

    /// Every bank of a `banks`-way cyclic partition this index may touch.
    pub fn bank_set(&self, banks: u64) -> Vec<u64> {
        let g = self.bank_stride(banks);
        let r = self.constant.rem_euclid(g as i64) as u64;
        (0..banks / g).map(|t| r + g * t).collect()
    }

    pub fn static_bank(&self, banks: u64) -> Option<u64> {
        if self.bank_stride(banks) == banks {
            Some(self.constant.rem_euclid(banks as i64) as u64)
        } else {
            None
        }
    }

    pub fn eval(&self, env: &dyn Fn(&str) -> Option<i64>) -> Option<i64> {
        let mut v = self.constant;
        for (n, c) in &self.terms {
            v += c * env(n)?;
        }
        Some(v)
    }

    /// Exact division when every coefficient and the constant divide by `d`.
    pub fn div_exact(&self, d: i64) -> Option<LinearForm> {
        if self.constant % d != 0 || self.terms.values().any(|c| c % d != 0) {
            return None;
        }
        Some(LinearForm {
            terms: self.terms.iter().map(|(n, c)| (n.clone(), c / d)).collect(),
            constant: self.constant / d,
        })
    }
}

impl fmt::Display for LinearForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (n, c) in &self.terms {
            let (sign, mag) = if *c < 0 { ("-", -c) } else { ("+", *c) };
            if first {
                if *c < 0 {
                    f.write_str("-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            if mag == 1 {
                write!(f, "{n}")?;
            } else {
                write!(f, "{mag}*{n}")?;
            }
            first = false;
        }
        if first {
            write!(f, "{}", self.constant)
        } else if self.constant > 0 {
            write!(f, " + {}", self.constant)
        } else if self.constant < 0 {
            write!(f, " - {}", -self.constant)
        } else {
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bank_sets() {
        // 2t + u over 4 banks touches {u, u + 2}.
        let f = LinearForm::term("t", 2).add_const(1);
        assert_eq!(f.bank_set(4), vec![1, 3]);
        assert_eq!(f.static_bank(4), None);
        assert_eq!(f.static_bank(2), Some(1));
        assert_eq!(LinearForm::constant(8).bank_set(8), vec![0]);
        assert_eq!(LinearForm::var("x").bank_set(4), vec![0, 1, 2, 3]);
    }

    #[test]
    fn arithmetic() {
        let f = LinearForm::var("i").scale(4).add_const(2);
        let g = f.substitute("i", &LinearForm::var("j").add_const(1));
        assert_eq!(g, LinearForm::term("j", 4).add_const(6));
        assert_eq!(g.div_exact(2), Some(LinearForm::term("j", 2).add_const(3)));
        assert_eq!(g.div_exact(4), None);
        assert_eq!(g.to_string(), "4*j + 6");
        assert_eq!(g.eval(&|_| Some(2)), Some(14));
        assert_eq!(f.add(&LinearForm::term("i", -4)), LinearForm::constant(2));
    }
}
