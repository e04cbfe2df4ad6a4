//! Scalar values: two's-complement `bit<n>`, binary64 `float`, `bool`.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::ast::{BinOp, ScalarType};

#[derive(Clone, Copy, Debug)]
pub enum Value {
    /// Low `width` bits of `bits` are significant; the rest are zero.
    Bit { width: u32, bits: u64 },
    Float(f64),
    Bool(bool),
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::Bit { width: a, bits: x }, Value::Bit { width: b, bits: y }) => a == b && x == y,
            (Value::Float(a), Value::Float(b)) => a.to_bits() == b.to_bits(),
            (Value::Bool(a), Value::Bool(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Value {}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivByZero,
    #[error("operator `{op}` cannot combine {lhs} and {rhs}")]
    Mismatch {
        op: &'static str,
        lhs: ScalarType,
        rhs: ScalarType,
    },
}

fn mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

impl Value {
    pub fn bit(width: u32, v: i64) -> Value {
        Value::Bit {
            width,
            bits: (v as u64) & mask(width),
        }
    }

    pub fn b32(v: i64) -> Value {
        Value::bit(32, v)
    }

    pub fn zero(ty: ScalarType) -> Value {
        match ty {
            ScalarType::Bit(w) => Value::bit(w, 0),
            ScalarType::Float => Value::Float(0.0),
            ScalarType::Bool => Value::Bool(false),
        }
    }

    pub fn ty(&self) -> ScalarType {
        match self {
            Value::Bit { width, .. } => ScalarType::Bit(*width),
            Value::Float(_) => ScalarType::Float,
            Value::Bool(_) => ScalarType::Bool,
        }
    }

    /// Signed interpretation of a bit value.
    pub fn as_i64(&self) -> Option<i64> {
        match *self {
            Value::Bit { width, bits } => {
                if width >= 64 {
                    Some(bits as i64)
                } else {
                    let shift = 64 - width;
                    Some(((bits << shift) as i64) >> shift)
                }
            }
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match *self {
            Value::Bool(b) => Some(b),
            _ => None,
        }
    }

    /// Converts a JSON-ish number into a value of type `ty`.
    pub fn from_f64(ty: ScalarType, v: f64) -> Value {
        match ty {
            ScalarType::Bit(w) => Value::bit(w, v as i64),
            ScalarType::Float => Value::Float(v),
            ScalarType::Bool => Value::Bool(v != 0.0),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match *self {
            Value::Bit { .. } => serde_json::Value::from(self.as_i64().unwrap()),
            Value::Float(f) => serde_json::Number::from_f64(f)
                .map(serde_json::Value::Number)
                .unwrap_or_else(|| serde_json::Value::String(format!("{f:?}"))),
            Value::Bool(b) => serde_json::Value::Bool(b),
        }
    }

    pub fn binop(op: BinOp, a: Value, b: Value) -> Result<Value, EvalError> {
        use Value::*;
        let mismatch = || EvalError::Mismatch {
            op: op.symbol(),
            lhs: a.ty(),
            rhs: b.ty(),
        };
        match (a, b) {
            (Bit { width: w1, .. }, Bit { width: w2, .. }) if w1 == w2 => {
                let (x, y) = (a.as_i64().unwrap(), b.as_i64().unwrap());
                let w = w1;
                Ok(match op {
                    BinOp::Add => Value::bit(w, x.wrapping_add(y)),
                    BinOp::Sub => Value::bit(w, x.wrapping_sub(y)),
                    BinOp::Mul => Value::bit(w, x.wrapping_mul(y)),
                    BinOp::Div => {
                        if y == 0 {
                            return Err(EvalError::DivByZero);
                        }
                        Value::bit(w, x.wrapping_div(y))
                    }
                    BinOp::Rem => {
                        if y == 0 {
                            return Err(EvalError::DivByZero);
                        }
                        Value::bit(w, x.wrapping_rem(y))
                    }
                    BinOp::Eq => Bool(x == y),
                    BinOp::Ne => Bool(x != y),
                    BinOp::Lt => Bool(x < y),
                    BinOp::Le => Bool(x <= y),
                    BinOp::Gt => Bool(x > y),
                    BinOp::Ge => Bool(x >= y),
                    BinOp::And | BinOp::Or => return Err(mismatch()),
                })
            }
            (Float(x), Float(y)) => Ok(match op {
                BinOp::Add => Float(x + y),
                BinOp::Sub => Float(x - y),
                BinOp::Mul => Float(x * y),
                BinOp::Div => Float(x / y),
                BinOp::Eq => Bool(x == y),
                BinOp::Ne => Bool(x != y),
                BinOp::Lt => Bool(x < y),
                BinOp::Le => Bool(x <= y),
                BinOp::Gt => Bool(x > y),
                BinOp::Ge => Bool(x >= y),
                BinOp::Rem | BinOp::And | BinOp::Or => return Err(mismatch()),
            }),
            (Bool(x), Bool(y)) => Ok(match op {
                BinOp::And => Bool(x && y),
                BinOp::Or => Bool(x || y),
                BinOp::Eq => Bool(x == y),
                BinOp::Ne => Bool(x != y),
                _ => return Err(mismatch()),
            }),
            _ => Err(mismatch()),
        }
    }
}

/// Result type of `op` on two operands of type `t`, if defined.
pub fn binop_type(op: BinOp, t: ScalarType) -> Option<ScalarType> {
    match (op, t) {
        (BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div, ScalarType::Bit(_) | ScalarType::Float) => Some(t),
        (BinOp::Rem, ScalarType::Bit(_)) => Some(t),
        (BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge, ScalarType::Bit(_) | ScalarType::Float) => {
            Some(ScalarType::Bool)
        }
        (BinOp::Eq | BinOp::Ne, _) => Some(ScalarType::Bool),
        (BinOp::And | BinOp::Or, ScalarType::Bool) => Some(ScalarType::Bool),
        _ => None,
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bit { width: 32, .. } => write!(f, "{}", self.as_i64().unwrap()),
            Value::Bit { width, .. } => write!(f, "{}b{}", self.as_i64().unwrap(), width),
            Value::Float(x) => write!(f, "{x:?}"),
            Value::Bool(b) => write!(f, "{b}"),
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wraparound() {
        let a = Value::bit(8, 127);
        let b = Value::bit(8, 1);
        assert_eq!(Value::binop(BinOp::Add, a, b).unwrap().as_i64(), Some(-128));
        assert_eq!(Value::bit(8, 255).as_i64(), Some(-1));
        assert_eq!(
            Value::binop(BinOp::Div, Value::b32(i32::MIN as i64), Value::b32(-1))
                .unwrap()
                .as_i64(),
            Some(i32::MIN as i64)
        );
    }

    #[test]
    fn errors() {
        assert_eq!(
            Value::binop(BinOp::Div, Value::b32(1), Value::b32(0)),
            Err(EvalError::DivByZero)
        );
        assert!(Value::binop(BinOp::Add, Value::b32(1), Value::Float(1.0)).is_err());
        assert!(Value::binop(BinOp::Add, Value::b32(1), Value::bit(8, 1)).is_err());
    }

    #[test]
    fn floats_compare_bitwise_for_equality_of_values() {
        assert_eq!(Value::Float(f64::NAN), Value::Float(f64::NAN));
        assert_ne!(Value::Float(0.0), Value::Float(-0.0));
    }
}
