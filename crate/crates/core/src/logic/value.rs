use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::Sort;

/// A ground value. Integers are unbounded and reals are exact rationals.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Value {
    Bool(bool),
    Int(BigInt),
    Real(BigRational),
}

impl Value {
    pub fn int(v: i64) -> Value {
        Value::Int(BigInt::from(v))
    }

    /// The rational `num / den`.
    pub fn real(num: i64, den: i64) -> Value {
        Value::Real(BigRational::new(num.into(), den.into()))
    }

    pub fn sort(&self) -> Sort {
        match self {
            Value::Bool(_) => Sort::Bool,
            Value::Int(_) => Sort::Int,
            Value::Real(_) => Sort::Real,
        }
    }

    /// The value used to complete a model where the solver left a variable free.
    pub fn default_for(sort: Sort) -> Value {
        match sort {
            Sort::Bool => Value::Bool(false),
            Sort::Int => Value::Int(BigInt::zero()),
            Sort::Real => Value::Real(BigRational::zero()),
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<&BigInt> {
        match self {
            Value::Int(i) => Some(i),
            _ => None,
        }
    }
}

/// Rationals print as `p/q`, integral rationals as `p`.
impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Real(r) => {
                if r.denom().is_one() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
        }
    }
}

/// SMT-LIB rendering of a constant.
pub(crate) fn smt_value(v: &Value) -> String {
    match v {
        Value::Bool(b) => b.to_string(),
        Value::Int(i) => {
            if i.is_negative() {
                format!("(- {})", i.abs())
            } else {
                i.to_string()
            }
        }
        Value::Real(r) => {
            let mag = if r.denom().is_one() {
                format!("{}.0", r.numer().abs())
            } else {
                format!("(/ {}.0 {}.0)", r.numer().abs(), r.denom())
            };
            if r.is_negative() {
                format!("(- {mag})")
            } else {
                mag
            }
        }
    }
}
