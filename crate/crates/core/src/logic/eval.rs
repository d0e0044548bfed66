use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use super::{Assignment, IndexedVar, Op, Term, Time, Value};

/// Evaluates a term under an assignment with exact arithmetic.
///
/// Returns `None` (undefined) when a variable the term mentions is unbound,
/// is not step-indexed, or when an uninterpreted function is applied.
pub fn evaluate(t: &Term, a: &Assignment) -> Option<Value> {
    match t {
        Term::Const(c) => Some(c.clone()),
        Term::Var(v) => match v.time {
            Time::Step(step) => a.get(&IndexedVar { name: v.name.clone(), step }).cloned(),
            _ => None,
        },
        Term::App(op, args) => {
            let vals = args.iter().map(|x| evaluate(x, a)).collect::<Option<Vec<_>>>()?;
            apply(op, vals)
        }
    }
}

fn euclid_div_mod(n: &BigInt, d: &BigInt) -> (BigInt, BigInt) {
    let r = n.mod_floor(&d.abs());
    let q = (n - &r) / d;
    (q, r)
}

fn arith(vals: &[Value], fi: impl Fn(&BigInt, &BigInt) -> BigInt, fr: impl Fn(&BigRational, &BigRational) -> BigRational) -> Option<Value> {
    let mut it = vals.iter();
    let mut acc = it.next()?.clone();
    for v in it {
        acc = match (&acc, v) {
            (Value::Int(x), Value::Int(y)) => Value::Int(fi(x, y)),
            (Value::Real(x), Value::Real(y)) => Value::Real(fr(x, y)),
            _ => return None,
        };
    }
    Some(acc)
}

fn compare(vals: &[Value]) -> Option<std::cmp::Ordering> {
    match (&vals[0], &vals[1]) {
        (Value::Int(x), Value::Int(y)) => Some(x.cmp(y)),
        (Value::Real(x), Value::Real(y)) => Some(x.cmp(y)),
        _ => None,
    }
}

fn bools(vals: &[Value]) -> Option<Vec<bool>> {
    vals.iter().map(Value::as_bool).collect()
}

fn apply(op: &Op, vals: Vec<Value>) -> Option<Value> {
    use std::cmp::Ordering::*;
    Some(match op {
        Op::Add => arith(&vals, |x, y| x + y, |x, y| x + y)?,
        Op::Sub => arith(&vals, |x, y| x - y, |x, y| x - y)?,
        Op::Mul => arith(&vals, |x, y| x * y, |x, y| x * y)?,
        Op::Neg => match &vals[0] {
            Value::Int(x) => Value::Int(-x),
            Value::Real(x) => Value::Real(-x),
            Value::Bool(_) => return None,
        },
        Op::IntDiv | Op::Mod => {
            let (n, d) = (vals[0].as_int()?, vals[1].as_int()?);
            if d.is_zero() {
                return None;
            }
            let (q, r) = euclid_div_mod(n, d);
            Value::Int(if *op == Op::IntDiv { q } else { r })
        }
        Op::Lt => Value::Bool(compare(&vals)? == Less),
        Op::Le => Value::Bool(compare(&vals)? != Greater),
        Op::Ge => Value::Bool(compare(&vals)? != Less),
        Op::Gt => Value::Bool(compare(&vals)? == Greater),
        Op::Eq | Op::Iff => Value::Bool(vals[0] == vals[1]),
        Op::Not => Value::Bool(!vals[0].as_bool()?),
        Op::And => Value::Bool(bools(&vals)?.into_iter().all(|b| b)),
        Op::Or => Value::Bool(bools(&vals)?.into_iter().any(|b| b)),
        Op::Xor => {
            let b = bools(&vals)?;
            Value::Bool(b[0] != b[1])
        }
        Op::Implies => {
            let b = bools(&vals)?;
            Value::Bool(!b[0] || b[1])
        }
        Op::Ite => {
            let mut vals = vals;
            let c = vals[0].as_bool()?;
            vals.swap_remove(if c { 1 } else { 2 })
        }
        Op::Uf(..) => return None,
    })
}
