//! Sorted terms over state variables, step-indexed instantiation and
//! ground evaluation.
//!
//! A [`Term`] mentions variables at one of three times: the current state,
//! the next (primed) state, or a concrete unrolling step. Formulas of a
//! transition system are written over current/next variables and then
//! instantiated at concrete steps before they reach the solver.

mod eval;
mod print;
mod value;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

pub use eval::evaluate;
pub(crate) use print::smt_symbol;
pub use value::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Bool,
    Int,
    Real,
}

impl Sort {
    pub fn is_numeric(self) -> bool {
        matches!(self, Sort::Int | Sort::Real)
    }

    pub fn smt_name(self) -> &'static str {
        match self {
            Sort::Bool => "Bool",
            Sort::Int => "Int",
            Sort::Real => "Real",
        }
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sort::Bool => "bool",
            Sort::Int => "int",
            Sort::Real => "real",
        })
    }
}

/// When a variable occurrence is read.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Time {
    Current,
    Next,
    Step(u32),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Var {
    pub name: Arc<str>,
    pub sort: Sort,
    pub time: Time,
}

/// A state variable pinned to an unrolling step. Identity is `(name, step)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexedVar {
    pub name: Arc<str>,
    pub step: u32,
}

impl IndexedVar {
    pub fn new(name: impl Into<Arc<str>>, step: u32) -> Self {
        IndexedVar { name: name.into(), step }
    }
}

impl fmt::Display for IndexedVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.name, self.step)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Op {
    Add,
    Sub,
    Neg,
    /// Linear multiplication: at least one argument is a constant.
    Mul,
    /// Integer (euclidean) division by a nonzero integer constant.
    IntDiv,
    /// Integer (euclidean) remainder by a nonzero integer constant.
    Mod,
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
    Not,
    And,
    Or,
    Xor,
    Implies,
    Iff,
    Ite,
    /// Uninterpreted function symbol with its result sort.
    Uf(Arc<str>, Sort),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Var(Var),
    Const(Value),
    App(Op, Vec<Term>),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LogicError {
    #[error("operator {op:?} applied to {got} argument(s)")]
    Arity { op: Op, got: usize },
    #[error("operator {op:?} is ill-sorted on argument sorts {sorts:?}")]
    IllSorted { op: Op, sorts: Vec<Sort> },
    #[error("nonlinear multiplication: no constant factor")]
    Nonlinear,
    #[error("divisor must be a nonzero integer constant")]
    BadDivisor,
}

#[allow(clippy::should_implement_trait)]
impl Term {
    pub fn var(name: impl Into<Arc<str>>, sort: Sort) -> Term {
        Term::Var(Var { name: name.into(), sort, time: Time::Current })
    }

    pub fn next_var(name: impl Into<Arc<str>>, sort: Sort) -> Term {
        Term::Var(Var { name: name.into(), sort, time: Time::Next })
    }

    pub fn at(name: impl Into<Arc<str>>, sort: Sort, step: u32) -> Term {
        Term::Var(Var { name: name.into(), sort, time: Time::Step(step) })
    }

    pub fn int(v: i64) -> Term {
        Term::Const(Value::int(v))
    }

    pub fn big_int(v: BigInt) -> Term {
        Term::Const(Value::Int(v))
    }

    pub fn real(v: BigRational) -> Term {
        Term::Const(Value::Real(v))
    }

    pub fn bool(b: bool) -> Term {
        Term::Const(Value::Bool(b))
    }

    pub fn tt() -> Term {
        Term::bool(true)
    }

    pub fn ff() -> Term {
        Term::bool(false)
    }

    /// Builds an application, checking sorts and the linearity restrictions.
    pub fn apply(op: Op, args: Vec<Term>) -> Result<Term, LogicError> {
        let sorts: Vec<Sort> = args.iter().map(Term::sort).collect();
        let ill = || LogicError::IllSorted { op: op.clone(), sorts: sorts.clone() };
        let arity = |ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(LogicError::Arity { op: op.clone(), got: args.len() })
            }
        };
        match &op {
            Op::Add | Op::Sub => {
                arity(args.len() >= 2)?;
                if !sorts[0].is_numeric() || sorts.iter().any(|s| *s != sorts[0]) {
                    return Err(ill());
                }
            }
            Op::Neg => {
                arity(args.len() == 1)?;
                if !sorts[0].is_numeric() {
                    return Err(ill());
                }
            }
            Op::Mul => {
                arity(args.len() == 2)?;
                if !sorts[0].is_numeric() || sorts[0] != sorts[1] {
                    return Err(ill());
                }
                if !args.iter().any(|a| matches!(a, Term::Const(_))) {
                    return Err(LogicError::Nonlinear);
                }
            }
            Op::IntDiv | Op::Mod => {
                arity(args.len() == 2)?;
                if sorts[0] != Sort::Int || sorts[1] != Sort::Int {
                    return Err(ill());
                }
                match &args[1] {
                    Term::Const(Value::Int(d)) if !d.is_zero() => {}
                    _ => return Err(LogicError::BadDivisor),
                }
            }
            Op::Lt | Op::Le | Op::Ge | Op::Gt => {
                arity(args.len() == 2)?;
                if !sorts[0].is_numeric() || sorts[0] != sorts[1] {
                    return Err(ill());
                }
            }
            Op::Eq => {
                arity(args.len() == 2)?;
                if sorts[0] != sorts[1] {
                    return Err(ill());
                }
            }
            Op::Not => {
                arity(args.len() == 1)?;
                if sorts[0] != Sort::Bool {
                    return Err(ill());
                }
            }
            Op::And | Op::Or => {
                arity(args.len() >= 2)?;
                if sorts.iter().any(|s| *s != Sort::Bool) {
                    return Err(ill());
                }
            }
            Op::Xor | Op::Implies | Op::Iff => {
                arity(args.len() == 2)?;
                if sorts.iter().any(|s| *s != Sort::Bool) {
                    return Err(ill());
                }
            }
            Op::Ite => {
                arity(args.len() == 3)?;
                if sorts[0] != Sort::Bool || sorts[1] != sorts[2] {
                    return Err(ill());
                }
            }
            Op::Uf(..) => {}
        }
        Ok(Term::App(op, args))
    }

    fn build(op: Op, args: Vec<Term>) -> Term {
        match Term::apply(op, args) {
            Ok(t) => t,
            Err(e) => panic!("ill-formed term construction: {e}"),
        }
    }

    pub fn add(a: Term, b: Term) -> Term {
        Term::build(Op::Add, vec![a, b])
    }
    pub fn sub(a: Term, b: Term) -> Term {
        Term::build(Op::Sub, vec![a, b])
    }
    pub fn neg(a: Term) -> Term {
        Term::build(Op::Neg, vec![a])
    }
    pub fn mul(a: Term, b: Term) -> Term {
        Term::build(Op::Mul, vec![a, b])
    }
    pub fn lt(a: Term, b: Term) -> Term {
        Term::build(Op::Lt, vec![a, b])
    }
    pub fn le(a: Term, b: Term) -> Term {
        Term::build(Op::Le, vec![a, b])
    }
    pub fn ge(a: Term, b: Term) -> Term {
        Term::build(Op::Ge, vec![a, b])
    }
    pub fn gt(a: Term, b: Term) -> Term {
        Term::build(Op::Gt, vec![a, b])
    }
    pub fn eq(a: Term, b: Term) -> Term {
        Term::build(Op::Eq, vec![a, b])
    }
    pub fn not(a: Term) -> Term {
        Term::build(Op::Not, vec![a])
    }
    pub fn implies(a: Term, b: Term) -> Term {
        Term::build(Op::Implies, vec![a, b])
    }
    pub fn iff(a: Term, b: Term) -> Term {
        Term::build(Op::Iff, vec![a, b])
    }
    pub fn ite(c: Term, t: Term, e: Term) -> Term {
        Term::build(Op::Ite, vec![c, t, e])
    }

    /// Conjunction; `true` when empty and the sole element when singleton.
    pub fn and_all(mut parts: Vec<Term>) -> Term {
        match parts.len() {
            0 => Term::tt(),
            1 => parts.pop().unwrap(),
            _ => Term::build(Op::And, parts),
        }
    }

    /// Disjunction; `false` when empty.
    pub fn or_all(mut parts: Vec<Term>) -> Term {
        match parts.len() {
            0 => Term::ff(),
            1 => parts.pop().unwrap(),
            _ => Term::build(Op::Or, parts),
        }
    }

    pub fn sort(&self) -> Sort {
        match self {
            Term::Var(v) => v.sort,
            Term::Const(c) => c.sort(),
            Term::App(op, args) => match op {
                Op::Add | Op::Sub | Op::Neg | Op::Mul => args[0].sort(),
                Op::IntDiv | Op::Mod => Sort::Int,
                Op::Ite => args[1].sort(),
                Op::Uf(_, s) => *s,
                _ => Sort::Bool,
            },
        }
    }

    /// Rewrites every variable occurrence.
    pub fn map_vars(&self, f: &mut impl FnMut(&Var) -> Term) -> Term {
        match self {
            Term::Var(v) => f(v),
            Term::Const(_) => self.clone(),
            Term::App(op, args) => {
                Term::App(op.clone(), args.iter().map(|a| a.map_vars(f)).collect())
            }
        }
    }

    /// Pre-order traversal over all subterms, including `self`.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Term)) {
        f(self);
        if let Term::App(_, args) = self {
            for a in args {
                a.visit(f);
            }
        }
    }

    /// Top-level conjuncts (flattening nested `and`).
    pub fn conjuncts(&self) -> Vec<&Term> {
        let mut out = Vec::new();
        fn go<'a>(t: &'a Term, out: &mut Vec<&'a Term>) {
            match t {
                Term::App(Op::And, args) => args.iter().for_each(|a| go(a, out)),
                Term::Const(Value::Bool(true)) => {}
                _ => out.push(t),
            }
        }
        go(self, &mut out);
        out
    }

    /// True when the term mentions a next-state variable.
    pub fn mentions_next(&self) -> bool {
        let mut found = false;
        self.visit(&mut |t| {
            if let Term::Var(v) = t {
                found |= v.time == Time::Next;
            }
        });
        found
    }

    /// Names (with sort and time) of every variable occurring in the term.
    pub fn vars(&self) -> BTreeSet<(Arc<str>, Time)> {
        let mut out = BTreeSet::new();
        self.visit(&mut |t| {
            if let Term::Var(v) = t {
                out.insert((v.name.clone(), v.time));
            }
        });
        out
    }

    pub fn depth(&self) -> usize {
        match self {
            Term::App(_, args) => 1 + args.iter().map(Term::depth).max().unwrap_or(0),
            _ => 0,
        }
    }

    /// Human-readable rendering, e.g. `(x@2 <= 3)`.
    pub fn pretty(&self) -> String {
        self.to_string()
    }

    /// SMT-LIB 2 rendering; indexed variables print as `name$step`.
    pub fn to_smt(&self) -> String {
        let mut s = String::new();
        print::write_smt(self, &mut s);
        s
    }
}

/// Replaces every current-state variable `v` by `v@step`.
pub fn instantiate_state(f: &Term, step: u32) -> Term {
    debug_assert!(!f.mentions_next(), "state formula mentions a next-state variable");
    instantiate_trans(f, step)
}

/// Replaces current-state variables by `step` and next-state ones by `step + 1`.
pub fn instantiate_trans(t: &Term, step: u32) -> Term {
    t.map_vars(&mut |v| {
        let time = match v.time {
            Time::Current => Time::Step(step),
            Time::Next => Time::Step(step + 1),
            s @ Time::Step(_) => s,
        };
        Term::Var(Var { name: v.name.clone(), sort: v.sort, time })
    })
}

pub fn free_indexed_vars(f: &Term) -> BTreeSet<IndexedVar> {
    let mut out = BTreeSet::new();
    f.visit(&mut |t| {
        if let Term::Var(Var { name, time: Time::Step(step), .. }) = t {
            out.insert(IndexedVar { name: name.clone(), step: *step });
        }
    });
    out
}

/// A partial map from indexed variables to ground values.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Assignment(BTreeMap<IndexedVar, Value>);

impl Assignment {
    pub fn new() -> Self {
        Assignment::default()
    }

    pub fn insert(&mut self, var: IndexedVar, value: Value) -> Option<Value> {
        self.0.insert(var, value)
    }

    pub fn set(&mut self, name: &str, step: u32, value: Value) {
        self.0.insert(IndexedVar::new(name, step), value);
    }

    pub fn get(&self, var: &IndexedVar) -> Option<&Value> {
        self.0.get(var)
    }

    pub fn lookup(&self, name: &str, step: u32) -> Option<&Value> {
        self.0.get(&IndexedVar::new(name, step))
    }

    pub fn contains(&self, var: &IndexedVar) -> bool {
        self.0.contains_key(var)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&IndexedVar, &Value)> {
        self.0.iter()
    }

    /// Keeps only the bindings whose variable satisfies `keep`.
    pub fn restrict(&self, mut keep: impl FnMut(&IndexedVar) -> bool) -> Assignment {
        Assignment(self.0.iter().filter(|(k, _)| keep(k)).map(|(k, v)| (k.clone(), v.clone())).collect())
    }

    /// The bindings at `step`, re-indexed to step `to`.
    pub fn slice(&self, step: u32, to: u32) -> Assignment {
        Assignment(
            self.0
                .iter()
                .filter(|(k, _)| k.step == step)
                .map(|(k, v)| (IndexedVar { name: k.name.clone(), step: to }, v.clone()))
                .collect(),
        )
    }

    pub fn extend(&mut self, other: &Assignment) {
        for (k, v) in other.iter() {
            self.0.insert(k.clone(), v.clone());
        }
    }
}

impl FromIterator<(IndexedVar, Value)> for Assignment {
    fn from_iter<I: IntoIterator<Item = (IndexedVar, Value)>>(iter: I) -> Self {
        Assignment(iter.into_iter().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Term {
        Term::var("x", Sort::Int)
    }

    #[test]
    fn instantiate_state_renames() {
        let f = Term::le(x(), Term::int(3));
        assert_eq!(instantiate_state(&f, 2), Term::le(Term::at("x", Sort::Int, 2), Term::int(3)));
        assert_eq!(instantiate_state(&Term::tt(), 7), Term::tt());
        let init = Term::eq(x(), Term::int(0));
        assert_eq!(instantiate_state(&init, 0).pretty(), "(x@0 = 0)");
    }

    #[test]
    fn instantiate_trans_shifts_primes() {
        let t = Term::eq(Term::next_var("x", Sort::Int), Term::add(x(), Term::int(1)));
        assert_eq!(instantiate_trans(&t, 0).pretty(), "(x@1 = (x@0 + 1))");
        let b = Term::eq(Term::next_var("b", Sort::Bool), Term::not(Term::var("b", Sort::Bool)));
        assert_eq!(instantiate_trans(&b, 4).pretty(), "(b@5 = (not b@4))");
        let ctr = Term::eq(
            Term::next_var("x", Sort::Int),
            Term::ite(Term::eq(x(), Term::int(3)), Term::int(0), Term::add(x(), Term::int(1))),
        );
        assert_eq!(instantiate_trans(&ctr, 1).pretty(), "(x@2 = (if (x@1 = 3) then 0 else (x@1 + 1)))");
    }

    #[test]
    fn free_vars_of_indexed_formulas() {
        let f = Term::le(Term::at("x", Sort::Int, 2), Term::int(3));
        assert_eq!(free_indexed_vars(&f), [IndexedVar::new("x", 2)].into_iter().collect());
        assert!(free_indexed_vars(&Term::tt()).is_empty());
        let g = Term::eq(Term::at("x", Sort::Int, 1), Term::add(Term::at("x", Sort::Int, 0), Term::int(1)));
        let got: Vec<_> = free_indexed_vars(&g).into_iter().collect();
        assert_eq!(got, vec![IndexedVar::new("x", 0), IndexedVar::new("x", 1)]);
    }

    #[test]
    fn sort_checking_rejects_bad_terms() {
        assert!(matches!(
            Term::apply(Op::Add, vec![Term::tt(), Term::int(1)]),
            Err(LogicError::IllSorted { .. })
        ));
        assert_eq!(Term::apply(Op::Mul, vec![x(), x()]), Err(LogicError::Nonlinear));
        assert_eq!(Term::apply(Op::IntDiv, vec![x(), Term::int(0)]), Err(LogicError::BadDivisor));
        assert_eq!(Term::apply(Op::Mod, vec![x(), x()]), Err(LogicError::BadDivisor));
        assert!(Term::apply(Op::Ite, vec![Term::tt(), Term::int(1), Term::tt()]).is_err());
        assert!(Term::apply(Op::Mul, vec![Term::int(2), x()]).is_ok());
    }

    #[test]
    fn conjuncts_flatten_nested_ands() {
        let a = Term::var("a", Sort::Bool);
        let b = Term::var("b", Sort::Bool);
        let c = Term::var("c", Sort::Bool);
        let f = Term::and_all(vec![a.clone(), Term::and_all(vec![b.clone(), c.clone()]), Term::tt()]);
        assert_eq!(f.conjuncts(), vec![&a, &b, &c]);
    }
}
