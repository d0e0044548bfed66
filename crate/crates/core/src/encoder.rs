//! Translation of a flattened program into a transition system `(I, T)`
//! and harvesting of the term pool used for candidate invariants.
//!
//! Every stream becomes a state variable. For an equation `v = e`:
//!
//! * `I` gets `v = init(e)`, where `a -> b` reads as `a` and `pre w` reads as
//!   a fresh unconstrained variable;
//! * `T` gets `v' = next(e)`, where `a -> b` reads as `b`, `pre w` reads as
//!   the current value of `w`, and every other variable is read primed.
//!
//! `pre` applied to anything but a variable is first rewritten through an
//! auxiliary stream `aux~N = e`, so `pre` only ever guards a state variable.

use std::collections::HashSet;
use std::fmt::Write;
use std::sync::Arc;

use thiserror::Error;

use crate::frontend::{BinOp, TExpr, TExprKind, TypedProgram, UnOp};
use crate::logic::{smt_symbol, Op, Sort, Term, Time, Value, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VarKind {
    /// Node input: constrained by neither `I` nor `T`.
    Input,
    /// Output or local stream of the (inlined) main node.
    Stream,
    /// Auxiliary stream introduced to normalize `pre`.
    Aux,
    /// Unconstrained value of a `pre` at the first instant. Never read by `T`.
    InitFresh,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateVar {
    pub name: Arc<str>,
    pub sort: Sort,
    pub kind: VarKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionSystem {
    pub state_vars: Vec<StateVar>,
    pub init: Term,
    pub trans: Term,
    /// Named state formulas to be proved invariant.
    pub properties: Vec<(String, Term)>,
}

impl TransitionSystem {
    pub fn new(state_vars: Vec<StateVar>, init: Term, trans: Term, properties: Vec<(String, Term)>) -> Self {
        TransitionSystem { state_vars, init, trans, properties }
    }

    pub fn var(&self, name: &str) -> Option<&StateVar> {
        self.state_vars.iter().find(|v| &*v.name == name)
    }

    /// The conjunction of all properties.
    pub fn property(&self) -> Term {
        Term::and_all(self.properties.iter().map(|(_, p)| p.clone()).collect())
    }

    pub fn current(&self, v: &StateVar) -> Term {
        Term::Var(Var { name: v.name.clone(), sort: v.sort, time: Time::Current })
    }

    /// Equality of the behaviour-relevant parts of states `i` and `j`.
    /// Variables only read at the first instant are ignored.
    pub fn states_equal(&self, i: u32, j: u32) -> Term {
        Term::and_all(
            self.state_vars
                .iter()
                .filter(|v| v.kind != VarKind::InitFresh)
                .map(|v| Term::eq(Term::at(v.name.clone(), v.sort, i), Term::at(v.name.clone(), v.sort, j)))
                .collect(),
        )
    }

    /// `I`, `T` and the properties in SMT-LIB syntax, for debugging.
    pub fn dump_smt(&self) -> String {
        let mut out = String::new();
        out.push_str("; state variables\n");
        for v in &self.state_vars {
            let kind = match v.kind {
                VarKind::Input => "input",
                VarKind::Stream => "stream",
                VarKind::Aux => "aux",
                VarKind::InitFresh => "init-fresh",
            };
            writeln!(out, "(declare-fun {} () {}) ; {kind}", smt_symbol(&v.name, Time::Current), v.sort.smt_name()).unwrap();
            writeln!(out, "(declare-fun {} () {})", smt_symbol(&v.name, Time::Next), v.sort.smt_name()).unwrap();
        }
        writeln!(out, "; initial condition\n(define-fun init () Bool\n  {})", self.init.to_smt()).unwrap();
        writeln!(out, "; transition relation\n(define-fun trans () Bool\n  {})", self.trans.to_smt()).unwrap();
        for (name, p) in &self.properties {
            writeln!(out, "; property {name}\n(define-fun {} () Bool {})", smt_symbol(&format!("prop.{name}"), Time::Current), p.to_smt())
                .unwrap();
        }
        out
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EncodeError {
    #[error("internal error: node call to `{0}` survived inlining")]
    ResidualCall(String),
    #[error("internal error: program must consist of exactly one inlined node")]
    NotFlattened,
    #[error("internal error: {0}")]
    IllSorted(#[from] crate::logic::LogicError),
}

/// Encodes a flattened, type-checked program as a transition system.
pub fn encode(p: &TypedProgram) -> Result<TransitionSystem, EncodeError> {
    if p.nodes.len() != 1 {
        return Err(EncodeError::NotFlattened);
    }
    let node = &p.nodes[0];
    let mut enc = Encoder { aux: Vec::new(), fresh: Vec::new(), aux_count: 0 };

    // Normalize `pre` arguments to variables; aux equations are appended.
    let mut equations: Vec<(String, Sort, TExpr)> = Vec::new();
    for eq in &node.equations {
        let decl = node.decl(&eq.lhs).expect("typechecked");
        let rhs = enc.normalize(&eq.rhs)?;
        equations.push((eq.lhs.clone(), decl.sort, rhs));
    }
    let aux_eqs = std::mem::take(&mut enc.aux);
    equations.extend(aux_eqs.iter().cloned());

    let mut init = Vec::new();
    let mut trans = Vec::new();
    for (lhs, sort, rhs) in &equations {
        init.push(Term::eq(Term::var(lhs.as_str(), *sort), enc.read_init(rhs)?));
        trans.push(Term::eq(Term::next_var(lhs.as_str(), *sort), enc.read_next(rhs)?));
    }

    let mut state_vars = Vec::new();
    for d in &node.inputs {
        state_vars.push(StateVar { name: d.name.as_str().into(), sort: d.sort, kind: VarKind::Input });
    }
    for d in node.outputs.iter().chain(&node.locals) {
        state_vars.push(StateVar { name: d.name.as_str().into(), sort: d.sort, kind: VarKind::Stream });
    }
    for (name, sort, _) in &aux_eqs {
        state_vars.push(StateVar { name: name.as_str().into(), sort: *sort, kind: VarKind::Aux });
    }
    for (name, sort) in &enc.fresh {
        state_vars.push(StateVar { name: name.as_str().into(), sort: *sort, kind: VarKind::InitFresh });
    }

    let properties = p.properties.iter().map(|name| (name.clone(), Term::var(name.as_str(), Sort::Bool))).collect();
    Ok(TransitionSystem { state_vars, init: Term::and_all(init), trans: Term::and_all(trans), properties })
}

struct Encoder {
    aux: Vec<(String, Sort, TExpr)>,
    fresh: Vec<(String, Sort)>,
    aux_count: usize,
}

enum Reading {
    Init,
    Next,
}

impl Encoder {
    /// Rewrites `pre e` with non-variable `e` into `pre aux` plus `aux = e`,
    /// innermost first.
    fn normalize(&mut self, e: &TExpr) -> Result<TExpr, EncodeError> {
        let kind = match &e.kind {
            TExprKind::Const(_) | TExprKind::Var(_) => e.kind.clone(),
            TExprKind::Unary(op, a) => TExprKind::Unary(*op, Box::new(self.normalize(a)?)),
            TExprKind::Binary(op, a, b) => TExprKind::Binary(*op, Box::new(self.normalize(a)?), Box::new(self.normalize(b)?)),
            TExprKind::Ite(c, t, f) => {
                TExprKind::Ite(Box::new(self.normalize(c)?), Box::new(self.normalize(t)?), Box::new(self.normalize(f)?))
            }
            TExprKind::Arrow(a, b) => TExprKind::Arrow(Box::new(self.normalize(a)?), Box::new(self.normalize(b)?)),
            TExprKind::Pre(a) => {
                let inner = self.normalize(a)?;
                if matches!(inner.kind, TExprKind::Var(_)) {
                    TExprKind::Pre(Box::new(inner))
                } else {
                    self.aux_count += 1;
                    let name = format!("aux~{}", self.aux_count);
                    self.aux.push((name.clone(), inner.sort, inner));
                    TExprKind::Pre(Box::new(TExpr { sort: e.sort, kind: TExprKind::Var(name) }))
                }
            }
            TExprKind::Call(f, _) => return Err(EncodeError::ResidualCall(f.clone())),
        };
        Ok(TExpr { sort: e.sort, kind })
    }

    fn read_init(&mut self, e: &TExpr) -> Result<Term, EncodeError> {
        self.read(e, &Reading::Init)
    }

    fn read_next(&mut self, e: &TExpr) -> Result<Term, EncodeError> {
        self.read(e, &Reading::Next)
    }

    fn read(&mut self, e: &TExpr, r: &Reading) -> Result<Term, EncodeError> {
        if let Some(v) = e.literal() {
            return Ok(Term::Const(v));
        }
        let t = match &e.kind {
            TExprKind::Const(v) => Term::Const(v.clone()),
            TExprKind::Var(v) => match r {
                Reading::Init => Term::var(v.as_str(), e.sort),
                Reading::Next => Term::next_var(v.as_str(), e.sort),
            },
            TExprKind::Unary(UnOp::Neg, a) => Term::apply(Op::Neg, vec![self.read(a, r)?])?,
            TExprKind::Unary(UnOp::Not, a) => Term::apply(Op::Not, vec![self.read(a, r)?])?,
            TExprKind::Binary(op, a, b) => {
                let (x, y) = (self.read(a, r)?, self.read(b, r)?);
                match op {
                    BinOp::Ne => Term::apply(Op::Not, vec![Term::apply(Op::Eq, vec![x, y])?])?,
                    BinOp::Div => {
                        let Term::Const(Value::Real(c)) = y else {
                            unreachable!("typecheck guarantees a constant divisor")
                        };
                        Term::apply(Op::Mul, vec![x, Term::real(c.recip())])?
                    }
                    _ => {
                        let op = match op {
                            BinOp::Add => Op::Add,
                            BinOp::Sub => Op::Sub,
                            BinOp::Mul => Op::Mul,
                            BinOp::IntDiv => Op::IntDiv,
                            BinOp::Mod => Op::Mod,
                            BinOp::Eq => Op::Eq,
                            BinOp::Lt => Op::Lt,
                            BinOp::Le => Op::Le,
                            BinOp::Gt => Op::Gt,
                            BinOp::Ge => Op::Ge,
                            BinOp::And => Op::And,
                            BinOp::Or => Op::Or,
                            BinOp::Xor => Op::Xor,
                            BinOp::Implies => Op::Implies,
                            BinOp::Ne | BinOp::Div => unreachable!(),
                        };
                        Term::apply(op, vec![x, y])?
                    }
                }
            }
            TExprKind::Ite(c, t, f) => Term::apply(Op::Ite, vec![self.read(c, r)?, self.read(t, r)?, self.read(f, r)?])?,
            TExprKind::Arrow(a, b) => match r {
                Reading::Init => self.read(a, r)?,
                Reading::Next => self.read(b, r)?,
            },
            TExprKind::Pre(a) => {
                let TExprKind::Var(v) = &a.kind else {
                    unreachable!("pre arguments are normalized to variables")
                };
                match r {
                    Reading::Init => {
                        let name = format!("pre~{}", self.fresh.len() + 1);
                        self.fresh.push((name.clone(), a.sort));
                        Term::var(name, a.sort)
                    }
                    Reading::Next => Term::var(v.as_str(), a.sort),
                }
            }
            TExprKind::Call(f, _) => return Err(EncodeError::ResidualCall(f.clone())),
        };
        Ok(t)
    }
}

/// Harvested terms over state variables, the raw material for candidates.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TermPool {
    pub bool_terms: Vec<Term>,
    pub int_terms: Vec<Term>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PoolCaps {
    pub int_terms: usize,
    pub bool_terms: usize,
    /// Also harvest subterms of the properties.
    pub include_property: bool,
}

impl Default for PoolCaps {
    fn default() -> Self {
        PoolCaps { int_terms: 60, bool_terms: 60, include_property: false }
    }
}

fn unprime(t: &Term) -> Term {
    t.map_vars(&mut |v| Term::Var(Var { name: v.name.clone(), sort: v.sort, time: Time::Current }))
}

fn is_definition(t: &Term) -> bool {
    matches!(t, Term::App(Op::Eq, args) if matches!(args[0], Term::Var(_)))
}

/// Collects the term set: state variables first, then proper subterms of
/// `I` and `T` (read over current-state variables) by increasing depth, then
/// the distinguished constants `0`, `1`, every integer constant of the
/// system, and `true`.
pub fn harvest_terms(sys: &TransitionSystem, caps: PoolCaps) -> TermPool {
    let fresh: HashSet<&str> =
        sys.state_vars.iter().filter(|v| v.kind == VarKind::InitFresh).map(|v| &*v.name).collect();
    let mentions_fresh = |t: &Term| t.vars().iter().any(|(n, _)| fresh.contains(&**n));

    let mut int_vars = Vec::new();
    let mut bool_vars = Vec::new();
    for v in sys.state_vars.iter().filter(|v| v.kind != VarKind::InitFresh) {
        match v.sort {
            Sort::Int => int_vars.push(sys.current(v)),
            Sort::Bool => bool_vars.push(sys.current(v)),
            Sort::Real => {}
        }
    }

    let mut sources: Vec<&Term> = sys.init.conjuncts();
    sources.extend(sys.trans.conjuncts());
    let props: Vec<Term> = sys.properties.iter().map(|(_, p)| p.clone()).collect();
    if caps.include_property {
        sources.extend(props.iter());
    }

    let mut int_sub: Vec<Term> = Vec::new();
    let mut bool_sub: Vec<Term> = Vec::new();
    let mut int_consts: Vec<Term> = vec![Term::int(0), Term::int(1)];
    for conj in sources {
        // The defining equation itself is not a candidate term, its sides are.
        let roots: Vec<&Term> = match conj {
            Term::App(Op::Eq, args) if is_definition(conj) => args.iter().skip(1).collect(),
            other => vec![other],
        };
        for root in roots {
            root.visit(&mut |t| match t {
                Term::Const(Value::Int(_)) => int_consts.push(t.clone()),
                Term::App(..) => {
                    let u = unprime(t);
                    if mentions_fresh(&u) {
                        return;
                    }
                    match u.sort() {
                        Sort::Int => int_sub.push(u),
                        Sort::Bool => bool_sub.push(u),
                        Sort::Real => {}
                    }
                }
                _ => {}
            });
        }
    }
    // Stable sort keeps first-occurrence order within a depth.
    int_sub.sort_by_key(Term::depth);
    bool_sub.sort_by_key(Term::depth);

    let dedup = |items: Vec<Term>, cap: usize| {
        let mut seen = HashSet::new();
        items.into_iter().filter(|t| seen.insert(t.clone())).take(cap).collect::<Vec<_>>()
    };
    let int_terms = dedup(int_vars.into_iter().chain(int_sub).chain(int_consts).collect(), caps.int_terms);
    let bool_terms = dedup(bool_vars.into_iter().chain(bool_sub).chain([Term::tt()]).collect(), caps.bool_terms);
    TermPool { bool_terms, int_terms }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::frontend::elaborate;

    fn sys_of(src: &str) -> TransitionSystem {
        encode(&elaborate(src, None).unwrap()).unwrap()
    }

    pub(crate) fn ctr3() -> TransitionSystem {
        let x = Term::var("x", Sort::Int);
        TransitionSystem::new(
            vec![StateVar { name: "x".into(), sort: Sort::Int, kind: VarKind::Stream }],
            Term::eq(x.clone(), Term::int(0)),
            Term::eq(
                Term::next_var("x", Sort::Int),
                Term::ite(Term::eq(x.clone(), Term::int(3)), Term::int(0), Term::add(x.clone(), Term::int(1))),
            ),
            vec![("p".into(), Term::le(x, Term::int(3)))],
        )
    }

    #[test]
    fn counter_encoding_has_no_fresh_vars() {
        let s = sys_of("node main() returns (ok: bool); var x: int; let x = 0 -> pre x + 1; ok = x < 2; tel");
        let names: Vec<&str> = s.state_vars.iter().map(|v| &*v.name).collect();
        assert_eq!(names, vec!["ok", "x"]);
        assert_eq!(s.init.pretty(), "((x = 0) and (ok = (x < 2)))");
        assert_eq!(s.trans.pretty(), "((x' = (x + 1)) and (ok' = (x' < 2)))");
        assert_eq!(s.properties, vec![("ok".to_string(), Term::var("ok", Sort::Bool))]);
    }

    #[test]
    fn toggle_encoding() {
        let s = sys_of("node main() returns (b: bool); let b = true -> not pre b; tel");
        assert_eq!(s.init.pretty(), "(b = true)");
        assert_eq!(s.trans.pretty(), "(b' = (not b))");
    }

    #[test]
    fn nested_pre_gets_auxiliary_stream() {
        let s = sys_of("node main(x: int) returns (ok: bool); var y: int; let y = pre (pre x); ok = true; tel");
        let kinds: Vec<(&str, VarKind)> = s.state_vars.iter().map(|v| (&*v.name, v.kind)).collect();
        assert_eq!(
            kinds,
            vec![
                ("x", VarKind::Input),
                ("ok", VarKind::Stream),
                ("y", VarKind::Stream),
                ("aux~1", VarKind::Aux),
                ("pre~1", VarKind::InitFresh),
                ("pre~2", VarKind::InitFresh),
            ]
        );
        assert_eq!(s.trans.pretty(), "((y' = aux~1) and (ok' = true) and (aux~1' = x))");
        assert_eq!(s.init.pretty(), "((y = pre~1) and (ok = true) and (aux~1 = pre~2))");
    }

    #[test]
    fn real_division_becomes_scaling() {
        let s = sys_of("node main() returns (ok: bool); var r: real; let r = 1.0 -> pre r / 4.0; ok = r >= 0.0; tel");
        assert!(s.trans.pretty().contains("(r * 1/4)"), "{}", s.trans.pretty());
    }

    #[test]
    fn ctr3_pool_contains_expected_terms() {
        let pool = harvest_terms(&ctr3(), PoolCaps::default());
        for t in [Term::var("x", Sort::Int), Term::int(0), Term::int(1), Term::int(3)] {
            assert!(pool.int_terms.contains(&t), "missing {t}");
        }
        let x_eq_3 = Term::eq(Term::var("x", Sort::Int), Term::int(3));
        assert!(pool.bool_terms.contains(&x_eq_3));
        assert!(pool.bool_terms.contains(&Term::tt()));
        assert_eq!(pool.int_terms[0], Term::var("x", Sort::Int));
    }

    #[test]
    fn pool_without_int_vars_is_distinguished_constants() {
        let s = sys_of("node main() returns (b: bool); let b = true -> not pre b; tel");
        assert_eq!(harvest_terms(&s, PoolCaps::default()).int_terms, vec![Term::int(0), Term::int(1)]);
    }

    #[test]
    fn caps_truncate() {
        let pool = harvest_terms(&ctr3(), PoolCaps { int_terms: 2, bool_terms: 1, include_property: false });
        assert_eq!((pool.int_terms.len(), pool.bool_terms.len()), (2, 1));
    }

    #[test]
    fn harvest_is_deterministic() {
        let src = "node main(i: bool) returns (ok: bool); var c: int; let c = 0 -> if i then pre c + 2 else pre c - 1; ok = c <> 7; tel";
        let a = harvest_terms(&sys_of(src), PoolCaps::default());
        let b = harvest_terms(&sys_of(src), PoolCaps::default());
        assert_eq!(a, b);
        assert!(!a.int_terms.is_empty());
    }

    #[test]
    fn residual_calls_are_internal_errors() {
        let typed = crate::frontend::typecheck(
            &crate::frontend::parse("node f() returns (o: int); let o = 1; tel node main() returns (ok: bool); let ok = f() > 0; tel").unwrap(),
            None,
        )
        .unwrap();
        let only_main = TypedProgram { nodes: vec![typed.main_node().clone()], ..typed };
        assert_eq!(encode(&only_main), Err(EncodeError::ResidualCall("f".into())));
    }
}
