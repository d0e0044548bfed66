//! Reference implementations used to cross-check the checker:
//! a direct stream interpreter, explicit-state reachability for boolean
//! systems, and a plain bounded model checker.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::Signed;
use rand::Rng;

use pkind::encoder::{TransitionSystem, VarKind};
use pkind::frontend::{BinOp, TExpr, TExprKind, TypedProgram, UnOp};
use pkind::logic::{evaluate, instantiate_state, instantiate_trans, Assignment, IndexedVar, Op, Sort, Term, Time, Value, Var};
use pkind::smt::{Cancel, CheckResult, SolverConfig, SolverSession};

pub type Instant = BTreeMap<String, Value>;

/// Runs a flattened program for `inputs.len()` instants. `pre e` at the first
/// instant reads the default value of its sort.
pub fn interpret(p: &TypedProgram, inputs: &[Instant]) -> Vec<Instant> {
    assert_eq!(p.nodes.len(), 1, "interpret expects an inlined program");
    let node = &p.nodes[0];
    let defs: HashMap<&str, &TExpr> = node.equations.iter().map(|e| (e.lhs.as_str(), &e.rhs)).collect();
    let mut memo: HashMap<(String, usize), Value> = HashMap::new();
    let mut out = Vec::new();
    for n in 0..inputs.len() {
        let mut inst = inputs[n].clone();
        for d in node.outputs.iter().chain(&node.locals) {
            let v = stream(&d.name, n, &defs, inputs, &mut memo);
            inst.insert(d.name.clone(), v);
        }
        out.push(inst);
    }
    out
}

fn stream(name: &str, n: usize, defs: &HashMap<&str, &TExpr>, inputs: &[Instant], memo: &mut HashMap<(String, usize), Value>) -> Value {
    if let Some(v) = inputs[n].get(name) {
        return v.clone();
    }
    if let Some(v) = memo.get(&(name.to_string(), n)) {
        return v.clone();
    }
    let rhs = defs.get(name).unwrap_or_else(|| panic!("no definition for {name}"));
    let v = eval(rhs, n, defs, inputs, memo);
    memo.insert((name.to_string(), n), v.clone());
    v
}

fn int(v: &Value) -> &BigInt {
    match v {
        Value::Int(i) => i,
        other => panic!("expected int, got {other:?}"),
    }
}

fn boolean(v: &Value) -> bool {
    match v {
        Value::Bool(b) => *b,
        other => panic!("expected bool, got {other:?}"),
    }
}

fn rat(v: &Value) -> BigRational {
    match v {
        Value::Real(r) => r.clone(),
        other => panic!("expected real, got {other:?}"),
    }
}

fn eval(e: &TExpr, n: usize, defs: &HashMap<&str, &TExpr>, inputs: &[Instant], memo: &mut HashMap<(String, usize), Value>) -> Value {
    let mut ev = |e: &TExpr, n: usize| eval(e, n, defs, inputs, memo);
    match &e.kind {
        TExprKind::Const(v) => v.clone(),
        TExprKind::Var(name) => stream(name, n, defs, inputs, memo),
        TExprKind::Unary(UnOp::Not, a) => Value::Bool(!boolean(&ev(a, n))),
        TExprKind::Unary(UnOp::Neg, a) => match ev(a, n) {
            Value::Int(i) => Value::Int(-i),
            Value::Real(r) => Value::Real(-r),
            other => panic!("negating {other:?}"),
        },
        TExprKind::Pre(a) => {
            if n == 0 {
                Value::default_for(e.sort)
            } else {
                ev(a, n - 1)
            }
        }
        TExprKind::Arrow(a, b) => {
            if n == 0 {
                ev(a, n)
            } else {
                ev(b, n)
            }
        }
        TExprKind::Ite(c, t, f) => {
            if boolean(&ev(c, n)) {
                ev(t, n)
            } else {
                ev(f, n)
            }
        }
        TExprKind::Binary(op, a, b) => {
            let (x, y) = (ev(a, n), ev(b, n));
            binary(*op, &x, &y)
        }
        TExprKind::Call(..) => panic!("interpret expects an inlined program"),
    }
}

fn binary(op: BinOp, x: &Value, y: &Value) -> Value {
    let numeric = |fi: fn(&BigInt, &BigInt) -> BigInt, fr: fn(&BigRational, &BigRational) -> BigRational| match (x, y) {
        (Value::Int(a), Value::Int(b)) => Value::Int(fi(a, b)),
        _ => Value::Real(fr(&rat(x), &rat(y))),
    };
    let cmp = || match (x, y) {
        (Value::Int(a), Value::Int(b)) => a.cmp(b),
        (Value::Real(a), Value::Real(b)) => a.cmp(b),
        (Value::Bool(a), Value::Bool(b)) => a.cmp(b),
        _ => panic!("comparing {x:?} with {y:?}"),
    };
    use std::cmp::Ordering::*;
    match op {
        BinOp::Add => numeric(|a, b| a + b, |a, b| a + b),
        BinOp::Sub => numeric(|a, b| a - b, |a, b| a - b),
        BinOp::Mul => numeric(|a, b| a * b, |a, b| a * b),
        BinOp::Div => Value::Real(rat(x) / rat(y)),
        BinOp::IntDiv => {
            // a = b*q + r with 0 <= r < |b|
            let (a, b) = (int(x), int(y));
            let r = a.mod_floor(&b.abs());
            Value::Int((a - &r) / b)
        }
        BinOp::Mod => Value::Int(int(x).mod_floor(&int(y).abs())),
        BinOp::Eq => Value::Bool(cmp() == Equal),
        BinOp::Ne => Value::Bool(cmp() != Equal),
        BinOp::Lt => Value::Bool(cmp() == Less),
        BinOp::Le => Value::Bool(cmp() != Greater),
        BinOp::Gt => Value::Bool(cmp() == Greater),
        BinOp::Ge => Value::Bool(cmp() != Less),
        BinOp::And => Value::Bool(boolean(x) && boolean(y)),
        BinOp::Or => Value::Bool(boolean(x) || boolean(y)),
        BinOp::Xor => Value::Bool(boolean(x) != boolean(y)),
        BinOp::Implies => Value::Bool(!boolean(x) || boolean(y)),
    }
}

/// Random input values for every input of the (flattened) main node.
pub fn random_inputs(p: &TypedProgram, len: usize, rng: &mut impl Rng) -> Vec<Instant> {
    let node = &p.nodes[0];
    (0..len)
        .map(|_| {
            node.inputs
                .iter()
                .map(|d| {
                    let v = match d.sort {
                        Sort::Bool => Value::Bool(rng.gen()),
                        Sort::Int => Value::int(rng.gen_range(-5..=5)),
                        Sort::Real => Value::real(rng.gen_range(-10..=10), rng.gen_range(1..=4)),
                    };
                    (d.name.clone(), v)
                })
                .collect()
        })
        .collect()
}

/// Turns an interpreter run into an assignment over the state variables.
/// Values of variables the encoder introduces on its own (auxiliary streams
/// and first-instant `pre` values) are filled in: first-instant values use
/// the same defaults as the interpreter, auxiliaries follow their defining
/// equations.
pub fn induced_assignment(sys: &TransitionSystem, run: &[Instant]) -> Assignment {
    let mut a = Assignment::new();
    for (i, inst) in run.iter().enumerate() {
        for (name, v) in inst {
            a.set(name, i as u32, v.clone());
        }
    }
    for v in sys.state_vars.iter().filter(|v| v.kind == VarKind::InitFresh) {
        for i in 0..run.len() {
            a.set(&v.name, i as u32, Value::default_for(v.sort));
        }
    }
    let aux: HashSet<&str> = sys.state_vars.iter().filter(|v| v.kind == VarKind::Aux).map(|v| &*v.name).collect();
    let definition = |f: &Term, time: Time| -> Vec<(String, Term)> {
        f.conjuncts()
            .into_iter()
            .filter_map(|c| match c {
                Term::App(Op::Eq, args) => match &args[0] {
                    Term::Var(Var { name, time: t, .. }) if *t == time && aux.contains(&**name) => Some((name.to_string(), args[1].clone())),
                    _ => None,
                },
                _ => None,
            })
            .collect()
    };
    let init_defs = definition(&sys.init, Time::Current);
    let trans_defs = definition(&sys.trans, Time::Next);
    for step in 0..run.len() as u32 {
        let mut pending: Vec<(String, Term)> = if step == 0 {
            init_defs.iter().map(|(n, rhs)| (n.clone(), instantiate_state(rhs, 0))).collect()
        } else {
            trans_defs.iter().map(|(n, rhs)| (n.clone(), instantiate_trans(rhs, step - 1))).collect()
        };
        while !pending.is_empty() {
            let before = pending.len();
            pending.retain(|(name, rhs)| match evaluate(rhs, &a) {
                Some(v) => {
                    a.set(name, step, v);
                    false
                }
                None => true,
            });
            assert!(pending.len() < before, "auxiliary definitions at step {step} cannot be evaluated");
        }
    }
    a
}

fn bool_states(vars: &[(String, Sort)]) -> Vec<Assignment> {
    let n = vars.len();
    (0..1u32 << n)
        .map(|bits| vars.iter().enumerate().map(|(i, (name, _))| (IndexedVar::new(name.as_str(), 0), Value::Bool(bits >> i & 1 == 1))).collect())
        .collect()
}

fn shift(a: &Assignment, to: u32) -> Assignment {
    a.slice(0, to)
}

/// Every reachable state of a system whose state variables are all boolean,
/// as assignments at step 0.
pub fn reachable_states(sys: &TransitionSystem) -> Vec<Assignment> {
    let vars: Vec<(String, Sort)> = sys.state_vars.iter().map(|v| (v.name.to_string(), v.sort)).collect();
    assert!(vars.iter().all(|(_, s)| *s == Sort::Bool), "explicit-state oracle needs a boolean system");
    assert!(vars.len() <= 12, "too many state bits");
    let all = bool_states(&vars);
    let init = instantiate_state(&sys.init, 0);
    let trans = instantiate_trans(&sys.trans, 0);
    let mut seen: Vec<Assignment> = Vec::new();
    let mut queue: VecDeque<Assignment> = all.iter().filter(|s| evaluate(&init, s) == Some(Value::Bool(true))).cloned().collect();
    while let Some(s) = queue.pop_front() {
        if seen.contains(&s) {
            continue;
        }
        for t in &all {
            let mut pair = s.clone();
            pair.extend(&shift(t, 1));
            if evaluate(&trans, &pair) == Some(Value::Bool(true)) && !seen.contains(t) {
                queue.push_back(t.clone());
            }
        }
        seen.push(s);
    }
    seen
}

/// Depth of the shortest violation of `prop` within `depth` steps, by plain
/// unrolling.
pub fn bmc(sys: &TransitionSystem, prop: &Term, depth: u32, solver: &SolverConfig) -> Option<u32> {
    let cancel = Cancel::new();
    let mut s = SolverSession::open(solver, &cancel).expect("solver");
    s.assert(&instantiate_state(&sys.init, 0)).unwrap();
    for k in 0..=depth {
        if k > 0 {
            s.assert(&instantiate_trans(&sys.trans, k - 1)).unwrap();
        }
        match s.entailed(&instantiate_state(prop, k)).unwrap() {
            CheckResult::Entailed => {}
            CheckResult::NotEntailed(_) => return Some(k),
            CheckResult::Unknown(r) => panic!("bmc: solver unknown at {k}: {r}"),
        }
    }
    None
}

/// Whether `f` holds in every state of `states`.
pub fn holds_in_all(f: &Term, states: &[Assignment]) -> bool {
    let f0 = instantiate_state(f, 0);
    states.iter().all(|s| evaluate(&f0, s) == Some(Value::Bool(true)))
}
