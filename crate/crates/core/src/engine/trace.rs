use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::encoder::{TransitionSystem, VarKind};
use crate::logic::{evaluate, instantiate_state, instantiate_trans, Assignment, IndexedVar, Op, Term, Time, Value, Var};

/// A counterexample: total states `0..=k` over the state variables, stored
/// as one assignment indexed by step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    len: u32,
    states: Assignment,
    /// Variables shown when printing, in state-variable order.
    shown: Vec<Arc<str>>,
}

impl Trace {
    /// Wraps an assignment covering steps `0..len`. No validation happens here.
    pub fn new(sys: &TransitionSystem, len: u32, states: Assignment) -> Trace {
        assert!(len >= 1, "a trace has at least one state");
        let shown = sys
            .state_vars
            .iter()
            .filter(|v| matches!(v.kind, VarKind::Input | VarKind::Stream))
            .map(|v| v.name.clone())
            .collect();
        Trace { len, states, shown }
    }

    /// Index of the last state.
    pub fn k(&self) -> u32 {
        self.len - 1
    }

    pub fn len(&self) -> u32 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn states(&self) -> &Assignment {
        &self.states
    }

    pub fn value(&self, name: &str, step: u32) -> Option<&Value> {
        self.states.lookup(name, step)
    }

    /// State `i` indexed at step 0.
    pub fn state(&self, i: u32) -> Assignment {
        self.states.slice(i, 0)
    }
}

/// One `step <i>: var=value ...` line per state.
impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            write!(f, "step {i}:")?;
            for name in &self.shown {
                if let Some(v) = self.states.lookup(name, i) {
                    write!(f, " {name}={v}")?;
                }
            }
            if i + 1 < self.len {
                writeln!(f)?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("state 0 does not satisfy the initial condition")]
    Init,
    #[error("the transition out of state {0} violates the transition relation")]
    Trans(u32),
    #[error("the property holds in the last state {0}")]
    PropertyHolds(u32),
    #[error("state {step} lacks a value for `{var}`")]
    Partial { step: u32, var: String },
}

impl Violation {
    pub fn step(&self) -> u32 {
        match self {
            Violation::Init => 0,
            Violation::Trans(i) => *i,
            Violation::PropertyHolds(i) => *i,
            Violation::Partial { step, .. } => *step,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("model cannot be completed into a valid trace: {0}")]
    IncompletableModel(Violation),
}

/// Checks a trace by evaluation alone: state 0 satisfies `I`, each adjacent
/// pair satisfies `T`, and the last state falsifies `prop`.
pub fn validate_trace(sys: &TransitionSystem, trace: &Trace, prop: &Term) -> Result<(), Violation> {
    let holds = |f: &Term, step: u32| -> Result<bool, Violation> {
        match evaluate(f, &trace.states) {
            Some(Value::Bool(b)) => Ok(b),
            _ => {
                let missing = sys
                    .state_vars
                    .iter()
                    .flat_map(|v| [step, step + 1].map(|s| (v, s)))
                    .find(|(v, s)| *s < trace.len && trace.states.lookup(&v.name, *s).is_none());
                let (var, step) = missing.map(|(v, s)| (v.name.to_string(), s)).unwrap_or_default();
                Err(Violation::Partial { step, var })
            }
        }
    };
    if !holds(&instantiate_state(&sys.init, 0), 0)? {
        return Err(Violation::Init);
    }
    for i in 0..trace.k() {
        if !holds(&instantiate_trans(&sys.trans, i), i)? {
            return Err(Violation::Trans(i));
        }
    }
    let last = trace.k();
    if holds(&instantiate_state(prop, last), last)? {
        return Err(Violation::PropertyHolds(last));
    }
    Ok(())
}

/// Builds a trace of `k+1` states from a solver model. Variables the solver
/// left out are first recomputed from their defining equations, then set to
/// the default of their sort. The result must validate.
pub fn extract_trace(model: &Assignment, sys: &TransitionSystem, k: u32, prop: &Term) -> Result<Trace, TraceError> {
    let mut states = model.restrict(|v| v.step <= k && sys.var(&v.name).is_some());

    let defs = |f: &Term| -> Vec<(IndexedVar, Term)> {
        f.conjuncts()
            .into_iter()
            .filter_map(|c| match c {
                Term::App(Op::Eq, args) => match &args[0] {
                    Term::Var(Var { name, time, .. }) => Some(((name.clone(), *time), args[1].clone())),
                    _ => None,
                },
                _ => None,
            })
            .filter_map(|((name, time), rhs)| match time {
                Time::Current => Some((IndexedVar { name, step: 0 }, rhs)),
                Time::Next => Some((IndexedVar { name, step: 1 }, rhs)),
                Time::Step(_) => None,
            })
            .collect()
    };
    let init_defs: Vec<(IndexedVar, Term)> = defs(&sys.init)
        .into_iter()
        .filter(|(v, _)| v.step == 0)
        .map(|(v, rhs)| (v, instantiate_state(&rhs, 0)))
        .collect();
    let trans_defs: Vec<(IndexedVar, Term)> = defs(&sys.trans).into_iter().filter(|(v, _)| v.step == 1).collect();
    let mut pending: Vec<(IndexedVar, Term)> = init_defs;
    for i in 0..k {
        for (v, rhs) in &trans_defs {
            pending.push((IndexedVar { name: v.name.clone(), step: i + 1 }, instantiate_trans(rhs, i)));
        }
    }
    pending.retain(|(v, _)| !states.contains(v));

    loop {
        let before = pending.len();
        pending.retain(|(v, rhs)| match evaluate(rhs, &states) {
            Some(val) => {
                states.insert(v.clone(), val);
                false
            }
            None => true,
        });
        if pending.is_empty() || pending.len() == before {
            break;
        }
    }
    for step in 0..=k {
        for v in &sys.state_vars {
            let key = IndexedVar { name: v.name.clone(), step };
            if !states.contains(&key) {
                states.insert(key, Value::default_for(v.sort));
            }
        }
    }
    let trace = Trace::new(sys, k + 1, states);
    validate_trace(sys, &trace, prop).map_err(TraceError::IncompletableModel)?;
    Ok(trace)
}
