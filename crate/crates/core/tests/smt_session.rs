mod common;

use std::io::Write;
use std::os::unix::fs::PermissionsExt;
use std::time::Duration;

use pkind::logic::{evaluate, Sort, Term, Value};
use pkind::smt::{Cancel, CheckResult, SmtError, SolverConfig, SolverSession};

fn x(i: u32) -> Term {
    Term::at("x", Sort::Int, i)
}

fn open() -> SolverSession {
    SolverSession::open(&common::solver(), &Cancel::new()).expect("solver available (set PK_SOLVER)")
}

#[test]
fn fresh_session_has_no_assertions() {
    let s = open();
    assert!(s.asserted().is_empty());
    assert_eq!(s.stats().checks, 0);
}

#[test]
fn nonexistent_binary_is_spawn_error() {
    let r = SolverSession::open(&SolverConfig::new("/nonexistent/solver --flag"), &Cancel::new());
    assert!(matches!(r, Err(SmtError::Spawn(_))));
}

#[test]
fn solver_without_push_fails_handshake() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fake-solver.sh");
    let mut f = std::fs::File::create(&path).unwrap();
    writeln!(
        f,
        "#!/bin/sh\nwhile read line; do case \"$line\" in *push*) echo '(error \"incremental mode not supported\")';; *) echo success;; esac; done"
    )
    .unwrap();
    drop(f);
    std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).unwrap();
    let r = SolverSession::open(&SolverConfig::new(path.to_str().unwrap()), &Cancel::new());
    assert!(matches!(r, Err(SmtError::Handshake(_))), "{:?}", r.err());
}

#[test]
fn assert_then_entailed() {
    let mut s = open();
    s.assert(&Term::eq(x(0), Term::int(0))).unwrap();
    assert_eq!(s.entailed(&Term::eq(x(0), Term::int(0))).unwrap(), CheckResult::Entailed);
    s.assert(&Term::eq(x(0), Term::int(0))).unwrap();
    assert_eq!(s.entailed(&Term::eq(x(0), Term::int(0))).unwrap(), CheckResult::Entailed);
}

#[test]
fn ex_falso() {
    let mut s = open();
    s.assert(&Term::ff()).unwrap();
    assert_eq!(s.entailed(&Term::eq(x(3), Term::int(17))).unwrap(), CheckResult::Entailed);
}

#[test]
fn arithmetic_entailment() {
    let mut s = open();
    s.assert(&Term::eq(x(0), Term::int(0))).unwrap();
    s.assert(&Term::eq(x(1), Term::add(x(0), Term::int(1)))).unwrap();
    assert_eq!(s.entailed(&Term::eq(x(1), Term::int(1))).unwrap(), CheckResult::Entailed);
}

#[test]
fn counterexample_model_is_valid() {
    let mut s = open();
    let hyp = Term::ge(x(0), Term::int(0));
    let goal = Term::ge(x(0), Term::int(1));
    s.assert(&hyp).unwrap();
    let before = s.asserted();
    match s.entailed(&goal).unwrap() {
        CheckResult::NotEntailed(m) => {
            assert_eq!(m.lookup("x", 0), Some(&Value::int(0)));
            assert_eq!(evaluate(&hyp, &m), Some(Value::Bool(true)));
            assert_eq!(evaluate(&goal, &m), Some(Value::Bool(false)));
        }
        other => panic!("expected a counterexample, got {other:?}"),
    }
    assert_eq!(s.asserted(), before);
}

#[test]
fn real_counterexample_is_exact() {
    let mut s = open();
    let r = Term::at("r", Sort::Real, 0);
    let zero = Term::Const(Value::real(0, 1));
    let one = Term::Const(Value::real(1, 1));
    s.assert(&Term::gt(r.clone(), zero)).unwrap();
    s.assert(&Term::lt(r.clone(), one)).unwrap();
    let goal = Term::ff();
    match s.entailed(&goal).unwrap() {
        CheckResult::NotEntailed(m) => match m.lookup("r", 0) {
            Some(v @ Value::Real(_)) => {
                let in_range = Term::and_all(vec![
                    Term::lt(Term::Const(Value::real(0, 1)), Term::Const(v.clone())),
                    Term::lt(Term::Const(v.clone()), Term::Const(Value::real(1, 1))),
                ]);
                assert_eq!(evaluate(&in_range, &m), Some(Value::Bool(true)));
            }
            other => panic!("{other:?}"),
        },
        other => panic!("{other:?}"),
    }
}

#[test]
fn empty_session_entails_true() {
    let mut s = open();
    assert_eq!(s.entailed(&Term::tt()).unwrap(), CheckResult::Entailed);
}

#[test]
fn reset_forgets_assertions() {
    let mut s = open();
    s.reset().unwrap();
    s.reset().unwrap();
    s.assert(&Term::eq(x(0), Term::int(0))).unwrap();
    s.reset().unwrap();
    assert!(s.asserted().is_empty());
    assert!(matches!(s.entailed(&Term::eq(x(0), Term::int(0))).unwrap(), CheckResult::NotEntailed(_)));
    s.reset().unwrap();
    s.reset().unwrap();
    // declarations survive the reset
    s.assert(&Term::eq(x(0), Term::int(4))).unwrap();
    assert_eq!(s.entailed(&Term::gt(x(0), Term::int(3))).unwrap(), CheckResult::Entailed);
}

#[test]
fn push_and_pop_scope_assertions() {
    let mut s = open();
    s.assert(&Term::ge(x(0), Term::int(0))).unwrap();
    s.push().unwrap();
    s.assert(&Term::ge(x(0), Term::int(5))).unwrap();
    assert_eq!(s.entailed(&Term::ge(x(0), Term::int(5))).unwrap(), CheckResult::Entailed);
    s.pop().unwrap();
    assert!(matches!(s.entailed(&Term::ge(x(0), Term::int(5))).unwrap(), CheckResult::NotEntailed(_)));
    assert!(s.pop().is_err());
}

#[test]
fn div_and_mod_agree_with_evaluation() {
    let mut s = open();
    let n = Term::at("n", Sort::Int, 0);
    s.assert(&Term::eq(n.clone(), Term::int(-7))).unwrap();
    let q = Term::apply(pkind::logic::Op::IntDiv, vec![n.clone(), Term::int(2)]).unwrap();
    let r = Term::apply(pkind::logic::Op::Mod, vec![n, Term::int(2)]).unwrap();
    assert_eq!(s.entailed(&Term::eq(q, Term::int(-4))).unwrap(), CheckResult::Entailed);
    assert_eq!(s.entailed(&Term::eq(r, Term::int(1))).unwrap(), CheckResult::Entailed);
}

#[test]
fn statistics_are_monotone() {
    let mut s = open();
    let mut last = s.stats();
    for i in 0..4 {
        s.assert(&Term::ge(x(i), Term::int(0))).unwrap();
        let _ = s.entailed(&Term::ge(x(i), Term::int(1))).unwrap();
        let now = s.stats();
        assert!(now.checks > last.checks && now.check_time >= last.check_time);
        last = now;
    }
}

#[test]
fn timeout_yields_unknown_and_session_recovers() {
    // A pigeonhole-style integer problem that takes z3 well over a millisecond.
    let mut cfg = common::solver();
    cfg.check_timeout = Some(Duration::from_millis(1));
    let mut s = SolverSession::open(&cfg, &Cancel::new()).unwrap();
    let vars: Vec<Term> = (0..9).map(|i| Term::at(format!("p{i}"), Sort::Int, 0)).collect();
    for v in &vars {
        s.assert(&Term::ge(v.clone(), Term::int(0))).unwrap();
        s.assert(&Term::lt(v.clone(), Term::int(8))).unwrap();
    }
    for i in 0..vars.len() {
        for j in i + 1..vars.len() {
            s.assert(&Term::not(Term::eq(vars[i].clone(), vars[j].clone()))).unwrap();
        }
    }
    let r = s.entailed(&Term::ff()).unwrap();
    if r == CheckResult::Unknown("timeout".into()) {
        assert_eq!(s.stats().restarts, 1);
    }
    // Replayed state still answers correctly with a generous budget.
    let r2 = s.entailed_within(&Term::ge(vars[0].clone(), Term::int(0)), None).unwrap();
    assert_eq!(r2, CheckResult::Entailed);
    assert_eq!(s.asserted().len(), 9 * 2 + 36);
}

#[test]
fn cancel_kills_solver() {
    let cancel = Cancel::new();
    let mut s = SolverSession::open(&common::solver(), &cancel).unwrap();
    cancel.cancel();
    assert_eq!(s.entailed(&Term::tt()), Err(SmtError::Cancelled));
}

#[test]
fn transcript_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = common::solver().with_label("probe");
    cfg.dump_dir = Some(dir.path().to_path_buf());
    {
        let mut s = SolverSession::open(&cfg, &Cancel::new()).unwrap();
        s.assert(&Term::eq(x(0), Term::int(0))).unwrap();
        s.entailed(&Term::eq(x(0), Term::int(0))).unwrap();
    }
    let files: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(files.len(), 1);
    let text = std::fs::read_to_string(files[0].as_ref().unwrap().path()).unwrap();
    assert!(text.contains("(assert (= x$0 0))"), "{text}");
    assert!(text.contains("; <- unsat"));
}
