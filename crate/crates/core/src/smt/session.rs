use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::PathBuf;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Arc, Condvar, Mutex, Weak};
use std::thread;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow};

use super::sexp::{self, Sexp, Splitter};
use super::SmtError;
use crate::logic::{evaluate, smt_symbol, Assignment, IndexedVar, Sort, Term, Time, Value, Var};

/// How to launch and talk to a solver.
#[derive(Clone, Debug)]
pub struct SolverConfig {
    /// Command line, e.g. `z3 -in`. Split on whitespace.
    pub command: String,
    /// `set-logic` argument; `None` skips the command.
    pub logic: Option<String>,
    /// Wall-clock budget per `check-sat`; exceeding it yields `Unknown`.
    pub check_timeout: Option<Duration>,
    /// Directory receiving a transcript of every session.
    pub dump_dir: Option<PathBuf>,
    /// Transcript file stem.
    pub label: String,
}

impl SolverConfig {
    pub fn new(command: impl Into<String>) -> Self {
        SolverConfig {
            command: command.into(),
            logic: Some("QF_UFLIRA".into()),
            check_timeout: None,
            dump_dir: None,
            label: "session".into(),
        }
    }

    pub fn with_label(&self, label: impl Into<String>) -> Self {
        SolverConfig { label: label.into(), ..self.clone() }
    }

    /// `PK_SOLVER` if set, else `z3 -in`.
    pub fn from_env() -> Self {
        SolverConfig::new(std::env::var("PK_SOLVER").unwrap_or_else(|_| "z3 -in".into()))
    }

    fn argv(&self) -> Vec<String> {
        let mut argv: Vec<String> = self.command.split_whitespace().map(str::to_string).collect();
        // z3 needs -in to read commands from stdin.
        let is_z3 = argv.first().is_some_and(|p| p.rsplit('/').next() == Some("z3"));
        if is_z3 && !argv.iter().any(|a| a == "-in") {
            argv.push("-in".into());
        }
        argv
    }
}

/// Cooperative stop signal shared by an orchestrator and its workers.
/// Cancelling kills every registered solver process, which aborts any
/// in-flight check.
#[derive(Clone, Default)]
pub struct Cancel(Arc<CancelInner>);

#[derive(Default)]
struct CancelInner {
    flag: AtomicBool,
    children: Mutex<Vec<Weak<Mutex<Child>>>>,
    sleeper: Mutex<()>,
    wake: Condvar,
}

impl Cancel {
    pub fn new() -> Self {
        Cancel::default()
    }

    pub fn cancel(&self) {
        self.0.flag.store(true, Ordering::SeqCst);
        let children = std::mem::take(&mut *self.0.children.lock().unwrap());
        for c in children.iter().filter_map(Weak::upgrade) {
            let _ = c.lock().unwrap().kill();
        }
        let _guard = self.0.sleeper.lock().unwrap();
        self.0.wake.notify_all();
    }

    pub fn is_cancelled(&self) -> bool {
        self.0.flag.load(Ordering::SeqCst)
    }

    /// Sleeps for `d` or until cancelled. Returns true when cancelled.
    pub fn sleep(&self, d: Duration) -> bool {
        let deadline = Instant::now() + d;
        let mut guard = self.0.sleeper.lock().unwrap();
        while !self.is_cancelled() {
            let now = Instant::now();
            if now >= deadline {
                return false;
            }
            guard = self.0.wake.wait_timeout(guard, deadline - now).unwrap().0;
        }
        true
    }

    fn register(&self, child: &Arc<Mutex<Child>>) {
        let mut children = self.0.children.lock().unwrap();
        children.retain(|w| w.strong_count() > 0);
        children.push(Arc::downgrade(child));
        drop(children);
        if self.is_cancelled() {
            let _ = child.lock().unwrap().kill();
        }
    }
}

/// Outcome of an entailment check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CheckResult {
    Entailed,
    /// A model of the assertions that falsifies the formula.
    NotEntailed(Assignment),
    Unknown(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SessionStats {
    pub checks: u64,
    pub check_time: Duration,
    pub restarts: u64,
}

struct Process {
    child: Arc<Mutex<Child>>,
    stdin: BufWriter<ChildStdin>,
    responses: Receiver<String>,
}

static SESSION_IDS: AtomicUsize = AtomicUsize::new(0);

/// A live solver subprocess plus a mirror of what has been asserted.
///
/// Formulas are step-indexed terms; every indexed variable is declared on
/// first use as `name$step`. Assertions live in a stack of frames: frame 0
/// is emptied by [`SolverSession::reset`], later frames come from
/// [`SolverSession::push`].
pub struct SolverSession {
    config: SolverConfig,
    cancel: Cancel,
    proc: Option<Process>,
    declared: BTreeMap<String, (IndexedVar, Sort)>,
    frames: Vec<Vec<Term>>,
    stats: SessionStats,
    tee: Option<BufWriter<File>>,
}

impl SolverSession {
    /// Launches the solver and enables incremental solving and model production.
    pub fn open(config: &SolverConfig, cancel: &Cancel) -> Result<SolverSession, SmtError> {
        let tee = match &config.dump_dir {
            Some(dir) => {
                std::fs::create_dir_all(dir).map_err(|e| SmtError::Io(e.to_string()))?;
                let id = SESSION_IDS.fetch_add(1, Ordering::Relaxed);
                let path = dir.join(format!("{}-{}-{id}.smt2", config.label, std::process::id()));
                Some(BufWriter::new(File::create(path).map_err(|e| SmtError::Io(e.to_string()))?))
            }
            None => None,
        };
        let mut s = SolverSession {
            config: config.clone(),
            cancel: cancel.clone(),
            proc: None,
            declared: BTreeMap::new(),
            frames: vec![Vec::new()],
            stats: SessionStats::default(),
            tee,
        };
        s.spawn()?;
        Ok(s)
    }

    fn spawn(&mut self) -> Result<(), SmtError> {
        if self.cancel.is_cancelled() {
            return Err(SmtError::Cancelled);
        }
        let argv = self.config.argv();
        let (prog, args) = argv.split_first().ok_or_else(|| SmtError::Spawn("empty solver command".into()))?;
        let mut child = Command::new(prog)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| SmtError::Spawn(format!("`{}`: {e}", self.config.command)))?;
        let stdin = BufWriter::new(child.stdin.take().expect("piped stdin"));
        let mut stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            let mut splitter = Splitter::default();
            let mut buf = [0u8; 8192];
            let mut pending = Vec::new();
            let mut out = Vec::new();
            loop {
                match stdout.read(&mut buf) {
                    Ok(0) | Err(_) => break,
                    Ok(n) => {
                        pending.extend_from_slice(&buf[..n]);
                        let valid = match std::str::from_utf8(&pending) {
                            Ok(s) => s.len(),
                            Err(e) => e.valid_up_to(),
                        };
                        let text = String::from_utf8_lossy(&pending[..valid]).into_owned();
                        pending.drain(..valid);
                        splitter.push(&text, &mut out);
                        for r in out.drain(..) {
                            if tx.send(r).is_err() {
                                return;
                            }
                        }
                    }
                }
            }
        });
        let child = Arc::new(Mutex::new(child));
        self.cancel.register(&child);
        self.proc = Some(Process { child, stdin, responses: rx });
        self.handshake()
    }

    fn handshake(&mut self) -> Result<(), SmtError> {
        let mut cmds = vec![
            "(set-option :print-success true)".to_string(),
            "(set-option :produce-models true)".to_string(),
            "(set-option :global-declarations true)".to_string(),
        ];
        if let Some(logic) = &self.config.logic {
            cmds.push(format!("(set-logic {logic})"));
        }
        cmds.push("(push 1)".into());
        cmds.push("(pop 1)".into());
        for c in cmds {
            match self.command(&c) {
                Ok(()) => {}
                Err(SmtError::Protocol(m)) => return Err(SmtError::Handshake(format!("{c}: {m}"))),
                Err(e) => return Err(e),
            }
        }
        Ok(())
    }

    fn write_line(&mut self, line: &str) -> Result<(), SmtError> {
        if self.cancel.is_cancelled() {
            return Err(SmtError::Cancelled);
        }
        if let Some(tee) = self.tee.as_mut() {
            let _ = writeln!(tee, "{line}");
        }
        let proc = self.proc.as_mut().ok_or_else(|| SmtError::Protocol("solver not running".into()))?;
        let written = writeln!(proc.stdin, "{line}").and_then(|_| proc.stdin.flush());
        written.map_err(|e| self.lost(e.to_string()))
    }

    fn lost(&self, detail: String) -> SmtError {
        if self.cancel.is_cancelled() {
            SmtError::Cancelled
        } else {
            SmtError::Protocol(format!("solver terminated ({detail})"))
        }
    }

    /// Reads one response. `Ok(None)` means the timeout expired.
    fn read_response(&mut self, timeout: Option<Duration>) -> Result<Option<String>, SmtError> {
        let proc = self.proc.as_ref().ok_or_else(|| SmtError::Protocol("solver not running".into()))?;
        let r = match timeout {
            Some(t) => proc.responses.recv_timeout(t),
            None => proc.responses.recv().map_err(|_| RecvTimeoutError::Disconnected),
        };
        match r {
            Ok(resp) => {
                if let Some(tee) = self.tee.as_mut() {
                    let _ = writeln!(tee, "; <- {}", resp.replace('\n', " "));
                }
                Ok(Some(resp))
            }
            Err(RecvTimeoutError::Timeout) => Ok(None),
            Err(RecvTimeoutError::Disconnected) => Err(self.lost("output closed".into())),
        }
    }

    fn expect_response(&mut self) -> Result<String, SmtError> {
        Ok(self.read_response(None)?.expect("no timeout"))
    }

    /// Sends a command that answers `success`.
    fn command(&mut self, line: &str) -> Result<(), SmtError> {
        self.write_line(line)?;
        let resp = self.expect_response()?;
        if resp == "success" {
            Ok(())
        } else {
            Err(SmtError::Protocol(format!("`{line}` answered `{resp}`")))
        }
    }

    fn declare_vars(&mut self, f: &Term) -> Result<(), SmtError> {
        let mut fresh = Vec::new();
        f.visit(&mut |t| {
            if let Term::Var(Var { name, sort, time: Time::Step(step) }) = t {
                let sym = smt_symbol(name, Time::Step(*step));
                if !self.declared.contains_key(&sym) && !fresh.iter().any(|(s, _, _)| *s == sym) {
                    fresh.push((sym, IndexedVar { name: name.clone(), step: *step }, *sort));
                }
            }
        });
        for (sym, var, sort) in fresh {
            self.command(&format!("(declare-fun {sym} () {})", sort.smt_name()))?;
            self.declared.insert(sym, (var, sort));
        }
        Ok(())
    }

    /// Adds `f` to the current frame.
    pub fn assert(&mut self, f: &Term) -> Result<(), SmtError> {
        debug_assert_eq!(f.sort(), Sort::Bool);
        self.declare_vars(f)?;
        self.command(&format!("(assert {})", f.to_smt()))?;
        self.frames.last_mut().expect("frame 0 always exists").push(f.clone());
        Ok(())
    }

    /// Opens a new assertion frame.
    pub fn push(&mut self) -> Result<(), SmtError> {
        self.command("(push 1)")?;
        self.frames.push(Vec::new());
        Ok(())
    }

    /// Discards the newest frame. Frame 0 cannot be popped.
    pub fn pop(&mut self) -> Result<(), SmtError> {
        if self.frames.len() == 1 {
            return Err(SmtError::Protocol("pop without matching push".into()));
        }
        self.command("(pop 1)")?;
        self.frames.pop();
        Ok(())
    }

    /// Removes every assertion. Declarations are kept.
    pub fn reset(&mut self) -> Result<(), SmtError> {
        if self.frames.len() == 1 && self.frames[0].is_empty() {
            return Ok(());
        }
        self.command("(reset-assertions)")?;
        self.frames = vec![Vec::new()];
        Ok(())
    }

    /// Checks whether the current assertions entail `f`. The assertion set is
    /// unchanged afterwards.
    pub fn entailed(&mut self, f: &Term) -> Result<CheckResult, SmtError> {
        self.entailed_within(f, self.config.check_timeout)
    }

    /// As [`SolverSession::entailed`] with an explicit per-check timeout.
    pub fn entailed_within(&mut self, f: &Term, timeout: Option<Duration>) -> Result<CheckResult, SmtError> {
        self.declare_vars(f)?;
        self.command("(push 1)")?;
        self.command(&format!("(assert (not {}))", f.to_smt()))?;
        self.write_line("(check-sat)")?;
        let started = Instant::now();
        let resp = self.read_response(timeout)?;
        self.stats.checks += 1;
        self.stats.check_time += started.elapsed();
        let Some(resp) = resp else {
            self.restart()?;
            return Ok(CheckResult::Unknown("timeout".into()));
        };
        let result = match resp.as_str() {
            "unsat" => CheckResult::Entailed,
            "sat" => {
                let model = self.model()?;
                if cfg!(debug_assertions) {
                    self.validate_model(&model, f)?;
                }
                CheckResult::NotEntailed(model)
            }
            "unknown" => CheckResult::Unknown(self.reason_unknown()?),
            other => return Err(SmtError::Protocol(format!("check-sat answered `{other}`"))),
        };
        self.command("(pop 1)")?;
        Ok(result)
    }

    fn reason_unknown(&mut self) -> Result<String, SmtError> {
        self.write_line("(get-info :reason-unknown)")?;
        let resp = self.expect_response()?;
        Ok(match sexp::parse(&resp) {
            Ok(Sexp::List(items)) if items.len() == 2 => items[1].to_string().trim_matches('"').to_string(),
            _ => "unknown".into(),
        })
    }

    fn model(&mut self) -> Result<Assignment, SmtError> {
        let mut model = Assignment::new();
        if self.declared.is_empty() {
            return Ok(model);
        }
        let syms: Vec<String> = self.declared.keys().cloned().collect();
        self.write_line(&format!("(get-value ({}))", syms.join(" ")))?;
        let resp = self.expect_response()?;
        let parsed = sexp::parse(&resp).map_err(SmtError::ModelParse)?;
        let pairs = parsed.list().ok_or_else(|| SmtError::ModelParse(format!("not a value list: {resp}")))?;
        for pair in pairs {
            let (sym, val) = match pair.list() {
                Some([Sexp::Atom(sym), val]) => (sym, val),
                _ => return Err(SmtError::ModelParse(format!("bad model entry `{pair}`"))),
            };
            let key = if sym.starts_with('|') { sym.clone() } else { smt_symbol_from_wire(sym) };
            let (var, sort) = self
                .declared
                .get(&key)
                .ok_or_else(|| SmtError::ModelParse(format!("value for undeclared symbol `{sym}`")))?
                .clone();
            model.insert(var, parse_value(val, sort)?);
        }
        Ok(model)
    }

    fn validate_model(&self, model: &Assignment, f: &Term) -> Result<(), SmtError> {
        for a in self.frames.iter().flatten() {
            if evaluate(a, model) == Some(Value::Bool(false)) {
                return Err(SmtError::Protocol(format!("model falsifies assertion {}", a.pretty())));
            }
        }
        if evaluate(f, model) == Some(Value::Bool(true)) {
            return Err(SmtError::Protocol(format!("model satisfies the negated goal {}", f.pretty())));
        }
        Ok(())
    }

    /// Replaces a hung solver with a fresh one holding the same declarations
    /// and assertion frames.
    fn restart(&mut self) -> Result<(), SmtError> {
        self.kill();
        self.stats.restarts += 1;
        if let Some(tee) = self.tee.as_mut() {
            let _ = writeln!(tee, "; solver restarted after timeout");
        }
        self.spawn()?;
        let decls: Vec<(String, Sort)> = self.declared.iter().map(|(s, (_, sort))| (s.clone(), *sort)).collect();
        for (sym, sort) in decls {
            self.command(&format!("(declare-fun {sym} () {})", sort.smt_name()))?;
        }
        let frames = self.frames.clone();
        for (i, frame) in frames.iter().enumerate() {
            if i > 0 {
                self.command("(push 1)")?;
            }
            for f in frame {
                self.command(&format!("(assert {})", f.to_smt()))?;
            }
        }
        Ok(())
    }

    fn kill(&mut self) {
        if let Some(mut p) = self.proc.take() {
            let _ = writeln!(p.stdin, "(exit)");
            let _ = p.stdin.flush();
            let mut child = p.child.lock().unwrap();
            let _ = child.kill();
            let _ = child.wait();
        }
    }

    pub fn stats(&self) -> SessionStats {
        self.stats
    }

    /// Every formula currently asserted, oldest first.
    pub fn asserted(&self) -> Vec<Term> {
        self.frames.iter().flatten().cloned().collect()
    }

    /// Current number of frames above frame 0.
    pub fn depth(&self) -> usize {
        self.frames.len() - 1
    }

    pub fn pid(&self) -> Option<u32> {
        self.proc.as_ref().map(|p| p.child.lock().unwrap().id())
    }
}

impl Drop for SolverSession {
    fn drop(&mut self) {
        self.kill();
        if let Some(tee) = self.tee.as_mut() {
            let _ = tee.flush();
        }
    }
}

fn smt_symbol_from_wire(sym: &str) -> String {
    match sym.rsplit_once('$') {
        Some((name, step)) if step.parse::<u32>().is_ok() => smt_symbol(name, Time::Step(step.parse().unwrap())),
        _ => sym.to_string(),
    }
}

fn parse_number(atom: &str) -> Option<BigRational> {
    if let Some((int, frac)) = atom.split_once('.') {
        if int.is_empty() || !int.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        let digits: BigInt = format!("{int}{frac}").parse().ok()?;
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        Some(BigRational::new(digits, scale))
    } else if !atom.is_empty() && atom.chars().all(|c| c.is_ascii_digit()) {
        Some(BigRational::from_integer(atom.parse().ok()?))
    } else {
        None
    }
}

fn parse_rational(s: &Sexp) -> Option<BigRational> {
    match s {
        Sexp::Atom(a) => parse_number(a),
        Sexp::List(items) => match items.as_slice() {
            [Sexp::Atom(op), x] if op == "-" => Some(-parse_rational(x)?),
            [Sexp::Atom(op), x, y] if op == "/" => {
                let d = parse_rational(y)?;
                if d == BigRational::from_integer(0.into()) {
                    return None;
                }
                Some(parse_rational(x)? / d)
            }
            [Sexp::Atom(op), x] if op == "to_real" => parse_rational(x),
            _ => None,
        },
    }
}

/// Parses a model value exactly: `true`, `17`, `(- 4)`, `2.5`, `(/ 1.0 3.0)`.
pub(crate) fn parse_value(s: &Sexp, sort: Sort) -> Result<Value, SmtError> {
    let bad = || SmtError::ModelParse(format!("unsupported {sort} value `{s}`"));
    match sort {
        Sort::Bool => match s.atom() {
            Some("true") => Ok(Value::Bool(true)),
            Some("false") => Ok(Value::Bool(false)),
            _ => Err(bad()),
        },
        Sort::Int => {
            let r = parse_rational(s).ok_or_else(bad)?;
            if r.denom().is_one() {
                Ok(Value::Int(r.to_integer()))
            } else {
                Err(bad())
            }
        }
        Sort::Real => Ok(Value::Real(parse_rational(s).ok_or_else(bad)?)),
    }
}
