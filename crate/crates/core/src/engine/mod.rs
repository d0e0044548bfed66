//! Parallel k-induction: the base worker, the inductive step worker, their
//! message protocol, path compression and trace handling.
//!
//! Workers are threads that share nothing but queues. Message flow:
//!
//! * `M1` [`Message::StepProved`]: step -> base
//! * `M2` [`Message::BaseTerminated`]: base -> step
//! * `M3` [`Message::Invariants`]: invariant generator -> step
//! * `M4` [`Message::StopInvGen`]: base -> invariant generator

mod base;
mod compression;
mod orchestrate;
mod step;
mod trace;

use std::fmt;
use std::str::FromStr;
use std::sync::mpsc::{Receiver, RecvTimeoutError, TryRecvError};
use std::time::Duration;

use crate::encoder::PoolCaps;
use crate::invgen::Template;
use crate::logic::Term;
use crate::smt::{Cancel, SmtError, SolverConfig};

pub use base::{run_base, BaseReport};
pub use compression::{path_compression_constraints, path_compression_delta};
pub use orchestrate::{check_property, orchestrate, RunOutcome, RunStats};
pub use step::{run_step, StepOptions, StepReport};
pub use trace::{extract_trace, validate_trace, Trace, TraceError, Violation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VerdictKind {
    Valid,
    Invalid,
    Unknown,
}

/// The protocol vocabulary.
#[derive(Clone, Debug, PartialEq)]
pub enum Message {
    /// The inductive step entailment holds at this depth.
    StepProved(u32),
    BaseTerminated(VerdictKind),
    /// Proved invariants, keyed by candidate id.
    Invariants { invariants: Vec<(usize, Term)>, proved_at_k: u32 },
    StopInvGen,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum UnknownReason {
    Timeout,
    SolverUnknown,
    MaxK,
    /// The solver could not be started or misbehaved.
    SolverError(String),
    /// A worker died.
    Crash(String),
}

impl fmt::Display for UnknownReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UnknownReason::Timeout => "timeout",
            UnknownReason::SolverUnknown => "solver-unknown",
            UnknownReason::MaxK => "max-k",
            UnknownReason::SolverError(_) => "solver-error",
            UnknownReason::Crash(_) => "error",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Valid { k: u32, invariants_used: usize },
    Invalid(Trace),
    Unknown(UnknownReason),
}

impl Verdict {
    pub fn kind(&self) -> VerdictKind {
        match self {
            Verdict::Valid { .. } => VerdictKind::Valid,
            Verdict::Invalid(_) => VerdictKind::Invalid,
            Verdict::Unknown(_) => VerdictKind::Unknown,
        }
    }

    /// The depth reported to the user: the induction depth, or the index of
    /// the violating step.
    pub fn k(&self) -> Option<u32> {
        match self {
            Verdict::Valid { k, .. } => Some(*k),
            Verdict::Invalid(t) => Some(t.k()),
            Verdict::Unknown(_) => None,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Valid { k, invariants_used } => write!(f, "VALID k={k} invariants={invariants_used}"),
            Verdict::Invalid(t) => write!(f, "INVALID k={}\n{t}", t.k()),
            Verdict::Unknown(r) => write!(f, "UNKNOWN reason={r}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Base and step only.
    KInduct,
    /// Plus an invariant generator that reports once (Version A).
    NoIncInv,
    /// Plus an invariant generator that reports as it goes (Version B).
    IncInv,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::KInduct, Mode::NoIncInv, Mode::IncInv];

    pub fn name(self) -> &'static str {
        match self {
            Mode::KInduct => "k-induct",
            Mode::NoIncInv => "no-inc-inv",
            Mode::IncInv => "inc-inv",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Mode, String> {
        Mode::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| format!("unknown mode `{s}`"))
    }
}

#[derive(Clone, Debug)]
pub struct EngineOptions {
    pub mode: Mode,
    /// Global wall-clock budget.
    pub timeout: Duration,
    pub max_k: u32,
    pub path_compression: bool,
    pub solver: SolverConfig,
    pub caps: PoolCaps,
    pub templates: Vec<Template>,
    /// Send only not-yet-emitted invariants in incremental mode.
    pub inv_delta: bool,
    /// Test instrumentation: sleep this long before every inductive step check.
    pub step_check_delay: Option<Duration>,
}

impl EngineOptions {
    pub fn new(mode: Mode, solver: SolverConfig) -> Self {
        EngineOptions {
            mode,
            timeout: Duration::from_secs(100),
            max_k: 200,
            path_compression: false,
            solver,
            caps: PoolCaps::default(),
            templates: Template::ALL.to_vec(),
            inv_delta: true,
            step_check_delay: None,
        }
    }
}

/// Default per-check solver budget used by the CLI.
pub const DEFAULT_CHECK_TIMEOUT: Duration = Duration::from_secs(20);

/// What every worker needs besides its queues.
#[derive(Clone)]
pub struct WorkerCtx {
    pub solver: SolverConfig,
    pub cancel: Cancel,
}

pub(crate) enum Polled {
    Message(Message),
    Empty,
    /// Every sender is gone or the run was cancelled.
    Closed,
}

pub(crate) fn poll(inbox: &Receiver<Message>, cancel: &Cancel) -> Polled {
    if cancel.is_cancelled() {
        return Polled::Closed;
    }
    match inbox.try_recv() {
        Ok(m) => Polled::Message(m),
        Err(TryRecvError::Empty) => Polled::Empty,
        Err(TryRecvError::Disconnected) => Polled::Closed,
    }
}

/// Blocks until a message arrives; `None` once the inbox is closed or the run
/// is cancelled.
pub(crate) fn wait(inbox: &Receiver<Message>, cancel: &Cancel) -> Option<Message> {
    loop {
        if cancel.is_cancelled() {
            return None;
        }
        match inbox.recv_timeout(Duration::from_millis(20)) {
            Ok(m) => return Some(m),
            Err(RecvTimeoutError::Timeout) => {}
            Err(RecvTimeoutError::Disconnected) => return None,
        }
    }
}

pub(crate) fn solver_failure(e: SmtError) -> UnknownReason {
    match e {
        SmtError::Cancelled => UnknownReason::Timeout,
        other => UnknownReason::SolverError(other.to_string()),
    }
}
