use std::collections::HashSet;
use std::sync::mpsc::{Receiver, Sender};
use std::time::Duration;

use log::{debug, warn};

use super::{path_compression_delta, poll, wait, Message, Polled, WorkerCtx};
use crate::encoder::TransitionSystem;
use crate::logic::{instantiate_state, instantiate_trans, Term};
use crate::smt::{CheckResult, SmtError, SolverSession};

#[derive(Clone, Debug, Default)]
pub struct StepReport {
    /// Depth at which the inductive step succeeded.
    pub proved_k: Option<u32>,
    /// Distinct invariants asserted when the step succeeded (or at exit).
    pub invariants_used: usize,
    pub checks: u64,
    pub error: Option<String>,
}

#[derive(Clone, Debug)]
pub struct StepOptions {
    pub max_k: u32,
    pub path_compression: bool,
    pub check_delay: Option<Duration>,
}

/// The inductive step worker. Checks
/// `T(x0,x1) & ... & T(xk,xk+1) & P(x0) & ... & P(xk) |= P(xk+1)`
/// for increasing `k`, strengthened by every invariant received in `M3`.
/// Sends `M1` on success, then idles until `M2` or the run ends.
pub fn run_step(
    sys: &TransitionSystem,
    prop: &Term,
    inbox: &Receiver<Message>,
    to_base: &Sender<Message>,
    opts: &StepOptions,
    ctx: &WorkerCtx,
) -> StepReport {
    let mut w = StepWorker { sys, prop, session: None, invariants: Vec::new(), seen: HashSet::new(), k: 0, report: StepReport::default() };
    match w.run(inbox, to_base, opts, ctx) {
        Ok(()) | Err(SmtError::Cancelled) => {}
        Err(e) => {
            warn!("step: {e}");
            w.report.error = Some(e.to_string());
        }
    }
    w.report.invariants_used = w.invariants.len();
    w.report
}

struct StepWorker<'a> {
    sys: &'a TransitionSystem,
    prop: &'a Term,
    session: Option<SolverSession>,
    invariants: Vec<Term>,
    seen: HashSet<Term>,
    /// Depth whose hypotheses are currently asserted.
    k: u32,
    report: StepReport,
}

enum Next {
    Continue,
    Stop,
}

impl StepWorker<'_> {
    fn run(&mut self, inbox: &Receiver<Message>, to_base: &Sender<Message>, opts: &StepOptions, ctx: &WorkerCtx) -> Result<(), SmtError> {
        self.session = Some(SolverSession::open(&ctx.solver.with_label("step"), &ctx.cancel)?);
        self.extend_to(0, opts.path_compression)?;
        loop {
            if let Next::Stop = self.drain(inbox, ctx)? {
                return Ok(());
            }
            if let Some(d) = opts.check_delay {
                if ctx.cancel.sleep(d) {
                    return Ok(());
                }
            }
            self.report.checks += 1;
            let goal = instantiate_state(self.prop, self.k + 1);
            let session = self.session.as_mut().expect("open");
            match session.entailed(&goal)? {
                CheckResult::Entailed => {
                    debug!("step: proved at k={} with {} invariants", self.k, self.invariants.len());
                    self.report.proved_k = Some(self.k);
                    self.report.invariants_used = self.invariants.len();
                    let _ = to_base.send(Message::StepProved(self.k));
                    // Idle until the base worker is done.
                    while let Some(m) = wait(inbox, &ctx.cancel) {
                        if let Message::BaseTerminated(_) = m {
                            break;
                        }
                    }
                    return Ok(());
                }
                CheckResult::NotEntailed(_) => {
                    let before = self.invariants.len();
                    if let Next::Stop = self.drain(inbox, ctx)? {
                        return Ok(());
                    }
                    if self.invariants.len() > before {
                        // Same k, stronger hypothesis.
                        continue;
                    }
                }
                CheckResult::Unknown(r) => debug!("step: unknown at k={} ({r}), moving on", self.k),
            }
            if self.k >= opts.max_k {
                debug!("step: giving up after k={}", self.k);
                return Ok(());
            }
            self.extend_to(self.k + 1, opts.path_compression)?;
        }
    }

    /// Handles pending messages. Invariants are asserted at `0..=k+1`.
    fn drain(&mut self, inbox: &Receiver<Message>, ctx: &WorkerCtx) -> Result<Next, SmtError> {
        loop {
            match poll(inbox, &ctx.cancel) {
                Polled::Empty => return Ok(Next::Continue),
                Polled::Closed => return Ok(Next::Stop),
                Polled::Message(Message::BaseTerminated(_)) => return Ok(Next::Stop),
                Polled::Message(Message::Invariants { invariants, proved_at_k }) => {
                    debug!("step: received {} invariants proved at k={proved_at_k}", invariants.len());
                    for (_, inv) in invariants {
                        if !self.seen.insert(inv.clone()) {
                            continue;
                        }
                        let session = self.session.as_mut().expect("open");
                        for i in 0..=self.k + 1 {
                            session.assert(&instantiate_state(&inv, i))?;
                        }
                        self.invariants.push(inv);
                    }
                }
                Polled::Message(other) => warn!("step: unexpected message {other:?}"),
            }
        }
    }

    /// Asserts the hypotheses for depth `k`, given those for `k - 1`.
    fn extend_to(&mut self, k: u32, compression: bool) -> Result<(), SmtError> {
        let session = self.session.as_mut().expect("open");
        session.assert(&instantiate_trans(&self.sys.trans, k))?;
        session.assert(&instantiate_state(self.prop, k))?;
        for inv in &self.invariants {
            if k == 0 {
                session.assert(&instantiate_state(inv, 0))?;
            }
            session.assert(&instantiate_state(inv, k + 1))?;
        }
        if compression {
            for c in path_compression_delta(self.sys, k + 1) {
                session.assert(&c)?;
            }
        }
        self.k = k;
        Ok(())
    }
}
