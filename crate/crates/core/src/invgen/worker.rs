use std::sync::mpsc::{Receiver, Sender};

use log::{debug, warn};

use super::{filter, CandidateSet};
use crate::encoder::TransitionSystem;
use crate::engine::{poll, Message, Polled, WorkerCtx};
use crate::logic::{instantiate_state, instantiate_trans, Term};
use crate::smt::{CheckResult, SmtError, SolverSession};

#[derive(Clone, Debug)]
pub struct InvGenOptions {
    /// Send only conjuncts not sent before (Version B).
    pub delta: bool,
    /// Bound on the unrolling depth.
    pub max_k: u32,
}

/// One `M3` payload as sent.
#[derive(Clone, Debug, PartialEq)]
pub struct M3Record {
    pub ids: Vec<usize>,
    pub formulas: Vec<Term>,
    pub proved_at_k: u32,
}

#[derive(Clone, Debug, Default)]
pub struct InvGenReport {
    pub sent: Vec<M3Record>,
    pub checks: u64,
    /// Why the generator gave up early, if it did.
    pub aborted: Option<String>,
}

enum Halt {
    /// `M4` received, inbox closed or run cancelled.
    Stopped,
    Abort(String),
}

impl From<SmtError> for Halt {
    fn from(e: SmtError) -> Halt {
        match e {
            SmtError::Cancelled => Halt::Stopped,
            other => Halt::Abort(other.to_string()),
        }
    }
}

struct Gen<'a> {
    sys: &'a TransitionSystem,
    inbox: &'a Receiver<Message>,
    outbox: &'a Sender<Message>,
    ctx: &'a WorkerCtx,
    report: InvGenReport,
}

impl Gen<'_> {
    fn open(&self, label: &str) -> Result<SolverSession, Halt> {
        Ok(SolverSession::open(&self.ctx.solver.with_label(label), &self.ctx.cancel)?)
    }

    fn stop_requested(&self) -> bool {
        loop {
            match poll(self.inbox, &self.ctx.cancel) {
                Polled::Empty => return false,
                Polled::Closed | Polled::Message(Message::StopInvGen) => return true,
                Polled::Message(other) => warn!("invgen: unexpected message {other:?}"),
            }
        }
    }

    /// Removes conjuncts of `c` until the session entails `c@goal`. With
    /// `hyps = Some(n)`, the surviving conjuncts are also assumed at steps
    /// `0..=n`, in a scope rebuilt whenever `c` shrinks. Returns whether
    /// anything was removed.
    fn refine(&mut self, s: &mut SolverSession, c: &mut CandidateSet, goal: u32, hyps: Option<u32>) -> Result<bool, Halt> {
        let mut changed = false;
        let mut scoped = false;
        let mut stale = true;
        let bound = c.alive_count() + 8;
        let mut retried = false;
        for _ in 0..bound {
            if self.stop_requested() {
                return Err(Halt::Stopped);
            }
            if let Some(n) = hyps.filter(|_| stale) {
                if scoped {
                    s.pop()?;
                }
                s.push()?;
                scoped = true;
                for i in 0..=n {
                    s.assert(&c.at(i))?;
                }
                stale = false;
            }
            let timeout = if retried { self.ctx.solver.check_timeout.map(|t| t * 4) } else { self.ctx.solver.check_timeout };
            self.report.checks += 1;
            match s.entailed_within(&c.at(goal), timeout)? {
                CheckResult::Entailed => {
                    if scoped {
                        s.pop()?;
                    }
                    return Ok(changed);
                }
                CheckResult::NotEntailed(model) => {
                    retried = false;
                    if filter(c, &model, goal) == 0 {
                        return Err(Halt::Abort("counterexample falsifies no candidate".into()));
                    }
                    changed = true;
                    stale = true;
                }
                CheckResult::Unknown(r) if !retried => {
                    debug!("invgen: unknown ({r}), retrying with a longer timeout");
                    retried = true;
                }
                CheckResult::Unknown(r) => return Err(Halt::Abort(format!("solver unknown: {r}"))),
            }
        }
        Err(Halt::Abort("filter iteration bound exceeded".into()))
    }

    fn send(&mut self, invariants: Vec<(usize, Term)>, proved_at_k: u32) -> Result<(), Halt> {
        debug!("invgen: sending {} invariants proved at k={proved_at_k}", invariants.len());
        self.report.sent.push(M3Record {
            ids: invariants.iter().map(|(id, _)| *id).collect(),
            formulas: invariants.iter().map(|(_, f)| f.clone()).collect(),
            proved_at_k,
        });
        self.outbox.send(Message::Invariants { invariants, proved_at_k }).map_err(|_| Halt::Stopped)
    }

    /// Adds `T(x_{k-1}, x_k)`, or `I(x_0)` when `k = 0`.
    fn unroll(&self, s: &mut SolverSession, k: u32) -> Result<(), Halt> {
        if k == 0 {
            s.assert(&instantiate_state(&self.sys.init, 0))?;
        } else {
            s.assert(&instantiate_trans(&self.sys.trans, k - 1))?;
        }
        Ok(())
    }

    fn version_a(&mut self, mut c: CandidateSet, opts: &InvGenOptions) -> Result<(), Halt> {
        let mut base = self.open("invgen-base")?;
        let mut k = 0;
        // Phase 1: weaken C until a whole round of base checks changes nothing.
        loop {
            self.unroll(&mut base, k)?;
            if !self.refine(&mut base, &mut c, k, None)? {
                break;
            }
            if k >= opts.max_k {
                return Err(Halt::Abort("depth bound reached in base filtering".into()));
            }
            k += 1;
        }
        drop(base);
        // Phase 2: keep the part of C that is inductive at depth k.
        let mut ind = self.open("invgen-ind")?;
        for i in 0..=k {
            ind.assert(&instantiate_trans(&self.sys.trans, i))?;
        }
        self.refine(&mut ind, &mut c, k + 1, Some(k))?;
        let survivors = c.unemitted();
        c.mark_emitted(survivors.iter().map(|(id, _)| *id));
        self.send(survivors, k)
    }

    fn version_b(&mut self, mut c: CandidateSet, opts: &InvGenOptions) -> Result<(), Halt> {
        let mut base = self.open("invgen-base")?;
        let mut ind = self.open("invgen-ind")?;
        for k in 0..=opts.max_k {
            self.unroll(&mut base, k)?;
            self.refine(&mut base, &mut c, k, None)?;
            let mut d = c.clone();
            ind.reset()?;
            for i in 0..=k {
                ind.assert(&instantiate_trans(&self.sys.trans, i))?;
            }
            let changed = self.refine(&mut ind, &mut d, k + 1, Some(k))?;
            let out = if opts.delta { d.unemitted() } else { d.alive().map(|x| (x.id, x.formula.clone())).collect() };
            if !out.is_empty() {
                let ids: Vec<usize> = out.iter().map(|(id, _)| *id).collect();
                c.mark_emitted(ids.iter().copied());
                self.send(out, k)?;
            }
            if !changed {
                // Every surviving candidate is already proved.
                return Ok(());
            }
        }
        Ok(())
    }
}

/// Version A: filter against base counterexamples until a round changes
/// nothing, then against inductive counterexamples, and send the survivors
/// once. On failure sends an empty conjunction.
pub fn invgen_version_a(
    sys: &TransitionSystem,
    candidates: CandidateSet,
    inbox: &Receiver<Message>,
    outbox: &Sender<Message>,
    opts: &InvGenOptions,
    ctx: &WorkerCtx,
) -> InvGenReport {
    let mut g = Gen { sys, inbox, outbox, ctx, report: InvGenReport::default() };
    if let Err(Halt::Abort(why)) = g.version_a(candidates, opts) {
        warn!("invgen: giving up: {why}");
        g.report.aborted = Some(why);
        if g.report.sent.is_empty() {
            let _ = g.send(Vec::new(), 0);
        }
    }
    g.report
}

/// Version B: per depth, filter against base counterexamples, then find the
/// inductive part of a copy and send what it proves.
pub fn invgen_version_b(
    sys: &TransitionSystem,
    candidates: CandidateSet,
    inbox: &Receiver<Message>,
    outbox: &Sender<Message>,
    opts: &InvGenOptions,
    ctx: &WorkerCtx,
) -> InvGenReport {
    let mut g = Gen { sys, inbox, outbox, ctx, report: InvGenReport::default() };
    if let Err(Halt::Abort(why)) = g.version_b(candidates, opts) {
        warn!("invgen: giving up: {why}");
        g.report.aborted = Some(why);
    }
    g.report
}
