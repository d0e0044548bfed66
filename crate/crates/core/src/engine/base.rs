use std::sync::mpsc::{Receiver, Sender};

use log::{debug, warn};

use super::{extract_trace, poll, solver_failure, wait, Message, Polled, UnknownReason, Verdict, WorkerCtx};
use crate::encoder::TransitionSystem;
use crate::logic::{instantiate_state, instantiate_trans, Term};
use crate::smt::{CheckResult, SolverSession};

#[derive(Clone, Debug)]
pub struct BaseReport {
    pub verdict: Verdict,
    pub checks: u64,
}

/// The base case worker: bounded model checking for `k = 0, 1, ...` that
/// also confirms the base case of an inductive proof announced by `M1`.
///
/// `to_step` carries `M2`, `to_invgen` carries `M4`.
pub fn run_base(
    sys: &TransitionSystem,
    prop: &Term,
    inbox: &Receiver<Message>,
    to_step: &Sender<Message>,
    to_invgen: Option<&Sender<Message>>,
    max_k: u32,
    ctx: &WorkerCtx,
) -> BaseReport {
    let mut checks = 0;
    let verdict = base_loop(sys, prop, inbox, max_k, ctx, &mut checks);
    debug!("base: {verdict:?}");
    let _ = to_step.send(Message::BaseTerminated(verdict.kind()));
    if let Some(tx) = to_invgen {
        let _ = tx.send(Message::StopInvGen);
    }
    BaseReport { verdict, checks }
}

fn base_loop(
    sys: &TransitionSystem,
    prop: &Term,
    inbox: &Receiver<Message>,
    max_k: u32,
    ctx: &WorkerCtx,
    checks: &mut u64,
) -> Verdict {
    let mut session = match SolverSession::open(&ctx.solver.with_label("base"), &ctx.cancel) {
        Ok(s) => s,
        Err(e) => return Verdict::Unknown(solver_failure(e)),
    };
    let mut proved: Option<u32> = None;
    let mut step_alive = true;
    let mut k = 0u32;
    loop {
        while step_alive {
            match poll(inbox, &ctx.cancel) {
                Polled::Message(Message::StepProved(n)) => proved = Some(proved.map_or(n, |p| p.min(n))),
                Polled::Message(other) => warn!("base: unexpected message {other:?}"),
                Polled::Empty => break,
                Polled::Closed => step_alive = false,
            }
        }
        if ctx.cancel.is_cancelled() {
            return Verdict::Unknown(UnknownReason::Timeout);
        }
        // Every base check up to and including n has passed.
        if let Some(n) = proved.filter(|&n| n < k) {
            return Verdict::Valid { k: n, invariants_used: 0 };
        }
        if k > max_k {
            // The step worker may still be working on some depth <= max_k.
            while step_alive {
                match wait(inbox, &ctx.cancel) {
                    Some(Message::StepProved(n)) if n <= max_k => return Verdict::Valid { k: n, invariants_used: 0 },
                    Some(_) => {}
                    None => step_alive = false,
                }
            }
            return Verdict::Unknown(if ctx.cancel.is_cancelled() { UnknownReason::Timeout } else { UnknownReason::MaxK });
        }

        let added = if k == 0 { session.assert(&instantiate_state(&sys.init, 0)) } else { session.assert(&instantiate_trans(&sys.trans, k - 1)) };
        if let Err(e) = added {
            return Verdict::Unknown(solver_failure(e));
        }
        *checks += 1;
        match session.entailed(&instantiate_state(prop, k)) {
            Ok(CheckResult::Entailed) => k += 1,
            Ok(CheckResult::NotEntailed(model)) => {
                return match extract_trace(&model, sys, k, prop) {
                    Ok(trace) => Verdict::Invalid(trace),
                    Err(e) => Verdict::Unknown(UnknownReason::Crash(e.to_string())),
                };
            }
            Ok(CheckResult::Unknown(reason)) => {
                debug!("base: solver unknown at k={k}: {reason}");
                return Verdict::Unknown(UnknownReason::SolverUnknown);
            }
            Err(e) => return Verdict::Unknown(solver_failure(e)),
        }
    }
}
