use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

use log::{debug, warn};

use super::step::StepOptions;
use super::{run_base, run_step, BaseReport, EngineOptions, Mode, StepReport, UnknownReason, Verdict, WorkerCtx};
use crate::encoder::{harvest_terms, TransitionSystem};
use crate::invgen::{generate_candidates, invgen_version_a, invgen_version_b, InvGenOptions, InvGenReport, M3Record};
use crate::logic::Term;
use crate::smt::Cancel;

/// Time the orchestrator lets workers wind down after the base worker
/// returns, before cancelling them.
const GRACE: Duration = Duration::from_millis(200);

#[derive(Clone, Debug, Default)]
pub struct RunStats {
    pub elapsed: Duration,
    pub checks_base: u64,
    pub checks_step: u64,
    pub checks_invgen: u64,
    /// Conjuncts sent in `M3` messages, counting repeats.
    pub inv_emitted: usize,
    pub inv_used: usize,
    pub candidates: usize,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub verdict: Verdict,
    pub stats: RunStats,
    /// Every `M3` payload, in sending order.
    pub invariants: Vec<M3Record>,
    /// Set when the invariant generator gave up.
    pub invgen_aborted: Option<String>,
}

/// Checks the conjunction of the system's properties.
pub fn orchestrate(sys: &TransitionSystem, opts: &EngineOptions) -> RunOutcome {
    check_property(sys, &sys.property(), opts)
}

/// Runs the workers of `opts.mode` on `prop` and returns the base worker's
/// verdict once every worker has stopped.
pub fn check_property(sys: &TransitionSystem, prop: &Term, opts: &EngineOptions) -> RunOutcome {
    let started = Instant::now();
    let deadline = started + opts.timeout;
    let cancel = Cancel::new();
    let ctx = WorkerCtx { solver: opts.solver.clone(), cancel: cancel.clone() };

    let (to_base, base_inbox) = mpsc::channel();
    let (to_step, step_inbox) = mpsc::channel();
    let (to_invgen, invgen_inbox) = mpsc::channel();
    let with_invgen = opts.mode != Mode::KInduct;

    let candidates = if with_invgen { generate_candidates(&harvest_terms(sys, opts.caps), &opts.templates) } else { Default::default() };
    let n_candidates = candidates.len();

    let (base, step, invgen) = thread::scope(|scope| {
        let base = {
            let (ctx, to_step) = (ctx.clone(), to_step.clone());
            let to_invgen = with_invgen.then(|| to_invgen.clone());
            let max_k = opts.max_k;
            thread::Builder::new()
                .name("base".into())
                .spawn_scoped(scope, move || run_base(sys, prop, &base_inbox, &to_step, to_invgen.as_ref(), max_k, &ctx))
                .expect("spawn base worker")
        };
        let step = {
            let ctx = ctx.clone();
            let step_opts =
                StepOptions { max_k: opts.max_k, path_compression: opts.path_compression, check_delay: opts.step_check_delay };
            thread::Builder::new()
                .name("step".into())
                .spawn_scoped(scope, move || run_step(sys, prop, &step_inbox, &to_base, &step_opts, &ctx))
                .expect("spawn step worker")
        };
        let invgen = with_invgen.then(|| {
            let ctx = ctx.clone();
            let to_step = to_step.clone();
            let inv_opts = InvGenOptions { delta: opts.inv_delta, max_k: opts.max_k };
            let mode = opts.mode;
            thread::Builder::new()
                .name("invgen".into())
                .spawn_scoped(scope, move || match mode {
                    Mode::NoIncInv => invgen_version_a(sys, candidates, &invgen_inbox, &to_step, &inv_opts, &ctx),
                    _ => invgen_version_b(sys, candidates, &invgen_inbox, &to_step, &inv_opts, &ctx),
                })
                .expect("spawn invgen worker")
        });
        // Only workers hold senders from here on.
        drop(to_step);
        drop(to_invgen);

        let mut timed_out = false;
        while !base.is_finished() {
            if Instant::now() >= deadline {
                debug!("orchestrator: global timeout");
                timed_out = true;
                cancel.cancel();
                break;
            }
            thread::sleep(Duration::from_millis(5));
        }
        let grace_end = Instant::now() + GRACE;
        while !(step.is_finished() && invgen.as_ref().is_none_or(|h| h.is_finished())) {
            if Instant::now() >= grace_end {
                debug!("orchestrator: cancelling lingering workers");
                cancel.cancel();
                break;
            }
            thread::sleep(Duration::from_millis(5));
        }
        let mut base = base.join().map_err(panic_message);
        if timed_out {
            base = Ok(BaseReport { verdict: Verdict::Unknown(UnknownReason::Timeout), checks: base.map(|b| b.checks).unwrap_or(0) });
        }
        let step = step.join().map_err(panic_message);
        let invgen = invgen.map(|h| h.join().map_err(panic_message));
        (base, step, invgen)
    });

    let step: StepReport = step.unwrap_or_else(|e| {
        warn!("step worker crashed: {e}");
        StepReport { error: Some(e), ..Default::default() }
    });
    let invgen: Option<InvGenReport> = match invgen {
        Some(Ok(r)) => Some(r),
        Some(Err(e)) => {
            warn!("invariant generator crashed: {e}");
            Some(InvGenReport { aborted: Some(e), ..Default::default() })
        }
        None => None,
    };
    let (mut verdict, checks_base) = match base {
        Ok(b) => (b.verdict, b.checks),
        Err(e) => (Verdict::Unknown(UnknownReason::Crash(e)), 0),
    };
    if let Verdict::Valid { invariants_used, .. } = &mut verdict {
        *invariants_used = step.invariants_used;
    }
    // A failed peer can only have cost us a proof, except a step worker that
    // could not start its solver.
    if let (Verdict::Unknown(UnknownReason::MaxK), Some(e)) = (&verdict, &step.error) {
        verdict = Verdict::Unknown(UnknownReason::SolverError(e.clone()));
    }

    let invariants = invgen.as_ref().map(|r| r.sent.clone()).unwrap_or_default();
    let stats = RunStats {
        elapsed: started.elapsed(),
        checks_base,
        checks_step: step.checks,
        checks_invgen: invgen.as_ref().map_or(0, |r| r.checks),
        inv_emitted: invariants.iter().map(|m| m.ids.len()).sum(),
        inv_used: step.invariants_used,
        candidates: n_candidates,
    };
    RunOutcome { verdict, stats, invariants, invgen_aborted: invgen.and_then(|r| r.aborted) }
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| p.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "worker panicked".into())
}
