#![allow(dead_code)]

pub mod oracle;

use std::path::PathBuf;
use std::time::Duration;

use pkind::encoder::{encode, TransitionSystem};
use pkind::engine::{EngineOptions, Mode};
use pkind::frontend::{elaborate, TypedProgram};
use pkind::smt::SolverConfig;

/// Solver used by the integration tests: `PK_SOLVER`, else `z3 -in`.
pub fn solver() -> SolverConfig {
    SolverConfig::from_env()
}

pub fn options(mode: Mode) -> EngineOptions {
    let mut solver = solver();
    solver.check_timeout = Some(Duration::from_secs(20));
    let mut o = EngineOptions::new(mode, solver);
    o.timeout = Duration::from_secs(60);
    o.max_k = 30;
    o
}

pub fn system_of(src: &str) -> TransitionSystem {
    encode(&elaborate(src, None).unwrap()).unwrap()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Expected {
    /// Valid and k-inductive at this depth (of the encoded system).
    Inductive(u32),
    /// Valid, but not k-inductive for any k without an auxiliary invariant.
    NeedsInvariant,
    /// Invalid; the shortest counterexample has this many states.
    Invalid(u32),
}

/// The bundled corpus with its oracle-confirmed classification.
///
/// Why each valid integer program is valid (the hand proofs backing the
/// classification; bounded unrolling to depth 30 backs the invalid ones):
///
/// * `delay_le`: y is the previous x and x only grows by one, so y <= x. The
///   property is implied by any single transition, hence 0-inductive.
/// * `ctr3_le3`: x cycles through 0..3, and from x <= 3 the update
///   `if x = 3 then 0 else x + 1` stays <= 3. The property stream `ok` is only
///   tied to x from the second state on, so the encoded system is 1-inductive.
/// * `chain2` / `chain5`: x stays 0 forever (the guarded increment needs
///   x >= 1). Spurious chains 1, 2, ..., N+1 reach the bad value N+1 after N
///   steps, so the encoded property is exactly N-inductive.
/// * `ctr3_neg`, `cnt_neg`: x >= 0 is inductive and implies x <> -1; without
///   it, the chain -k, ..., -2, -1 is a counterexample to induction of every
///   length.
/// * `sync`: x = y is inductive and implies the property; without it, states
///   with y = x + 4 reach (3, 7) from arbitrarily long property-satisfying
///   paths.
/// * `latch`: b stays false, so a stays false. `b => a` is inductive and
///   strengthens `not a` to an inductive property; without it the path
///   a = false, b = true, i = false, ... is arbitrarily long. Confirmed by
///   explicit-state reachability.
pub const CORPUS: [(&str, Expected); 12] = [
    ("delay_le", Expected::Inductive(0)),
    ("ctr3_le3", Expected::Inductive(1)),
    ("chain2", Expected::Inductive(2)),
    ("chain5", Expected::Inductive(5)),
    ("ctr3_neg", Expected::NeedsInvariant),
    ("cnt_neg", Expected::NeedsInvariant),
    ("sync", Expected::NeedsInvariant),
    ("latch", Expected::NeedsInvariant),
    ("cex1", Expected::Invalid(1)),
    ("cex2", Expected::Invalid(2)),
    ("cex4", Expected::Invalid(4)),
    ("cex8", Expected::Invalid(8)),
];

/// The boolean-only corpus member.
pub const BOOL_ONLY: &str = "latch";

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub struct CorpusEntry {
    pub name: &'static str,
    pub expected: Expected,
    pub program: TypedProgram,
    pub sys: TransitionSystem,
}

pub fn corpus() -> Vec<CorpusEntry> {
    CORPUS
        .iter()
        .map(|&(name, expected)| {
            let path = corpus_dir().join(format!("{name}.lus"));
            let src = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            let program = elaborate(&src, None).unwrap_or_else(|e| panic!("{name}: {e}"));
            let sys = encode(&program).unwrap();
            CorpusEntry { name, expected, program, sys }
        })
        .collect()
}

/// Solver subprocesses that are children of this test process.
pub fn solver_children() -> Vec<u32> {
    let me = std::process::id();
    let mut out = Vec::new();
    let Ok(entries) = std::fs::read_dir("/proc") else { return out };
    for e in entries.flatten() {
        let Ok(pid) = e.file_name().to_string_lossy().parse::<u32>() else { continue };
        let Ok(stat) = std::fs::read_to_string(format!("/proc/{pid}/stat")) else { continue };
        // Fields after the parenthesized command: state, ppid, ...
        let Some(rest) = stat.rsplit_once(')').map(|(_, r)| r.to_string()) else { continue };
        let fields: Vec<&str> = rest.split_whitespace().collect();
        let (state, ppid) = (fields.first().copied(), fields.get(1).and_then(|p| p.parse::<u32>().ok()));
        if ppid == Some(me) && state != Some("Z") {
            out.push(pid);
        }
    }
    out
}
