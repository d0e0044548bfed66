//! SMT-LIB 2 solver sessions over a subprocess.
//!
//! Each session owns one solver process and is used by exactly one worker.
//! Communication runs with `:print-success` enabled so every command is
//! acknowledged, and entailment checks are scoped with `push`/`pop` so they
//! leave the assertion set untouched.

mod session;
mod sexp;

use thiserror::Error;

pub use session::{Cancel, CheckResult, SessionStats, SolverConfig, SolverSession};
pub use sexp::Sexp;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SmtError {
    #[error("cannot launch solver: {0}")]
    Spawn(String),
    #[error("solver rejected the session configuration: {0}")]
    Handshake(String),
    #[error("solver protocol error: {0}")]
    Protocol(String),
    #[error("cannot parse model: {0}")]
    ModelParse(String),
    #[error("session cancelled")]
    Cancelled,
    #[error("i/o error: {0}")]
    Io(String),
}
