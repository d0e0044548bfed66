//! Parallel k-induction model checking for synchronous dataflow programs.

pub mod encoder;
pub mod engine;
pub mod frontend;
pub mod fuzz;
pub mod invgen;
pub mod logic;
pub mod smt;
