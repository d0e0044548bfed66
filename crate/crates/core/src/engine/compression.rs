use crate::encoder::TransitionSystem;
use crate::logic::{instantiate_state, Term};

/// Constraints restricting the inductive step at depth `k` to paths without
/// repeated states and with no initial state after position 0:
/// `not (x_i = x_j)` for `0 <= i < j <= k+1` and `not I(x_j)` for `1 <= j <= k+1`.
pub fn path_compression_constraints(sys: &TransitionSystem, k: u32) -> Vec<Term> {
    (1..=k + 1).flat_map(|j| path_compression_delta(sys, j)).collect()
}

/// The constraints that mention position `j` and no later position.
pub fn path_compression_delta(sys: &TransitionSystem, j: u32) -> Vec<Term> {
    let mut out: Vec<Term> = (0..j).map(|i| Term::not(sys.states_equal(i, j))).collect();
    out.push(Term::not(instantiate_state(&sys.init, j)));
    out
}
