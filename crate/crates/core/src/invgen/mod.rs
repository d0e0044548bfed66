//! Template-based candidate invariants and the two discovery procedures:
//! Version A reports one conjunction at the end, Version B reports
//! invariants as soon as they are proved.

mod worker;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::encoder::TermPool;
use crate::logic::{evaluate, free_indexed_vars, instantiate_state, Assignment, Sort, Term, Value};

pub use worker::{invgen_version_a, invgen_version_b, InvGenOptions, InvGenReport, M3Record};

/// A binary relation schema `R[s, t]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Template {
    /// `s <= t` over integer terms.
    IntLeq,
    /// `s => t` over boolean terms.
    BoolImp,
}

impl Template {
    pub const ALL: [Template; 2] = [Template::IntLeq, Template::BoolImp];

    pub fn sort(self) -> Sort {
        match self {
            Template::IntLeq => Sort::Int,
            Template::BoolImp => Sort::Bool,
        }
    }

    pub fn instantiate(self, s: &Term, t: &Term) -> Term {
        match self {
            Template::IntLeq => Term::le(s.clone(), t.clone()),
            Template::BoolImp => Term::implies(s.clone(), t.clone()),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Template::IntLeq => "int-leq",
            Template::BoolImp => "bool-imp",
        }
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Template {
    type Err = String;

    fn from_str(s: &str) -> Result<Template, String> {
        Template::ALL.into_iter().find(|t| t.name() == s).ok_or_else(|| format!("unknown template `{s}`"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Candidate {
    pub id: usize,
    pub formula: Term,
    pub alive: bool,
}

/// The conjunction `C` of candidate invariants. Conjuncts are never removed,
/// only marked dead, so ids stay stable.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CandidateSet {
    conjuncts: Vec<Candidate>,
    emitted: BTreeSet<usize>,
}

impl CandidateSet {
    pub fn from_formulas(formulas: impl IntoIterator<Item = Term>) -> CandidateSet {
        let conjuncts =
            formulas.into_iter().enumerate().map(|(id, formula)| Candidate { id, formula, alive: true }).collect();
        CandidateSet { conjuncts, emitted: BTreeSet::new() }
    }

    pub fn len(&self) -> usize {
        self.conjuncts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conjuncts.is_empty()
    }

    pub fn all(&self) -> &[Candidate] {
        &self.conjuncts
    }

    pub fn alive(&self) -> impl Iterator<Item = &Candidate> {
        self.conjuncts.iter().filter(|c| c.alive)
    }

    pub fn alive_count(&self) -> usize {
        self.alive().count()
    }

    pub fn alive_ids(&self) -> BTreeSet<usize> {
        self.alive().map(|c| c.id).collect()
    }

    pub fn is_alive(&self, id: usize) -> bool {
        self.conjuncts.get(id).is_some_and(|c| c.alive)
    }

    pub fn kill(&mut self, id: usize) {
        if let Some(c) = self.conjuncts.get_mut(id) {
            c.alive = false;
        }
    }

    /// The conjunction of the alive conjuncts at `step`.
    pub fn at(&self, step: u32) -> Term {
        Term::and_all(self.alive().map(|c| instantiate_state(&c.formula, step)).collect())
    }

    /// Alive conjuncts not yet handed out by [`CandidateSet::mark_emitted`].
    pub fn unemitted(&self) -> Vec<(usize, Term)> {
        self.alive().filter(|c| !self.emitted.contains(&c.id)).map(|c| (c.id, c.formula.clone())).collect()
    }

    pub fn mark_emitted(&mut self, ids: impl IntoIterator<Item = usize>) {
        self.emitted.extend(ids);
    }

    pub fn emitted(&self) -> &BTreeSet<usize> {
        &self.emitted
    }
}

/// Every instance `R[s, t]` with `s != t` for each template, over the pool
/// terms of the template's sort, in pool order.
pub fn generate_candidates(pool: &TermPool, templates: &[Template]) -> CandidateSet {
    let mut formulas = Vec::new();
    for &tpl in templates {
        let terms = match tpl.sort() {
            Sort::Int => &pool.int_terms,
            Sort::Bool => &pool.bool_terms,
            Sort::Real => continue,
        };
        for s in terms {
            for t in terms {
                if s != t {
                    formulas.push(tpl.instantiate(s, t));
                }
            }
        }
    }
    CandidateSet::from_formulas(formulas)
}

/// The restriction of `a` to the variables of `f`.
pub fn project(a: &Assignment, f: &Term) -> Assignment {
    let vars = free_indexed_vars(f);
    a.restrict(|v| vars.contains(v))
}

/// Kills every alive conjunct that `a` falsifies at `at_step`. Conjuncts that
/// cannot be evaluated under `a` stay alive. Returns the number killed.
pub fn filter(c: &mut CandidateSet, a: &Assignment, at_step: u32) -> usize {
    let mut killed = 0;
    for cand in c.conjuncts.iter_mut().filter(|c| c.alive) {
        let f = instantiate_state(&cand.formula, at_step);
        if evaluate(&f, &project(a, &f)) == Some(Value::Bool(false)) {
            cand.alive = false;
            killed += 1;
        }
    }
    killed
}
