//! Trigger enumeration, applicability, derivations under strategies, Datalog saturation and the
//! breadth-first chase.
//!
//! Null labels are `<rule id>#<serial>.<variable>` where the serial of an applied trigger is its
//! 1-based step number. Oblivious and semi-oblivious applicability are decided from the
//! [`History`] of applied triggers, which under this labelling is literally "the output of the same
//! (rule, match) / (rule, frontier match) is already present".

mod breadth;
mod engine;
mod state;
mod strategy;

use std::collections::BTreeSet;

use thiserror::Error;

use crate::derivation::{Applicability, ChaseVariant, History, Trigger};
use crate::hom::{BudgetExceeded, Pattern, Search};
use crate::model::{Atom, FactBase, Term};

pub use breadth::{breadth_first_layer, ch_k, ch_layers, BreadthFirst};
pub use engine::{datalog_saturate, run_chase, Chase, DEFAULT_HOM_BUDGET};
pub use state::{enumerate_triggers, ChaseState};
pub use strategy::{Phase, PhaseMode, Strategy, StrategyParseError, TriggerChoice};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ChaseError {
    #[error("strategy error at step {step}: {reason}")]
    Strategy { step: usize, reason: String },
    #[error("unknown rule id '{0}'")]
    UnknownRule(String),
    #[error("homomorphism search budget exhausted while checking applicability")]
    HomBudget,
    #[error("Datalog saturation did not finish within {0} steps")]
    Budget(usize),
}

impl From<BudgetExceeded> for ChaseError {
    fn from(_: BudgetExceeded) -> Self {
        ChaseError::HomBudget
    }
}

/// Is `t` applicable on `facts` under `variant` (ignoring Datalog-first priority)?
///
/// Unbounded; see [`ChaseState::applicable`] for the budgeted check used by the engine.
pub fn is_applicable(
    variant: ChaseVariant,
    t: &Trigger,
    facts: &FactBase,
    history: &History,
) -> bool {
    applicable_bounded(variant.base, t, facts, history, None).expect("no budget set")
}

pub(crate) fn applicable_bounded(
    base: Applicability,
    t: &Trigger,
    facts: &FactBase,
    history: &History,
    budget: Option<u64>,
) -> Result<bool, BudgetExceeded> {
    if t.rule().is_datalog() {
        // All notions coincide for Datalog rules: the head instance is not yet present.
        return Ok(t.output().iter().any(|a| !facts.contains(a)));
    }
    match base {
        Applicability::Oblivious => Ok(!history.fired_same_match(t)),
        Applicability::SemiOblivious => Ok(!history.fired_same_frontier(t)),
        Applicability::Restricted => Ok(!head_retracts(t, facts, budget)?),
        Applicability::Equivalent => {
            if head_retracts(t, facts, budget)? {
                return Ok(false);
            }
            Ok(!equivalent_hom(t, facts, budget)?)
        }
    }
}

/// A retraction from `F ∪ out(t)` to `F` fixes every term of `F`, so it exists iff the head maps
/// into `F` with the frontier pinned to its image and only the existentials free.
fn head_retracts(
    t: &Trigger,
    facts: &FactBase,
    budget: Option<u64>,
) -> Result<bool, BudgetExceeded> {
    let rule = t.rule();
    let fixed = rule
        .body_variables()
        .iter()
        .zip(t.image())
        .map(|(v, img)| (Term::Variable(v.clone()), img.clone()))
        .collect();
    let pattern = Pattern::new(rule.head(), &fixed, Term::is_variable);
    found(Search::new(&pattern, facts).budget(budget))
}

fn found(mut search: Search<'_>) -> Result<bool, BudgetExceeded> {
    let mut any = false;
    let _ = search.run(&mut |_| {
        any = true;
        std::ops::ControlFlow::Break(())
    })?;
    Ok(any)
}

/// Is there a homomorphism from `F ∪ out(t)` to `F` moving every null?
///
/// Components of `F ∪ out(t)` (linked by shared nulls) that avoid `out(t)` map identically, so only
/// the component(s) touching `out(t)` are searched.
fn equivalent_hom(
    t: &Trigger,
    facts: &FactBase,
    budget: Option<u64>,
) -> Result<bool, BudgetExceeded> {
    let out = t.output();
    let mut nulls: BTreeSet<Term> = out
        .iter()
        .flat_map(|a| a.args.iter())
        .filter(|x| x.is_null())
        .cloned()
        .collect();
    let mut component: BTreeSet<Atom> = out.iter().cloned().collect();
    let mut frontier: Vec<Term> = nulls.iter().cloned().collect();
    let with_nulls: Vec<&Atom> = facts
        .iter()
        .filter(|a| a.args.iter().any(Term::is_null))
        .collect();
    while let Some(n) = frontier.pop() {
        for a in &with_nulls {
            if a.args.contains(&n) && component.insert((*a).clone()) {
                for x in &a.args {
                    if x.is_null() && nulls.insert(x.clone()) {
                        frontier.push(x.clone());
                    }
                }
            }
        }
    }
    let source: Vec<Atom> = component.into_iter().collect();
    let pattern = Pattern::new(&source, &Default::default(), Term::is_null);
    found(Search::new(&pattern, facts).budget(budget))
}
