//! Termination analysis and query entailment.
//!
//! - [`explore_all`]: do all derivations stay below a length bound?
//! - [`find_terminating`]: is there one finite fair derivation?
//! - [`entails`]: Boolean conjunctive query answering on top of the chase.
//! - [`classify`]: run a corpus of fixtures against their recorded expectations.

mod classify;
mod explore;
mod terminating;

use std::ops::ControlFlow;

use crate::chase::{Chase, Strategy};
use crate::derivation::{ChaseVariant, Verdict};
use crate::hom::{find_homomorphism, Assignment};
use crate::model::{Atom, KnowledgeBase};

pub use classify::{
    classify, prefix_matches, ClassificationRow, Expectation, Fixture, FixtureBudget, FixtureError,
    Mode, PhasedStrategy,
};
pub use explore::{
    explore_all, ExplorationReport, ExplorationVerdict, ExploreBudget, GrowthWitness,
};
pub use terminating::{find_terminating, find_terminating_with, Found, TerminatingSearch};

/// Answer of a budgeted entailment check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TriState {
    /// A homomorphism from the query into a fact base of the derivation.
    Yes(Assignment),
    /// The derivation terminated fairly and its result has no match.
    No,
    /// Neither could be established within the budget.
    Unknown(String),
}

impl TriState {
    pub fn name(&self) -> &'static str {
        match self {
            TriState::Yes(_) => "yes",
            TriState::No => "no",
            TriState::Unknown(_) => "unknown",
        }
    }
}

/// Does `kb` entail the Boolean conjunctive query `query`?
///
/// Runs the chase (FIFO, Datalog-first under a Datalog-first variant) and answers `Yes` as soon as
/// the query maps into the current fact base: fact bases only grow along a derivation and each
/// is entailed by the knowledge base. `No` requires a fair finite derivation.
pub fn entails(
    kb: &KnowledgeBase,
    query: &[Atom],
    variant: ChaseVariant,
    max_steps: usize,
) -> TriState {
    let mut witness = None;
    let run = Chase::new(kb, variant)
        .strategy(&Strategy::Fifo)
        .max_steps(max_steps)
        .run_observed(
            |st| match find_homomorphism(query, st.facts(), &Assignment::new()) {
                Some(h) => {
                    witness = Some(h);
                    ControlFlow::Break(())
                }
                None => ControlFlow::Continue(()),
            },
        );
    match (run, witness) {
        (_, Some(h)) => TriState::Yes(h),
        (Ok(Some(d)), None) if d.verdict == Verdict::TerminatedFair => TriState::No,
        (Ok(Some(d)), None) => TriState::Unknown(
            d.note
                .clone()
                .unwrap_or_else(|| format!("{} after {} steps", d.verdict, d.len())),
        ),
        (Ok(None), None) => unreachable!("the observer only stops the run with a witness"),
        (Err(e), None) => TriState::Unknown(e.to_string()),
    }
}
