//! Exhaustive exploration of the derivation graph of a knowledge base.
//!
//! Nodes are chase states, edges admissible triggers. Every step adds at least one atom, so the
//! graph is acyclic and the longest derivation from a state is well defined. The explorer runs a
//! depth-first search that tries older triggers first (the age of a trigger is the step that
//! produced the youngest atom of its support; ties follow rule order, then match order), memoises
//! the longest remaining derivation per state up to isomorphism, and stops as soon as a derivation
//! longer than the depth bound is found. That derivation is the growth witness: the first long
//! derivation in age order.

use std::collections::HashMap;

use crate::chase::{ChaseError, ChaseState, DEFAULT_HOM_BUDGET};
use crate::derivation::{Applicability, ChaseVariant, Trigger};
use crate::hom::{canonical_code, CanonicalCode};
use crate::model::{Atom, KnowledgeBase};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExploreBudget {
    /// A derivation longer than this is reported as growth.
    pub max_depth: usize,
    /// Maximal number of state expansions.
    pub max_nodes: usize,
    /// Merge isomorphic states.
    pub dedup: bool,
    /// Node budget per applicability homomorphism search.
    pub hom_budget: Option<u64>,
}

impl Default for ExploreBudget {
    fn default() -> Self {
        ExploreBudget {
            max_depth: 12,
            max_nodes: 5000,
            dedup: true,
            hom_budget: Some(DEFAULT_HOM_BUDGET),
        }
    }
}

/// A derivation longer than the depth bound.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrowthWitness {
    /// The applied triggers, as `rule{X->t, …}`.
    pub triggers: Vec<String>,
    /// Atoms added by each step.
    pub deltas: Vec<Vec<Atom>>,
    /// Whether the unbounded derivation certifies non-termination of the variant (restricted
    /// chase, atomic heads only), as opposed to exhibiting a possibly unfair long derivation.
    pub certified: bool,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExplorationVerdict {
    /// Every derivation is finite; `max_len` is the longest, `nodes` the number of distinct states.
    AllFinite {
        max_len: usize,
        nodes: usize,
    },
    GrowthWitness(GrowthWitness),
    /// The node budget (or a homomorphism-search budget) ran out; `frontier` counts discovered but
    /// unfinished states.
    BudgetExceeded {
        frontier: usize,
        reason: String,
    },
}

impl ExplorationVerdict {
    pub fn name(&self) -> &'static str {
        match self {
            ExplorationVerdict::AllFinite { .. } => "all-finite",
            ExplorationVerdict::GrowthWitness(_) => "growth",
            ExplorationVerdict::BudgetExceeded { .. } => "budget-exceeded",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExplorationReport {
    pub verdict: ExplorationVerdict,
    pub budget: ExploreBudget,
    /// States expanded (a state reached again through a longer prefix may be expanded twice).
    pub expanded: usize,
    /// Visits answered from the memo.
    pub dedup_hits: usize,
}

pub fn explore_all(
    kb: &KnowledgeBase,
    variant: ChaseVariant,
    budget: ExploreBudget,
) -> ExplorationReport {
    let mut ex = Explorer {
        budget,
        variant,
        memo: HashMap::new(),
        expanded: 0,
        dedup_hits: 0,
        open: 0,
    };
    let root = ChaseState::new(kb, variant).with_hom_budget(budget.hom_budget);
    let verdict = match ex.longest(&root) {
        Ok(max_len) => ExplorationVerdict::AllFinite {
            max_len,
            nodes: if budget.dedup {
                ex.memo.len()
            } else {
                ex.expanded
            },
        },
        Err(Stop::Growth(st)) => {
            let certified =
                variant == ChaseVariant::R && kb.rules().iter().all(|r| r.is_atomic_headed());
            let reason = if certified {
                "non-termination certified".to_string()
            } else {
                "unbounded derivation found (fairness not certified)".to_string()
            };
            ExplorationVerdict::GrowthWitness(GrowthWitness {
                triggers: st.steps().iter().map(|s| s.trigger.to_string()).collect(),
                deltas: st.steps().iter().map(|s| s.added.clone()).collect(),
                certified,
                reason,
            })
        }
        Err(Stop::Budget(reason)) => ExplorationVerdict::BudgetExceeded {
            frontier: ex.open,
            reason,
        },
    };
    ExplorationReport {
        verdict,
        budget,
        expanded: ex.expanded,
        dedup_hits: ex.dedup_hits,
    }
}

enum Stop {
    Growth(ChaseState),
    Budget(String),
}

impl From<ChaseError> for Stop {
    fn from(e: ChaseError) -> Stop {
        Stop::Budget(e.to_string())
    }
}

struct Explorer {
    budget: ExploreBudget,
    variant: ChaseVariant,
    memo: HashMap<CanonicalCode, usize>,
    expanded: usize,
    dedup_hits: usize,
    open: usize,
}

impl Explorer {
    /// Length of the longest derivation from `st`, or the first derivation passing the bound.
    fn longest(&mut self, st: &ChaseState) -> Result<usize, Stop> {
        let depth = st.len();
        if depth > self.budget.max_depth {
            return Err(Stop::Growth(st.clone()));
        }
        let code = self.budget.dedup.then(|| state_code(st, self.variant));
        if let Some(&known) = code.as_ref().and_then(|c| self.memo.get(c)) {
            // A known state is skipped unless its longest continuation passes the bound from
            // here, in which case it is re-expanded to produce the witness.
            if depth + known <= self.budget.max_depth {
                self.dedup_hits += 1;
                return Ok(known);
            }
        }
        self.expanded += 1;
        if self.expanded > self.budget.max_nodes {
            return Err(Stop::Budget(format!(
                "more than {} state expansions",
                self.budget.max_nodes
            )));
        }
        let successors = by_age(st)?;
        self.open += successors.len();
        let mut best = 0;
        for t in successors {
            let mut child = st.clone();
            child.apply(&t);
            best = best.max(1 + self.longest(&child)?);
            self.open -= 1;
        }
        if let Some(c) = code {
            self.memo.insert(c, best);
        }
        Ok(best)
    }
}

/// Canonical code of a state: the fact base, plus the history where applicability depends on it.
pub(crate) fn state_code(st: &ChaseState, variant: ChaseVariant) -> CanonicalCode {
    let history = match variant.base {
        Applicability::Oblivious => st.history().as_atoms(false),
        Applicability::SemiOblivious => st.history().as_atoms(true),
        Applicability::Restricted | Applicability::Equivalent => Vec::new(),
    };
    canonical_code(st.facts().iter().chain(history.iter()))
}

/// Admissible triggers on `st`, oldest first.
pub(crate) fn by_age(st: &ChaseState) -> Result<Vec<Trigger>, ChaseError> {
    let birth: HashMap<&Atom, usize> = st
        .steps()
        .iter()
        .enumerate()
        .flat_map(|(i, s)| s.added.iter().map(move |a| (a, i + 1)))
        .collect();
    let mut out = Vec::new();
    for t in st.admissible_triggers()? {
        let age = t
            .support()
            .iter()
            .map(|a| birth.get(a).copied().unwrap_or(0))
            .max()
            .unwrap_or(0);
        out.push((age, t));
    }
    // Stable: equal ages keep enumeration order.
    out.sort_by_key(|(age, _)| *age);
    Ok(out.into_iter().map(|(_, t)| t).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textio::parse_document;

    fn kb(text: &str) -> KnowledgeBase {
        parse_document(text).unwrap().knowledge_base().unwrap()
    }

    const EX1: &str = "[R] P(X,Y) -> exists Z. P(Y,Z), P(Z,Y).\nP(a,b).";

    #[test]
    fn restricted_example_has_one_step_and_two_states() {
        let rep = explore_all(&kb(EX1), ChaseVariant::R, ExploreBudget::default());
        assert_eq!(
            rep.verdict,
            ExplorationVerdict::AllFinite {
                max_len: 1,
                nodes: 2
            }
        );
    }

    #[test]
    fn nothing_applicable_is_one_state() {
        let rep = explore_all(
            &kb("P(X) -> Q(X).\nR(a)."),
            ChaseVariant::R,
            ExploreBudget::default(),
        );
        assert_eq!(
            rep.verdict,
            ExplorationVerdict::AllFinite {
                max_len: 0,
                nodes: 1
            }
        );
    }

    #[test]
    fn semi_oblivious_example_grows() {
        let rep = explore_all(
            &kb(EX1),
            ChaseVariant::SO,
            ExploreBudget {
                max_depth: 6,
                ..Default::default()
            },
        );
        let ExplorationVerdict::GrowthWitness(w) = rep.verdict else {
            panic!("{:?}", rep.verdict)
        };
        assert_eq!(w.deltas.len(), 7);
        assert!(!w.certified);
    }

    #[test]
    fn node_budget_is_reported() {
        let rep = explore_all(
            &kb(EX1),
            ChaseVariant::O,
            ExploreBudget {
                max_depth: 50,
                max_nodes: 5,
                ..Default::default()
            },
        );
        assert!(
            matches!(rep.verdict, ExplorationVerdict::BudgetExceeded { .. }),
            "{:?}",
            rep.verdict
        );
    }

    #[test]
    fn dedup_does_not_change_the_verdict() {
        // Two independent Datalog steps commute: 4 states with dedup, 5 expansions without.
        let k = kb("P(X) -> Q(X).\nP(a). P(b).");
        let on = explore_all(&k, ChaseVariant::R, ExploreBudget::default());
        let off = explore_all(
            &k,
            ChaseVariant::R,
            ExploreBudget {
                dedup: false,
                ..Default::default()
            },
        );
        assert_eq!(
            on.verdict,
            ExplorationVerdict::AllFinite {
                max_len: 2,
                nodes: 4
            }
        );
        assert_eq!(
            off.verdict,
            ExplorationVerdict::AllFinite {
                max_len: 2,
                nodes: 5
            }
        );
    }
}
