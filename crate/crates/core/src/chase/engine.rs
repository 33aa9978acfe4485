//! Building derivations: the [`Chase`] runner and the schedulers behind each [`Strategy`].

use std::collections::{HashSet, VecDeque};
use std::ops::ControlFlow;
use std::sync::Arc;

use super::state::{Candidate, ChaseState};
use super::strategy::{Phase, Strategy, TriggerChoice};
use super::ChaseError;
use crate::derivation::{ChaseVariant, Derivation, Trigger, Verdict};
use crate::model::{Atom, FactBase, KnowledgeBase, Rule};

static FIFO: Strategy = Strategy::Fifo;

/// Default node budget of a single applicability homomorphism search.
pub const DEFAULT_HOM_BUDGET: u64 = 5_000_000;

/// Configures and runs one derivation.
///
/// ```
/// use chasekit::chase::Chase;
/// use chasekit::derivation::{ChaseVariant, Verdict};
/// use chasekit::textio::parse_document;
///
/// let kb = parse_document("P(X,Y) -> exists Z. P(Y,Z), P(Z,Y).\nP(a,b).")
///     .unwrap()
///     .knowledge_base()
///     .unwrap();
/// let d = Chase::new(&kb, ChaseVariant::R).max_steps(100).run().unwrap();
/// assert_eq!((d.verdict, d.len(), d.result.len()), (Verdict::TerminatedFair, 1, 3));
/// ```
pub struct Chase<'a> {
    kb: &'a KnowledgeBase,
    variant: ChaseVariant,
    strategy: &'a Strategy,
    max_steps: usize,
    hom_budget: Option<u64>,
}

impl<'a> Chase<'a> {
    pub fn new(kb: &'a KnowledgeBase, variant: ChaseVariant) -> Chase<'a> {
        Chase {
            kb,
            variant,
            strategy: &FIFO,
            max_steps: 1000,
            hom_budget: Some(DEFAULT_HOM_BUDGET),
        }
    }

    pub fn strategy(mut self, strategy: &'a Strategy) -> Chase<'a> {
        self.strategy = strategy;
        self
    }

    /// Maximal number of applied triggers.
    pub fn max_steps(mut self, max_steps: usize) -> Chase<'a> {
        self.max_steps = max_steps;
        self
    }

    /// Node budget per applicability homomorphism search; `None` disables the bound.
    pub fn hom_budget(mut self, budget: Option<u64>) -> Chase<'a> {
        self.hom_budget = budget;
        self
    }

    pub fn run(self) -> Result<Derivation, ChaseError> {
        Ok(self
            .run_observed(|_| ControlFlow::Continue(()))?
            .expect("the observer never stops the run"))
    }

    /// Runs while `observe` (called on the initial state and after every step) continues; `None`
    /// when the observer stopped the run.
    pub fn run_observed(
        self,
        mut observe: impl FnMut(&ChaseState) -> ControlFlow<()>,
    ) -> Result<Option<Derivation>, ChaseError> {
        let mut state = ChaseState::new(self.kb, self.variant).with_hom_budget(self.hom_budget);
        if observe(&state).is_break() {
            return Ok(None);
        }
        let mut scheduler = Scheduler::new(self.strategy, &state)?;
        let (verdict, note) = loop {
            if state.len() >= self.max_steps {
                break settle(&state, Verdict::BudgetExhausted);
            }
            match scheduler.next(&state) {
                Ok(Some(t)) => {
                    let added = state.apply(&t).to_vec();
                    scheduler.applied(&state, &added);
                    if observe(&state).is_break() {
                        return Ok(None);
                    }
                }
                Ok(None) => break settle(&state, Verdict::TerminatedUnfair),
                Err(ChaseError::HomBudget) => break budget_note(),
                Err(e) => return Err(e),
            }
        };
        Ok(Some(state.into_derivation(verdict, note)))
    }
}

/// The verdict when the scheduler stops: fair if nothing is admissible, else `otherwise`.
fn settle(state: &ChaseState, otherwise: Verdict) -> (Verdict, Option<String>) {
    match state.any_admissible() {
        Ok(false) => (Verdict::TerminatedFair, None),
        Ok(true) => (otherwise, None),
        Err(_) => budget_note(),
    }
}

fn budget_note() -> (Verdict, Option<String>) {
    (
        Verdict::BudgetExhausted,
        Some("homomorphism search budget exhausted".to_string()),
    )
}

/// Runs `strategy` under `variant` for at most `max_steps` applied triggers.
pub fn run_chase(
    kb: &KnowledgeBase,
    variant: ChaseVariant,
    strategy: &Strategy,
    max_steps: usize,
) -> Result<Derivation, ChaseError> {
    Chase::new(kb, variant)
        .strategy(strategy)
        .max_steps(max_steps)
        .run()
}

/// The least fixpoint of the Datalog rules among `rules` over `facts`.
pub fn datalog_saturate(
    rules: &[Arc<Rule>],
    facts: &FactBase,
    max_steps: usize,
) -> Result<FactBase, ChaseError> {
    let datalog: Vec<Arc<Rule>> = rules.iter().filter(|r| r.is_datalog()).cloned().collect();
    let mut state = ChaseState::from_parts(&datalog, facts.clone(), ChaseVariant::R);
    let mut scheduler = Scheduler::new(&FIFO, &state)?;
    while let Some(t) = scheduler.next(&state)? {
        if state.len() >= max_steps {
            return Err(ChaseError::Budget(max_steps));
        }
        let added = state.apply(&t).to_vec();
        scheduler.applied(&state, &added);
    }
    Ok(state.facts().clone())
}

enum Scheduler<'s> {
    Fifo(FifoQueue),
    Phased(PhaseCursor<'s>),
    Scripted {
        choices: &'s [TriggerChoice],
        next: usize,
    },
}

impl<'s> Scheduler<'s> {
    fn new(strategy: &'s Strategy, state: &ChaseState) -> Result<Scheduler<'s>, ChaseError> {
        Ok(match strategy {
            Strategy::Fifo => Scheduler::Fifo(FifoQueue::new(state, state.variant().datalog_first)),
            Strategy::DatalogFirst => Scheduler::Fifo(FifoQueue::new(state, true)),
            Strategy::Phased(phases) => Scheduler::Phased(PhaseCursor::new(phases, state)?),
            Strategy::Scripted(choices) => Scheduler::Scripted { choices, next: 0 },
        })
    }

    /// The next trigger to apply, admissible on `state`; `None` when the strategy is done.
    fn next(&mut self, state: &ChaseState) -> Result<Option<Trigger>, ChaseError> {
        match self {
            Scheduler::Fifo(q) => q.next(state),
            Scheduler::Phased(p) => p.next(state),
            Scheduler::Scripted { choices, next } => {
                let Some(choice) = choices.get(*next) else {
                    return Ok(None);
                };
                let t = state.trigger(&choice.rule, &choice.matching)?;
                if !state.admissible(&t)? {
                    return Err(ChaseError::Strategy {
                        step: *next + 1,
                        reason: format!("trigger {t} is not {}-applicable", state.variant()),
                    });
                }
                *next += 1;
                Ok(Some(t))
            }
        }
    }

    fn applied(&mut self, state: &ChaseState, added: &[Atom]) {
        if let Scheduler::Fifo(q) = self {
            q.extend(state, state.delta_candidates(added));
        }
    }
}

/// Work queue of candidates in discovery order. With `split`, Datalog candidates wait in their own
/// queue, which is always drained first.
///
/// When both queues are empty every candidate was seen inadmissible at some point; a final sweep
/// re-checks all candidates, since equivalent-chase applicability can come back after a step.
struct FifoQueue {
    split: bool,
    datalog: VecDeque<Candidate>,
    other: VecDeque<Candidate>,
}

impl FifoQueue {
    fn new(state: &ChaseState, split: bool) -> FifoQueue {
        let mut q = FifoQueue {
            split,
            datalog: VecDeque::new(),
            other: VecDeque::new(),
        };
        q.extend(state, state.candidates());
        q
    }

    fn extend(&mut self, state: &ChaseState, candidates: Vec<Candidate>) {
        for c in candidates {
            if self.split && state.rule_at(c.0).is_datalog() {
                self.datalog.push_back(c);
            } else {
                self.other.push_back(c);
            }
        }
    }

    fn next(&mut self, state: &ChaseState) -> Result<Option<Trigger>, ChaseError> {
        let mut swept = false;
        loop {
            let Some(c) = self.datalog.pop_front().or_else(|| self.other.pop_front()) else {
                if swept {
                    return Ok(None);
                }
                swept = true;
                let mut admissible = Vec::new();
                for c in state.candidates() {
                    if state.admissible_candidate(&c)? {
                        admissible.push(c);
                    }
                }
                if admissible.is_empty() {
                    return Ok(None);
                }
                self.extend(state, admissible);
                continue;
            };
            if state.admissible_candidate(&c)? {
                return Ok(Some(state.trigger_of(&c)));
            }
        }
    }
}

/// Position in a phased strategy.
struct PhaseCursor<'s> {
    phases: &'s [Phase],
    rule_sets: Vec<HashSet<usize>>,
    phase: usize,
    used: usize,
}

impl<'s> PhaseCursor<'s> {
    fn new(phases: &'s [Phase], state: &ChaseState) -> Result<PhaseCursor<'s>, ChaseError> {
        let rule_sets = phases
            .iter()
            .map(|p| {
                p.rules
                    .iter()
                    .map(|id| {
                        state
                            .rule_index(id)
                            .ok_or_else(|| ChaseError::UnknownRule(id.clone()))
                    })
                    .collect()
            })
            .collect::<Result<_, _>>()?;
        Ok(PhaseCursor {
            phases,
            rule_sets,
            phase: 0,
            used: 0,
        })
    }

    fn next(&mut self, state: &ChaseState) -> Result<Option<Trigger>, ChaseError> {
        while self.phase < self.phases.len() {
            if self.phases[self.phase]
                .limit()
                .is_some_and(|n| self.used >= n)
            {
                self.advance();
                continue;
            }
            // Under a Datalog-first variant, pending Datalog work precedes whatever the phase picks.
            if state.variant().datalog_first && !state.datalog_satisfied() {
                if let Some(t) = first_admissible(state, |i| state.rule_at(i).is_datalog())? {
                    return Ok(Some(t));
                }
            }
            let rules = &self.rule_sets[self.phase];
            match first_admissible(state, |i| rules.contains(&i))? {
                Some(t) => {
                    self.used += 1;
                    return Ok(Some(t));
                }
                None => self.advance(),
            }
        }
        Ok(None)
    }

    fn advance(&mut self) {
        self.phase += 1;
        self.used = 0;
    }
}

fn first_admissible(
    state: &ChaseState,
    keep: impl Fn(usize) -> bool,
) -> Result<Option<Trigger>, ChaseError> {
    for c in state.candidates_of(keep) {
        if state.admissible_candidate(&c)? {
            return Ok(Some(state.trigger_of(&c)));
        }
    }
    Ok(None)
}
