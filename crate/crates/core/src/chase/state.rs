//! The mutable state of one derivation: current fact base, history and applied steps.

use std::cell::Cell;
use std::collections::{BTreeMap, HashSet};
use std::ops::ControlFlow;
use std::sync::Arc;

use super::{applicable_bounded, ChaseError};
use crate::derivation::{
    Applicability, ChaseStats, ChaseVariant, Derivation, History, Step, Trigger, Verdict,
};
use crate::hom::{Pattern, Search};
use crate::model::{Atom, FactBase, KnowledgeBase, Rule, Symbol, Term};

/// A rule with its body compiled for matching; slots are the body variables in canonical order.
#[derive(Debug)]
pub(crate) struct CompiledRule {
    pub rule: Arc<Rule>,
    body: Pattern,
}

impl CompiledRule {
    pub fn new(rule: Arc<Rule>) -> CompiledRule {
        let slots: Vec<Term> = rule
            .body_variables()
            .iter()
            .map(|v| Term::Variable(v.clone()))
            .collect();
        let body = Pattern::with_slots(rule.body(), &slots);
        CompiledRule { rule, body }
    }

    /// Every body match into `facts`, sorted.
    pub fn matches(&self, facts: &FactBase) -> Vec<Vec<Term>> {
        let mut out = Vec::new();
        let _ = Search::new(&self.body, facts).run(&mut |img| {
            out.push(img.to_vec());
            ControlFlow::Continue(())
        });
        out.sort();
        out
    }

    /// Body matches into `facts` that use at least one atom of `delta` (which must be ⊆ `facts`),
    /// each reported once, sorted.
    pub fn delta_matches(
        &self,
        facts: &FactBase,
        delta: &[Atom],
        delta_set: &HashSet<&Atom>,
    ) -> Vec<Vec<Term>> {
        let mut out = Vec::new();
        for (i, b) in self.rule.body().iter().enumerate() {
            // Body atoms before `i` must map outside the delta, so a match is found only at the
            // first body position whose image is new.
            let older = |j: usize, a: &Atom| j >= i || !delta_set.contains(a);
            for d in delta
                .iter()
                .filter(|d| d.predicate == b.predicate && d.arity() == b.arity())
            {
                let _ = Search::new(&self.body, facts)
                    .pin(i, d)
                    .filter(&older)
                    .run(&mut |img| {
                        out.push(img.to_vec());
                        ControlFlow::Continue(())
                    });
            }
        }
        out.sort();
        out.dedup();
        out
    }
}

/// Every trigger on `facts` in rule order, then match order; serials count from 1.
pub fn enumerate_triggers(rules: &[Arc<Rule>], facts: &FactBase) -> Vec<Trigger> {
    let mut serial = 0;
    let mut out = Vec::new();
    for r in rules {
        for img in CompiledRule::new(r.clone()).matches(facts) {
            serial += 1;
            out.push(Trigger::new(r.clone(), img, serial));
        }
    }
    out
}

/// A candidate trigger before it is stamped with a serial: rule index and body image.
pub(crate) type Candidate = (usize, Vec<Term>);

/// One derivation in progress. Cloning forks it (used by exhaustive exploration).
#[derive(Clone, Debug)]
pub struct ChaseState {
    rules: Arc<Vec<CompiledRule>>,
    variant: ChaseVariant,
    hom_budget: Option<u64>,
    initial: FactBase,
    facts: FactBase,
    history: History,
    steps: Vec<Step>,
    datalog_closed: Cell<Option<bool>>,
    stats: Cell<ChaseStats>,
}

impl ChaseState {
    pub fn new(kb: &KnowledgeBase, variant: ChaseVariant) -> ChaseState {
        ChaseState::from_parts(kb.rules(), kb.facts().clone(), variant)
    }

    pub(crate) fn from_parts(
        rules: &[Arc<Rule>],
        facts: FactBase,
        variant: ChaseVariant,
    ) -> ChaseState {
        let rules = rules.iter().map(|r| CompiledRule::new(r.clone())).collect();
        ChaseState {
            rules: Arc::new(rules),
            variant,
            hom_budget: None,
            initial: facts.clone(),
            facts,
            history: History::new(),
            steps: Vec::new(),
            datalog_closed: Cell::new(None),
            stats: Cell::new(ChaseStats::default()),
        }
    }

    /// Node budget for each homomorphism search done by an applicability check.
    pub fn with_hom_budget(mut self, budget: Option<u64>) -> ChaseState {
        self.hom_budget = budget;
        self
    }

    pub fn variant(&self) -> ChaseVariant {
        self.variant
    }

    pub fn facts(&self) -> &FactBase {
        &self.facts
    }

    pub fn initial(&self) -> &FactBase {
        &self.initial
    }

    pub fn history(&self) -> &History {
        &self.history
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    /// Number of applied triggers.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn rules(&self) -> impl Iterator<Item = &Arc<Rule>> {
        self.rules.iter().map(|c| &c.rule)
    }

    pub(crate) fn rule_at(&self, idx: usize) -> &Arc<Rule> {
        &self.rules[idx].rule
    }

    pub(crate) fn rule_index(&self, id: &str) -> Option<usize> {
        self.rules.iter().position(|c| &**c.rule.id() == id)
    }

    /// The serial the next applied trigger receives.
    pub fn next_serial(&self) -> u64 {
        self.steps.len() as u64 + 1
    }

    pub(crate) fn trigger_of(&self, (idx, img): &Candidate) -> Trigger {
        Trigger::new(
            self.rules[*idx].rule.clone(),
            img.clone(),
            self.next_serial(),
        )
    }

    /// All candidates on the current fact base, in rule order then match order.
    pub(crate) fn candidates(&self) -> Vec<Candidate> {
        self.candidates_of(|_| true)
    }

    pub(crate) fn candidates_of(&self, keep: impl Fn(usize) -> bool) -> Vec<Candidate> {
        let mut out = Vec::new();
        for (i, c) in self.rules.iter().enumerate() {
            if keep(i) {
                out.extend(c.matches(&self.facts).into_iter().map(|img| (i, img)));
            }
        }
        out
    }

    /// Candidates that use at least one atom of the last step's delta.
    pub(crate) fn delta_candidates(&self, delta: &[Atom]) -> Vec<Candidate> {
        let set: HashSet<&Atom> = delta.iter().collect();
        let mut out = Vec::new();
        for (i, c) in self.rules.iter().enumerate() {
            out.extend(
                c.delta_matches(&self.facts, delta, &set)
                    .into_iter()
                    .map(|img| (i, img)),
            );
        }
        out
    }

    /// Every trigger on the current fact base (applicable or not), stamped with the next serial.
    pub fn triggers(&self) -> Vec<Trigger> {
        self.candidates()
            .iter()
            .map(|c| self.trigger_of(c))
            .collect()
    }

    /// The trigger of rule `rule_id` under `matching`, which must map the body into the current
    /// fact base.
    pub fn trigger(
        &self,
        rule_id: &str,
        matching: &BTreeMap<Symbol, Term>,
    ) -> Result<Trigger, ChaseError> {
        let idx = self
            .rule_index(rule_id)
            .ok_or_else(|| ChaseError::UnknownRule(rule_id.to_string()))?;
        let rule = self.rules[idx].rule.clone();
        let t = Trigger::from_matching(rule, matching, self.next_serial()).ok_or_else(|| {
            ChaseError::Strategy {
                step: self.len() + 1,
                reason: format!("match for rule {rule_id} does not bind every body variable"),
            }
        })?;
        if let Some(missing) = t.support().into_iter().find(|a| !self.facts.contains(a)) {
            return Err(ChaseError::Strategy {
                step: self.len() + 1,
                reason: format!(
                    "trigger {t} is not a trigger on the current fact base: {missing} is absent"
                ),
            });
        }
        Ok(t)
    }

    /// Applicability under the variant's notion, ignoring Datalog-first priority.
    pub fn applicable(&self, t: &Trigger) -> Result<bool, ChaseError> {
        let mut stats = self.stats.get();
        stats.triggers_considered += 1;
        if !t.rule().is_datalog()
            && matches!(
                self.variant.base,
                Applicability::Restricted | Applicability::Equivalent
            )
        {
            stats.hom_checks += 1;
        }
        self.stats.set(stats);
        Ok(applicable_bounded(
            self.variant.base,
            t,
            &self.facts,
            &self.history,
            self.hom_budget,
        )?)
    }

    /// Does the current fact base satisfy every Datalog rule?
    pub fn datalog_satisfied(&self) -> bool {
        if let Some(v) = self.datalog_closed.get() {
            return v;
        }
        let closed = self.rules.iter().filter(|c| c.rule.is_datalog()).all(|c| {
            c.matches(&self.facts).into_iter().all(|img| {
                let t = Trigger::new(c.rule.clone(), img, 0);
                t.output().iter().all(|a| self.facts.contains(a))
            })
        });
        self.datalog_closed.set(Some(closed));
        closed
    }

    /// Applicable, and (under a Datalog-first variant) either Datalog or on a Datalog-closed
    /// fact base.
    pub fn admissible(&self, t: &Trigger) -> Result<bool, ChaseError> {
        if self.variant.datalog_first && !t.rule().is_datalog() && !self.datalog_satisfied() {
            return Ok(false);
        }
        self.applicable(t)
    }

    pub(crate) fn admissible_candidate(&self, c: &Candidate) -> Result<bool, ChaseError> {
        self.admissible(&self.trigger_of(c))
    }

    /// Admissible triggers on the current fact base, in enumeration order.
    pub fn admissible_triggers(&self) -> Result<Vec<Trigger>, ChaseError> {
        let mut out = Vec::new();
        for c in self.candidates() {
            let t = self.trigger_of(&c);
            if self.admissible(&t)? {
                out.push(t);
            }
        }
        Ok(out)
    }

    /// Is any trigger admissible? Stops at the first one.
    pub fn any_admissible(&self) -> Result<bool, ChaseError> {
        for c in self.candidates() {
            if self.admissible_candidate(&c)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Applies `t` (restamped with the next serial) without checking applicability, and returns
    /// the atoms it added. The caller is responsible for having checked admissibility.
    pub fn apply(&mut self, t: &Trigger) -> &[Atom] {
        let t = t.with_serial(self.next_serial());
        let added: Vec<Atom> = t
            .output()
            .into_iter()
            .filter(|a| self.facts.insert(a.clone()))
            .collect();
        self.history.record(&t);
        self.datalog_closed.set(None);
        self.steps.push(Step { trigger: t, added });
        &self.steps.last().expect("just pushed").added
    }

    pub fn stats(&self) -> ChaseStats {
        self.stats.get()
    }

    pub fn into_derivation(self, verdict: Verdict, note: Option<String>) -> Derivation {
        Derivation {
            variant: self.variant,
            initial: self.initial,
            steps: self.steps,
            result: self.facts,
            verdict,
            note,
            stats: self.stats.get(),
        }
    }
}
