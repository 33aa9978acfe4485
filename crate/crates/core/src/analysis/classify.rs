//! Fixtures with recorded expectations, and the classification report comparing them with what
//! the explorer and the terminating-derivation search observe.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::explore::{explore_all, ExplorationVerdict, ExploreBudget};
use super::terminating::{find_terminating_with, TerminatingSearch};
use crate::chase::{Chase, Strategy};
use crate::derivation::{ChaseVariant, Derivation, Verdict};
use crate::hom::are_isomorphic;
use crate::model::{Atom, FactBase, KnowledgeBase, Rule};
use crate::normalize::{one_way, single_piece, two_way};
use crate::textio::{parse_facts, parse_rules};
use crate::tmgen::{simulation_kb, TuringMachine};

/// A knowledge base with expected per-variant verdicts.
#[derive(Clone, Debug, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fixture {
    pub id: String,
    /// Where the rule set comes from.
    pub anchor: String,
    /// Rules in `.erl` syntax.
    #[serde(default)]
    pub rules: String,
    /// Facts in `.erl` syntax.
    #[serde(default)]
    pub facts: String,
    /// Normalisation applied to `rules` before analysis: `sp`, `1ad` or `2ad`.
    #[serde(default)]
    pub transform: Option<String>,
    /// A `.tm` machine; the knowledge base is then its simulation on the tape of length `tape`.
    #[serde(default)]
    pub machine: Option<String>,
    #[serde(default)]
    pub tape: Option<usize>,
    #[serde(default)]
    pub budget: FixtureBudget,
    #[serde(default)]
    pub phased: Vec<PhasedStrategy>,
    #[serde(default)]
    pub expect: Vec<Expectation>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct FixtureBudget {
    pub max_depth: usize,
    pub max_nodes: usize,
    pub max_steps: usize,
}

impl Default for FixtureBudget {
    fn default() -> Self {
        FixtureBudget {
            max_depth: 12,
            max_nodes: 5000,
            max_steps: 200,
        }
    }
}

/// A named phased strategy; each phase is written `rule,rule:mode`.
#[derive(Clone, Debug, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhasedStrategy {
    pub name: String,
    pub phases: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// All derivations: `all-finite`, `growth` or `budget-exceeded`.
    Forall,
    /// Some derivation: `terminating` or `none-found`; with an explicit strategy, the verdict of
    /// that one run: `terminating`, `unfair` or `budget-exhausted`.
    Exists,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::Forall => "forall",
            Mode::Exists => "exists",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    pub variant: String,
    pub mode: Mode,
    pub verdict: String,
    /// `fifo`, `datalog-first` or the name of one of the fixture's phased strategies.
    #[serde(default)]
    pub strategy: Option<String>,
    /// Atoms added by the first steps (nulls renamed freely, consistently across steps).
    #[serde(default)]
    pub witness_prefix: Option<Vec<String>>,
    /// The result fact base, up to isomorphism.
    #[serde(default)]
    pub result: Option<String>,
    /// Length of the derivation found, or of the longest derivation.
    #[serde(default)]
    pub steps: Option<usize>,
}

/// One line of the classification report.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClassificationRow {
    pub fixture: String,
    pub variant: String,
    pub expected: String,
    pub observed: String,
    pub budget: FixtureBudget,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum FixtureError {
    #[error("fixture {fixture}: {reason}")]
    Malformed { fixture: String, reason: String },
}

const FORALL_VERDICTS: [&str; 3] = ["all-finite", "growth", "budget-exceeded"];
const EXISTS_VERDICTS: [&str; 2] = ["terminating", "none-found"];
const RUN_VERDICTS: [&str; 3] = ["terminating", "unfair", "budget-exhausted"];

/// A fixture with its knowledge base built and its annotations checked.
struct Prepared<'a> {
    fixture: &'a Fixture,
    kb: KnowledgeBase,
    phased: BTreeMap<String, Strategy>,
    expectations: Vec<(
        ChaseVariant,
        &'a Expectation,
        Option<Vec<Vec<Atom>>>,
        Option<FactBase>,
    )>,
}

impl Fixture {
    fn malformed(&self, reason: impl Into<String>) -> FixtureError {
        FixtureError::Malformed {
            fixture: self.id.clone(),
            reason: reason.into(),
        }
    }

    /// The rules after the optional transform.
    pub fn rule_set(&self) -> Result<Vec<Rule>, FixtureError> {
        let rules = parse_rules(&self.rules).map_err(|e| self.malformed(format!("rules: {e}")))?;
        let report = match self.transform.as_deref() {
            None => return Ok(rules),
            Some("sp") => single_piece(&rules),
            Some("1ad") => one_way(&rules, false).map_err(|e| self.malformed(e.to_string()))?,
            Some("2ad") => two_way(&rules, false).map_err(|e| self.malformed(e.to_string()))?,
            Some(other) => return Err(self.malformed(format!("unknown transform '{other}'"))),
        };
        Ok(report.output)
    }

    pub fn knowledge_base(&self) -> Result<KnowledgeBase, FixtureError> {
        if let Some(text) = &self.machine {
            let m: TuringMachine = text
                .parse()
                .map_err(|e| self.malformed(format!("machine: {e}")))?;
            let n = self
                .tape
                .ok_or_else(|| self.malformed("a machine fixture needs 'tape'"))?;
            return simulation_kb(&m, n).map_err(|e| self.malformed(e.to_string()));
        }
        let facts = parse_facts(&self.facts).map_err(|e| self.malformed(format!("facts: {e}")))?;
        KnowledgeBase::new(self.rule_set()?, facts).map_err(|e| self.malformed(e.to_string()))
    }

    /// Builds the knowledge base and checks every annotation without running anything.
    fn prepare(&self) -> Result<Prepared<'_>, FixtureError> {
        let kb = self.knowledge_base()?;
        let mut phased = BTreeMap::new();
        for p in &self.phased {
            let s = Strategy::parse_phases(&p.phases.join("\n"))
                .map_err(|e| self.malformed(format!("phased strategy {}: {e}", p.name)))?;
            if phased.insert(p.name.clone(), s).is_some() {
                return Err(self.malformed(format!("duplicate phased strategy {}", p.name)));
            }
        }
        let mut expectations = Vec::new();
        for e in &self.expect {
            let variant: ChaseVariant = e
                .variant
                .parse()
                .map_err(|err| self.malformed(format!("{err}")))?;
            let allowed: &[&str] = match (e.mode, &e.strategy) {
                (Mode::Forall, None) => &FORALL_VERDICTS,
                (Mode::Forall, Some(_)) => {
                    return Err(self.malformed("a strategy only applies to 'exists'"))
                }
                (Mode::Exists, None) => &EXISTS_VERDICTS,
                (Mode::Exists, Some(_)) => &RUN_VERDICTS,
            };
            if !allowed.contains(&e.verdict.as_str()) {
                return Err(self.malformed(format!(
                    "verdict '{}' is not one of {} for mode {}",
                    e.verdict,
                    allowed.join(", "),
                    e.mode.name()
                )));
            }
            if let Some(s) = &e.strategy {
                if !matches!(s.as_str(), "fifo" | "datalog-first") && !phased.contains_key(s) {
                    return Err(self.malformed(format!("unknown strategy '{s}'")));
                }
            }
            let prefix = match &e.witness_prefix {
                None => None,
                Some(steps) => Some(
                    steps
                        .iter()
                        .map(|s| parse_facts(s).map(|f| f.atoms()))
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|err| self.malformed(format!("witness_prefix: {err}")))?,
                ),
            };
            let result = match &e.result {
                None => None,
                Some(s) => {
                    Some(parse_facts(s).map_err(|err| self.malformed(format!("result: {err}")))?)
                }
            };
            expectations.push((variant, e, prefix, result));
        }
        Ok(Prepared {
            fixture: self,
            kb,
            phased,
            expectations,
        })
    }
}

/// Checks every fixture's annotations, then evaluates each expectation. Annotations are checked
/// for all fixtures before anything runs, so a malformed corpus fails fast.
pub fn classify(fixtures: &[Fixture]) -> Result<Vec<ClassificationRow>, FixtureError> {
    let prepared = fixtures
        .iter()
        .map(Fixture::prepare)
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::new();
    for p in &prepared {
        for (variant, e, prefix, result) in &p.expectations {
            rows.push(p.evaluate(*variant, e, prefix.as_deref(), result.as_ref()));
        }
    }
    Ok(rows)
}

impl Prepared<'_> {
    fn evaluate(
        &self,
        variant: ChaseVariant,
        e: &Expectation,
        prefix: Option<&[Vec<Atom>]>,
        result: Option<&FactBase>,
    ) -> ClassificationRow {
        let b = self.fixture.budget;
        let (verdict, deltas, found, length) = match (e.mode, &e.strategy) {
            (Mode::Forall, _) => {
                let budget = ExploreBudget {
                    max_depth: b.max_depth,
                    max_nodes: b.max_nodes,
                    ..Default::default()
                };
                let rep = explore_all(&self.kb, variant, budget);
                match rep.verdict {
                    ExplorationVerdict::AllFinite { max_len, .. } => {
                        ("all-finite", None, None, Some(max_len))
                    }
                    ExplorationVerdict::GrowthWitness(w) => ("growth", Some(w.deltas), None, None),
                    ExplorationVerdict::BudgetExceeded { .. } => {
                        ("budget-exceeded", None, None, None)
                    }
                }
            }
            (Mode::Exists, None) => {
                let search = TerminatingSearch {
                    max_steps: b.max_steps,
                    max_nodes: b.max_nodes,
                    ..Default::default()
                };
                let pool: Vec<Strategy> = self.phased.values().cloned().collect();
                match find_terminating_with(&self.kb, variant, search, &pool) {
                    Some(f) => {
                        let n = f.derivation.len();
                        (
                            "terminating",
                            Some(f.derivation.deltas()),
                            Some(f.derivation),
                            Some(n),
                        )
                    }
                    None => ("none-found", None, None, None),
                }
            }
            (Mode::Exists, Some(name)) => {
                let strategy = match name.as_str() {
                    "fifo" => Strategy::Fifo,
                    "datalog-first" => Strategy::DatalogFirst,
                    other => self.phased[other].clone(),
                };
                match Chase::new(&self.kb, variant)
                    .strategy(&strategy)
                    .max_steps(b.max_steps)
                    .run()
                {
                    Ok(d) => {
                        let v = match d.verdict {
                            Verdict::TerminatedFair => "terminating",
                            Verdict::TerminatedUnfair => "unfair",
                            Verdict::BudgetExhausted => "budget-exhausted",
                        };
                        let n = d.len();
                        (v, Some(d.deltas()), Some(d), Some(n))
                    }
                    Err(_) => ("unfair", None, None, None),
                }
            }
        };
        let mut problems = Vec::new();
        if verdict == e.verdict {
            if let Some(expected) = prefix {
                if !deltas
                    .as_deref()
                    .is_some_and(|d| prefix_matches(expected, d))
                {
                    problems.push("witness prefix differs");
                }
            }
            if let Some(expected) = result {
                if !found
                    .as_ref()
                    .is_some_and(|d: &Derivation| are_isomorphic(expected, &d.result))
                {
                    problems.push("result differs");
                }
            }
            if let Some(n) = e.steps {
                if length != Some(n) {
                    problems.push("length differs");
                }
            }
        }
        let mode = e.mode.name();
        let strategy = e
            .strategy
            .as_ref()
            .map(|s| format!("[{s}]"))
            .unwrap_or_default();
        let mut observed = format!("{mode}{strategy}:{verdict}");
        if let Some(n) = length {
            observed.push_str(&format!(" ({n} steps)"));
        }
        if !problems.is_empty() {
            observed.push_str(&format!(" — {}", problems.join(", ")));
        }
        ClassificationRow {
            fixture: self.fixture.id.clone(),
            variant: variant.to_string(),
            expected: format!("{mode}{strategy}:{}", e.verdict),
            observed,
            budget: b,
            pass: verdict == e.verdict && problems.is_empty(),
        }
    }
}

/// Do the first `expected.len()` deltas of `actual` match `expected`, with one renaming of nulls
/// shared by all steps?
pub fn prefix_matches(expected: &[Vec<Atom>], actual: &[Vec<Atom>]) -> bool {
    if actual.len() < expected.len() {
        return false;
    }
    let tagged = |steps: &[Vec<Atom>]| -> FactBase {
        steps
            .iter()
            .enumerate()
            .flat_map(|(i, d)| {
                d.iter()
                    .map(move |a| Atom::new(&format!("{}:{}", i + 1, a.predicate), a.args.clone()))
            })
            .collect()
    };
    are_isomorphic(&tagged(expected), &tagged(&actual[..expected.len()]))
}
