//! Triggers, chase variants and derivations.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Serialize, Serializer};

use crate::model::{Atom, FactBase, Rule, Symbol, Term};

/// When a trigger counts as applicable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Applicability {
    /// The same (rule, body match) was never applied.
    Oblivious,
    /// No trigger with the same (rule, frontier match) was applied.
    SemiOblivious,
    /// No retraction from `F ∪ out(t)` to `F`.
    Restricted,
    /// No homomorphism from `F ∪ out(t)` to `F`.
    Equivalent,
}

/// A chase variant: an applicability notion, optionally with Datalog-first priority.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ChaseVariant {
    pub base: Applicability,
    pub datalog_first: bool,
}

impl ChaseVariant {
    pub const O: ChaseVariant = ChaseVariant {
        base: Applicability::Oblivious,
        datalog_first: false,
    };
    pub const SO: ChaseVariant = ChaseVariant {
        base: Applicability::SemiOblivious,
        datalog_first: false,
    };
    pub const R: ChaseVariant = ChaseVariant {
        base: Applicability::Restricted,
        datalog_first: false,
    };
    pub const E: ChaseVariant = ChaseVariant {
        base: Applicability::Equivalent,
        datalog_first: false,
    };
    pub const DF_O: ChaseVariant = ChaseVariant {
        base: Applicability::Oblivious,
        datalog_first: true,
    };
    pub const DF_SO: ChaseVariant = ChaseVariant {
        base: Applicability::SemiOblivious,
        datalog_first: true,
    };
    pub const DF_R: ChaseVariant = ChaseVariant {
        base: Applicability::Restricted,
        datalog_first: true,
    };
    pub const DF_E: ChaseVariant = ChaseVariant {
        base: Applicability::Equivalent,
        datalog_first: true,
    };

    pub const ALL: [ChaseVariant; 8] = [
        ChaseVariant::O,
        ChaseVariant::SO,
        ChaseVariant::R,
        ChaseVariant::E,
        ChaseVariant::DF_O,
        ChaseVariant::DF_SO,
        ChaseVariant::DF_R,
        ChaseVariant::DF_E,
    ];

    /// The short lowercase name used on the command line (`o`, `so`, `dfr`, ...).
    pub fn short_name(&self) -> &'static str {
        match (self.datalog_first, self.base) {
            (false, Applicability::Oblivious) => "o",
            (false, Applicability::SemiOblivious) => "so",
            (false, Applicability::Restricted) => "r",
            (false, Applicability::Equivalent) => "e",
            (true, Applicability::Oblivious) => "dfo",
            (true, Applicability::SemiOblivious) => "dfso",
            (true, Applicability::Restricted) => "dfr",
            (true, Applicability::Equivalent) => "dfe",
        }
    }
}

impl fmt::Display for ChaseVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let base = match self.base {
            Applicability::Oblivious => "O",
            Applicability::SemiOblivious => "SO",
            Applicability::Restricted => "R",
            Applicability::Equivalent => "E",
        };
        if self.datalog_first {
            write!(f, "DF-{base}")
        } else {
            f.write_str(base)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("unknown chase variant '{0}' (expected one of o, so, r, e, dfo, dfso, dfr, dfe)")]
pub struct UnknownVariant(pub String);

impl FromStr for ChaseVariant {
    type Err = UnknownVariant;

    /// Accepts `r`, `R`, `dfr`, `DF-R`, `df_r` and so on.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_lowercase();
        ChaseVariant::ALL
            .into_iter()
            .find(|v| v.short_name() == norm)
            .ok_or_else(|| UnknownVariant(s.to_string()))
    }
}

impl Serialize for ChaseVariant {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// A rule together with a match of its body variables, stamped with the serial used to mint the
/// nulls of its output.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Trigger {
    rule: Arc<Rule>,
    image: Vec<Term>,
    serial: u64,
}

impl Trigger {
    /// `image[i]` is the image of `rule.body_variables()[i]`.
    pub fn new(rule: Arc<Rule>, image: Vec<Term>, serial: u64) -> Trigger {
        assert_eq!(
            image.len(),
            rule.body_variables().len(),
            "one image per body variable"
        );
        Trigger {
            rule,
            image,
            serial,
        }
    }

    /// Builds a trigger from a variable-name map; `None` if a body variable is unmapped.
    pub fn from_matching(
        rule: Arc<Rule>,
        matching: &BTreeMap<Symbol, Term>,
        serial: u64,
    ) -> Option<Trigger> {
        let image = rule
            .body_variables()
            .iter()
            .map(|v| matching.get(v).cloned())
            .collect::<Option<Vec<_>>>()?;
        Some(Trigger {
            rule,
            image,
            serial,
        })
    }

    pub fn rule(&self) -> &Arc<Rule> {
        &self.rule
    }

    pub fn image(&self) -> &[Term] {
        &self.image
    }

    pub fn serial(&self) -> u64 {
        self.serial
    }

    pub fn with_serial(&self, serial: u64) -> Trigger {
        Trigger {
            serial,
            ..self.clone()
        }
    }

    /// Body variable → term.
    pub fn matching(&self) -> BTreeMap<Symbol, Term> {
        self.rule
            .body_variables()
            .iter()
            .cloned()
            .zip(self.image.iter().cloned())
            .collect()
    }

    pub fn frontier_image(&self) -> Vec<Term> {
        self.rule
            .frontier()
            .iter()
            .map(|v| self.body_image(v).expect("frontier ⊆ body").clone())
            .collect()
    }

    fn body_image(&self, v: &Symbol) -> Option<&Term> {
        self.rule
            .body_variables()
            .binary_search(v)
            .ok()
            .map(|i| &self.image[i])
    }

    /// The null minted for existential variable `z`: `<rule id>#<serial>.<z>`.
    pub fn null_for(&self, z: &Symbol) -> Term {
        Term::null(&format!("{}#{}.{}", self.rule.id(), self.serial, z))
    }

    fn substitute(&self, atom: &Atom) -> Atom {
        atom.map_terms(|t| match t {
            Term::Variable(v) => match self.body_image(v) {
                Some(img) => img.clone(),
                None => self.null_for(v),
            },
            other => other.clone(),
        })
    }

    /// The body under the match.
    pub fn support(&self) -> Vec<Atom> {
        self.rule
            .body()
            .iter()
            .map(|a| self.substitute(a))
            .collect()
    }

    /// The head under the match extended with this trigger's nulls.
    pub fn output(&self) -> Vec<Atom> {
        self.rule
            .head()
            .iter()
            .map(|a| self.substitute(a))
            .collect()
    }
}

impl fmt::Display for Trigger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{{", self.rule.id())?;
        for (i, (v, t)) in self
            .rule
            .body_variables()
            .iter()
            .zip(&self.image)
            .enumerate()
        {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}->{t}")?;
        }
        f.write_str("}")
    }
}

/// Which triggers were applied: keyed by (rule, body match) and by (rule, frontier match).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct History {
    by_match: HashSet<(Symbol, Vec<Term>)>,
    by_frontier: HashSet<(Symbol, Vec<Term>)>,
}

impl History {
    pub fn new() -> History {
        History::default()
    }

    pub fn record(&mut self, t: &Trigger) {
        self.by_match.insert((t.rule.id().clone(), t.image.clone()));
        self.by_frontier
            .insert((t.rule.id().clone(), t.frontier_image()));
    }

    /// A trigger with the same rule and body match was applied.
    pub fn fired_same_match(&self, t: &Trigger) -> bool {
        self.by_match
            .contains(&(t.rule.id().clone(), t.image.clone()))
    }

    /// A trigger with the same rule and frontier match was applied.
    pub fn fired_same_frontier(&self, t: &Trigger) -> bool {
        self.by_frontier
            .contains(&(t.rule.id().clone(), t.frontier_image()))
    }

    pub fn len(&self) -> usize {
        self.by_match.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_match.is_empty()
    }

    /// The history as atoms over reserved predicates, so that it can take part in isomorphism
    /// checks alongside the fact base (nulls renamed consistently).
    pub(crate) fn as_atoms(&self, frontier_only: bool) -> Vec<Atom> {
        let set = if frontier_only {
            &self.by_frontier
        } else {
            &self.by_match
        };
        let tag = if frontier_only { "#so:" } else { "#o:" };
        set.iter()
            .map(|(r, img)| Atom::new(&format!("{tag}{r}"), img.clone()))
            .collect()
    }
}

/// How a derivation ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Verdict {
    /// No admissible trigger is left: the finite derivation is fair.
    TerminatedFair,
    /// The strategy stopped while admissible triggers remained.
    TerminatedUnfair,
    /// The step budget (or a homomorphism-search budget) ran out.
    BudgetExhausted,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Verdict::TerminatedFair => "TerminatedFair",
            Verdict::TerminatedUnfair => "TerminatedUnfair",
            Verdict::BudgetExhausted => "BudgetExhausted",
        };
        f.write_str(s)
    }
}

/// Work counters of one run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize)]
pub struct ChaseStats {
    /// Candidate triggers whose admissibility was checked.
    pub triggers_considered: u64,
    /// Applicability checks that needed a homomorphism search.
    pub hom_checks: u64,
}

/// One applied trigger and the atoms it added (`F_i \ F_{i-1}`, non-empty).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub trigger: Trigger,
    pub added: Vec<Atom>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Derivation {
    pub variant: ChaseVariant,
    pub initial: FactBase,
    pub steps: Vec<Step>,
    pub result: FactBase,
    pub verdict: Verdict,
    /// Why the run stopped, when that is not evident from the verdict.
    pub note: Option<String>,
    pub stats: ChaseStats,
}

impl Derivation {
    /// Number of applied triggers.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn is_terminating(&self) -> bool {
        self.verdict == Verdict::TerminatedFair
    }

    /// `F_i`; `F_0` is the initial fact base.
    pub fn factbase_at(&self, i: usize) -> FactBase {
        let mut fb = self.initial.clone();
        for step in &self.steps[..i] {
            for a in &step.added {
                fb.insert(a.clone());
            }
        }
        fb
    }

    pub fn deltas(&self) -> Vec<Vec<Atom>> {
        self.steps.iter().map(|s| s.added.clone()).collect()
    }
}
